"Tests for the labeling pipeline and its output files"

import os
import shutil
import tempfile
import unittest

import numpy as np

from gal.config import Config
from gal.core import ( DimensionError, FormatError, LabelMap, Raster,
                       readLabelMap, readRaster, to3Class, writeRaster )
from gal.crf import CrfParams, CrfSample, writeParams
from gal.ipl import fineUnits, trainModels, writeVerticalProbs
from gal.pipeline import ( LayoutPipeline, LayoutResult, processImage,
                           renderOverlay, runPipeline, trainingSamples,
                           writeEvidence, writeResult )
from gal.scenes import generateScene, generateScenes, readDataset, writeScene


def smallConfig():
    return Config( slic__k=80, ipl__trees=10, ipl__depth=8 )

def smallModels( config ):
    scenes = generateScenes( 5, 10, width=160, height=120 )
    return trainModels( [ ( s.image, s.truth ) for s in scenes ], config )


class testOverlay( unittest.TestCase ):

    def testSkyOnBlack( self ):
        img = Raster( np.zeros( ( 3, 4, 3 ) ) )
        overlay = renderOverlay( img, LabelMap( np.full( ( 3, 4 ), 6 ) ) )
        expected = 0.5 * np.array( ( 135, 206, 235 ) ) / 255.0
        self.assertTrue( np.allclose( overlay.pixels(), expected ) )

    def testGrayImage( self ):
        img = Raster( np.ones( ( 2, 2 ) ) )
        overlay = renderOverlay( img, LabelMap( np.zeros( ( 2, 2 ) ) ) )
        self.assertEqual( overlay.channels, 3 )
        self.assertTrue( np.allclose( overlay.pixels(), 0.5 ) )

    def testSizeMismatch( self ):
        self.assertRaises( DimensionError, renderOverlay,
                           Raster( np.zeros( ( 3, 4 ) ) ),
                           LabelMap( np.zeros( ( 4, 3 ) ) ) )


class testPipeline( unittest.TestCase ):

    @classmethod
    def setUpClass( cls ):
        cls.config = smallConfig()
        cls.models = smallModels( cls.config )
        cls.scene = generateScene( 'occluded', 21, width=160, height=120 )

    def setUp( self ):
        self.tmp = tempfile.mkdtemp()

    def tearDown( self ):
        shutil.rmtree( self.tmp )

    def testLabel( self ):
        pipeline = LayoutPipeline( self.config, self.models )
        result = pipeline.label( self.scene.image, self.scene.boxes )
        self.assertIsInstance( result, LayoutResult )
        self.assertEqual( result.labels.shape, self.scene.image.shape )
        self.assertEqual( result.initialLabels.shape, self.scene.image.shape )
        self.assertEqual( len( result.gav.vector ), 7 )
        energies = [ e for _, _, e in result.trace ]
        self.assertTrue( all( b <= a + 1e-9 for a, b in zip( energies, energies[ 1: ] ) ) )
        self.assertEqual( result.refinement.energy, energies[ -1 ] )

    def testDeterministic( self ):
        params = CrfParams( [ 0.6, 0.1, 0.1, 0.1, 0.1 ], 0.05 )
        first = runPipeline( self.scene.image, self.config, self.scene.boxes,
                             params=params, models=self.models )
        second = runPipeline( self.scene.image, self.config, self.scene.boxes,
                              params=params, models=self.models )
        self.assertEqual( first.labels, second.labels )
        self.assertEqual( first.gav.vector, second.gav.vector )

    def testReuseStages( self ):
        pipeline = LayoutPipeline( self.config, self.models )
        img = self.scene.image
        ipl, ev = pipeline.initial( img ), pipeline.evidence( img )
        result = pipeline.label( img, enabled=(), ipl=ipl, ev=ev )
        self.assertIs( result.ipl, ipl )
        self.assertIs( result.evidence, ev )
        self.assertEqual( result.gav.vector, ( 0, ) * 7 )
        self.assertEqual( pipeline.baseline( ipl ), result.initialLabels )

    def testWriteResult( self ):
        img = self.scene.image
        result = LayoutPipeline( self.config, self.models ).label( img )
        written = writeResult( result, img, self.tmp, 'street' )
        self.assertEqual( [ os.path.basename( p ) for p in written ],
                          [ 'street_codes.pgm', 'street_colors.ppm',
                            'street_overlay.ppm', 'street_gav.txt',
                            'street_energy.txt' ] )
        self.assertEqual( readLabelMap( written[ 0 ] ), result.labels )
        self.assertEqual( readRaster( written[ 1 ] ).shape, img.shape )
        with open( written[ 3 ] ) as f:
            self.assertEqual( f.read(), result.gav.report() )
        with open( written[ 4 ] ) as f:
            self.assertEqual( len( f.read().splitlines() ), len( result.trace ) )

    def testWriteEvidence( self ):
        img = self.scene.image
        result = LayoutPipeline( self.config, self.models ).label( img )
        written = writeEvidence( result, self.tmp, 'street' )
        self.assertEqual( [ os.path.basename( p ) for p in written ],
                          [ 'street_segments.txt', 'street_pline.pgm',
                            'street_edge.pgm', 'street_defocus.pgm',
                            'street_units.pgm' ] )
        with open( written[ 0 ] ) as f:
            lines = f.read().splitlines()
        self.assertEqual( len( lines ), len( result.evidence.segments ) )
        self.assertTrue( all( len( line.split() ) == 6 for line in lines ) )
        pline = readRaster( written[ 1 ] )
        self.assertEqual( pline.channels, 1 )
        self.assertLessEqual( np.abs( pline.pixels() - result.maps.line ).max(),
                              0.5 / 255 + 1e-9 )
        units = readRaster( written[ 4 ] )
        self.assertEqual( units.shape, img.shape )

    def testProcessImage( self ):
        imagePath = os.path.join( self.tmp, 'scene7.ppm' )
        writeRaster( self.scene.image, imagePath )
        modelsPath = os.path.join( self.tmp, 'models.pkl' )
        self.models.save( modelsPath )
        paramsPath = os.path.join( self.tmp, 'params.txt' )
        writeParams( CrfParams(), paramsPath )
        n = len( fineUnits( self.scene.image, self.config ) )
        verticalPath = os.path.join( self.tmp, 'scene7_vprobs.txt' )
        writeVerticalProbs( np.full( ( n, 5 ), 0.2 ), verticalPath )
        outdir = os.path.join( self.tmp, 'out' )
        result = processImage( imagePath, self.config, outdir,
                               verticalPath=verticalPath,
                               paramsPath=paramsPath, modelsPath=modelsPath )
        self.assertEqual( readLabelMap( os.path.join( outdir, 'scene7_codes.pgm' ) ),
                          result.labels )
        self.assertTrue( np.allclose( result.ipl.initial[ :, 1:6 ].sum( axis=1 ),
                                      result.ipl.p3[ :, 1 ] ) )

    def testBadVerticalProbs( self ):
        imagePath = os.path.join( self.tmp, 'scene8.ppm' )
        writeRaster( self.scene.image, imagePath )
        verticalPath = os.path.join( self.tmp, 'v.txt' )
        writeVerticalProbs( np.full( ( 2, 5 ), 0.2 ), verticalPath )
        modelsPath = os.path.join( self.tmp, 'models.pkl' )
        self.models.save( modelsPath )
        self.assertRaises( FormatError, processImage, imagePath, self.config,
                           self.tmp, verticalPath=verticalPath,
                           modelsPath=modelsPath )

    def testTrainingSamples( self ):
        for index, kind in enumerate( ( 'alley', 'horizon-only' ) ):
            writeScene( generateScene( kind, 30 + index, width=160, height=120 ),
                        self.tmp, 'scene%d' % index )
        pipeline = LayoutPipeline( self.config, self.models )
        samples = trainingSamples( readDataset( self.tmp ), pipeline )
        self.assertEqual( len( samples ), 2 )
        for sample in samples:
            self.assertIsInstance( sample, CrfSample )
            self.assertEqual( sample.truth.shape, ( 120, 160 ) )
            self.assertEqual( sample.segmentTruth.shape, ( len( sample.graph ), ) )


class testEndToEnd( unittest.TestCase ):
    "Trained pipeline scored on a held-out synthetic corpus"

    @classmethod
    def setUpClass( cls ):
        config = smallConfig()
        scenes = generateScenes( 70, 16, width=160, height=120 )
        models = trainModels( [ ( s.image, s.truth ) for s in scenes ], config )
        pipeline = LayoutPipeline( config, models )
        cls.hits = dict( refined=0, initial=0, refined3=0, fused3=0 )
        cls.sources = np.zeros( 3 )
        cls.total = 0
        for scene in generateScenes( 71, 20, width=160, height=120 ):
            truth = scene.truth.codes
            truth3 = to3Class( truth )
            ipl = pipeline.initial( scene.image )
            result = pipeline.label( scene.image, scene.boxes, ipl=ipl )
            cls.hits[ 'refined' ] += np.count_nonzero( result.labels.codes == truth )
            cls.hits[ 'initial' ] += np.count_nonzero(
                pipeline.baseline( ipl ).codes == truth )
            cls.hits[ 'refined3' ] += np.count_nonzero(
                to3Class( result.labels.codes ) == truth3 )
            cls.hits[ 'fused3' ] += np.count_nonzero( ipl.labels3 == truth3 )
            for k in range( 3 ):
                single = np.argmax( ipl.stage1[ :, 3 * k:3 * k + 3 ], axis=1 )
                cls.sources[ k ] += np.count_nonzero(
                    ipl.graph.paint( single ) == truth3 )
            cls.total += truth.size

    def accuracy( self, name ):
        return self.hits[ name ] / float( self.total )

    def testRefinedAccuracy( self ):
        self.assertGreaterEqual( self.accuracy( 'refined' ), 0.7 )
        self.assertGreaterEqual( self.accuracy( 'refined3' ), 0.85 )

    def testRefinementHelps( self ):
        self.assertGreaterEqual( self.accuracy( 'refined' ),
                                 self.accuracy( 'initial' ) - 0.005 )

    def testFusionBeatsSingleSources( self ):
        best = self.sources.max() / self.total
        self.assertGreaterEqual( self.accuracy( 'fused3' ), best - 0.01 )



if __name__ == '__main__':
    unittest.main()
