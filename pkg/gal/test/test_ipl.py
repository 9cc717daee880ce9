"Tests for features, forests, fusion and the initial distribution"

import os
import shutil
import tempfile
import unittest

import numpy as np

from gal.config import Config
from gal.core import ( ConfigError, DegenerateInputError, DimensionError,
                       FormatError, ParameterError, Raster, isDistribution,
                       to3Class )
from gal.ipl import ( FEATURES, FusionModel, ForestModel, IplModels,
                      assembleInitial, extractFeatures, fineUnits,
                      fuseStage2, initialLabeling, loadModels,
                      majorityLabels, predictForest, readVerticalProbs,
                      trainForest, trainFusion, trainModels,
                      writeVerticalProbs )
from gal.scenes import generateScenes
from gal.segmentation import Segmentation, buildGraph


class FixedForest( object ):
    "Stand-in forest whose trees vote fixed leaf histograms"

    def __init__( self, leaves ):
        self.estimators_ = leaves
        self.classes_ = np.arange( len( leaves[ 0 ] ) )

    def predict_proba( self, features ):
        return np.tile( np.mean( self.estimators_, axis=0 ),
                        ( len( features ), 1 ) )


def smallConfig():
    "Configuration for quick runs on small scenes"
    return Config( slic__k=80, ipl__trees=10, ipl__depth=8 )


class testFeatures( unittest.TestCase ):

    def testUniformSegment( self ):
        img = Raster( np.full( ( 10, 10, 3 ), 0.4 ) )
        graph = buildGraph( Segmentation( np.zeros( ( 10, 10 ) ) ) )
        features = extractFeatures( img, graph )
        self.assertEqual( features.shape, ( 1, FEATURES ) )
        self.assertTrue( np.allclose( features[ 0, 3:6 ], 0.0 ) )
        self.assertTrue( np.allclose( features[ 0, 9:17 ], 1.0 / 8 ) )
        self.assertEqual( features[ 0, 18 ], 1.0 )

    def testCornerCentroid( self ):
        ids = np.ones( ( 10, 10 ) )
        ids[ 0, 0 ] = 0
        graph = buildGraph( Segmentation.fromIds( ids ) )
        img = Raster( np.random.default_rng( 1 ).random( ( 10, 10, 3 ) ) )
        features = extractFeatures( img, graph )
        corner = graph.labels[ 0, 0 ]
        self.assertTrue( np.allclose( features[ corner, 6:8 ], ( 0.05, 0.05 ) ) )
        self.assertTrue( np.all( np.isfinite( features ) ) )
        self.assertTrue( np.allclose( features[ :, 9:17 ].sum( axis=1 ), 1.0 ) )

    def testColourSpread( self ):
        ids = np.zeros( ( 12, 12 ) )
        ids[ :, 6: ] = 1
        graph = buildGraph( Segmentation.fromIds( ids ) )
        rng = np.random.default_rng( 2 )
        data = 0.9 + 1e-4 * rng.random( ( 12, 12, 3 ) )
        features = extractFeatures( Raster( data ), graph )
        for segment in range( len( graph ) ):
            pixels = data[ graph.labels == segment ]
            self.assertTrue( np.allclose( features[ segment, 3:6 ],
                                          pixels.std( axis=0 ), rtol=1e-6,
                                          atol=1e-12 ) )

    def testDimensionMismatch( self ):
        graph = buildGraph( Segmentation( np.zeros( ( 4, 4 ) ) ) )
        self.assertRaises( DimensionError, extractFeatures,
                           Raster( np.zeros( ( 5, 4 ) ) ), graph )

    def testMajority( self ):
        graph = buildGraph( Segmentation( [ [ 0, 0, 0, 1 ] ] ) )
        labels = majorityLabels( graph, [ [ 2, 2, 1, -1 ] ], 3 )
        self.assertEqual( labels.tolist(), [ 2, 0 ] )


class testForest( unittest.TestCase ):

    def testSeparable( self ):
        rng = np.random.default_rng( 2 )
        X = rng.normal( size=( 200, 4 ) )
        y = ( X[ :, 0 ] + X[ :, 1 ] > 0 ).astype( int )
        model = trainForest( X, y, trees=20, depth=8, classes=3 )
        accuracy = np.mean( np.argmax( predictForest( model, X ), axis=1 ) == y )
        self.assertGreaterEqual( accuracy, 0.95 )

    def testSingleSample( self ):
        model = trainForest( [ [ 0.5, 0.5 ] ], [ 2 ], trees=3, classes=3 )
        self.assertEqual( predictForest( model, [ 0.5, 0.5 ] ).tolist(),
                          [ [ 0.0, 0.0, 1.0 ] ] )

    def testErrors( self ):
        self.assertRaises( ParameterError, trainForest, [ [ 1.0 ] ], [ 0 ], 0 )
        self.assertRaises( DegenerateInputError, trainForest,
                           np.zeros( ( 0, 3 ) ), [] )
        model = trainForest( [ [ 0.0, 1.0 ] ], [ 0 ], trees=2 )
        self.assertRaises( DimensionError, predictForest, model, [ 1.0 ] )

    def testAveraging( self ):
        unanimous = ForestModel( FixedForest( [ [ 1, 0, 0 ] ] * 4 ), 3, 2 )
        self.assertEqual( predictForest( unanimous, [ 0, 0 ] ).tolist(),
                          [ [ 1, 0, 0 ] ] )
        split = ForestModel( FixedForest( [ [ 1, 0, 0 ], [ 0, 1, 0 ] ] ), 3, 2 )
        self.assertEqual( predictForest( split, [ 0, 0 ] ).tolist(),
                          [ [ 0.5, 0.5, 0.0 ] ] )

    def testSumsToOne( self ):
        rng = np.random.default_rng( 3 )
        X = rng.random( ( 60, 5 ) )
        model = trainForest( X, rng.integers( 0, 3, 60 ), trees=5 )
        self.assertTrue( isDistribution( predictForest( model,
                                                        rng.random( ( 1000, 5 ) ) ) ) )

    def testDeterministic( self ):
        rng = np.random.default_rng( 4 )
        X, y = rng.random( ( 50, 3 ) ), rng.integers( 0, 3, 50 )
        a = predictForest( trainForest( X, y, trees=5, seed=9 ), X )
        b = predictForest( trainForest( X, y, trees=5, seed=9 ), X )
        self.assertTrue( np.array_equal( a, b ) )


class testFusion( unittest.TestCase ):

    def testUnanimousSky( self ):
        weights = np.hstack( [ np.eye( 3 ) ] * 3 )
        stage1 = np.array( [ [ 0, 0, 1 ] * 3 ] )
        p = fuseStage2( stage1, FusionModel( weights ) )
        self.assertEqual( int( np.argmax( p ) ), 2 )

    def testZeroWeights( self ):
        p = fuseStage2( np.random.default_rng( 5 ).random( ( 4, 9 ) ),
                        FusionModel() )
        self.assertTrue( np.allclose( p, 1.0 / 3 ) )

    def testBadWeights( self ):
        self.assertRaises( ParameterError, FusionModel, np.zeros( ( 2, 9 ) ) )

    def testSingleClass( self ):
        model = trainFusion( np.random.default_rng( 6 ).random( ( 5, 9 ) ),
                             [ 1 ] * 5 )
        p = fuseStage2( np.full( ( 1, 9 ), 0.3 ), model )
        self.assertGreater( p[ 0, 1 ], 0.999 )

    def testTwoClasses( self ):
        stage1 = np.array( [ [ 1, 0, 0 ] * 3 ] * 10 + [ [ 0, 0, 1 ] * 3 ] * 10,
                           dtype=float )
        labels = [ 0 ] * 10 + [ 2 ] * 10
        p = fuseStage2( stage1, trainFusion( stage1, labels ) )
        self.assertEqual( np.argmax( p, axis=1 ).tolist(), labels )
        self.assertTrue( np.all( p[ :, 1 ] < 1e-6 ) )


class testAssembleInitial( unittest.TestCase ):

    def testSupport( self ):
        out = assembleInitial( [ [ 1, 0, 0 ] ], np.full( ( 1, 5 ), 0.2 ) )
        self.assertEqual( out.tolist(), [ [ 1, 0, 0, 0, 0, 0, 0 ] ] )

    def testVertical( self ):
        out = assembleInitial( [ [ 0, 1, 0 ] ], np.full( ( 1, 5 ), 0.2 ) )
        self.assertTrue( np.allclose( out, [ [ 0, 0.2, 0.2, 0.2, 0.2, 0.2, 0 ] ] ) )

    def testMassPreserved( self ):
        rng = np.random.default_rng( 7 )
        p3 = rng.dirichlet( np.ones( 3 ), 200 )
        v5 = rng.dirichlet( np.ones( 5 ), 200 )
        out = assembleInitial( p3, v5 )
        self.assertTrue( isDistribution( out ) )
        self.assertTrue( np.allclose( out[ :, 1:6 ].sum( axis=1 ), p3[ :, 1 ] ) )
        self.assertTrue( np.array_equal( out[ :, [ 0, 6 ] ], p3[ :, [ 0, 2 ] ] ) )

    def testErrors( self ):
        self.assertRaises( ConfigError, assembleInitial, [ [ 1, 0, 0 ] ], None )
        self.assertRaises( DimensionError, assembleInitial, [ [ 1, 0, 0 ] ],
                           np.full( ( 2, 5 ), 0.2 ) )
        self.assertRaises( ParameterError, assembleInitial, [ [ 1, 0, 0 ] ],
                           np.full( ( 1, 5 ), 0.5 ) )


class testVerticalProbs( unittest.TestCase ):

    def setUp( self ):
        self.tmp = tempfile.mkdtemp()
        self.path = os.path.join( self.tmp, 'v.txt' )

    def tearDown( self ):
        shutil.rmtree( self.tmp )

    def write( self, text ):
        with open( self.path, 'w' ) as f:
            f.write( text )

    def testReadNormalizes( self ):
        self.write( '# id left center right porous solid\n'
                    '1 0 0 2 0 2\n0 1 1 1 1 1\n' )
        rows = readVerticalProbs( self.path, 2 )
        self.assertTrue( np.allclose( rows, [ [ 0.2 ] * 5,
                                              [ 0, 0, 0.5, 0, 0.5 ] ] ) )

    def testWriteRead( self ):
        rows = np.random.default_rng( 8 ).dirichlet( np.ones( 5 ), 4 )
        writeVerticalProbs( rows, self.path )
        self.assertTrue( np.allclose( readVerticalProbs( self.path, 4 ), rows,
                                      atol=1e-5 ) )

    def testErrors( self ):
        for text in ( '0 1 1 1 1\n', '0 a 1 1 1 1\n', '5 1 1 1 1 1\n',
                      '0 0 0 0 0 0\n' ):
            self.write( text )
            self.assertRaises( FormatError, readVerticalProbs, self.path, 1 )
        self.write( '0 1 1 1 1 1\n' )
        self.assertRaises( FormatError, readVerticalProbs, self.path, 2 )


class testModels( unittest.TestCase ):

    @classmethod
    def setUpClass( cls ):
        cls.config = smallConfig()
        scenes = generateScenes( 3, 10, width=160, height=120 )
        cls.models = trainModels( [ ( s.image, s.truth ) for s in scenes ],
                                  cls.config )
        cls.held = generateScenes( 77, 5, width=160, height=120 )

    def testThreeClassAccuracy( self ):
        correct = total = 0
        for scene in self.held:
            ipl = initialLabeling( scene.image, self.config, self.models )
            truth = to3Class( scene.truth.codes )
            correct += int( np.sum( ipl.labels3 == truth ) )
            total += truth.size
        self.assertGreaterEqual( correct / float( total ), 0.8 )

    def testInitialIsDistribution( self ):
        ipl = initialLabeling( self.held[ 1 ].image, self.config, self.models )
        self.assertEqual( ipl.initial.shape, ( len( ipl.graph ), 7 ) )
        self.assertTrue( isDistribution( ipl.initial ) )
        self.assertEqual( ipl.stage1.shape, ( len( ipl.graph ), 9 ) )
        self.assertEqual( len( ipl.segmentations ), 3 )

    def testVerticalOverride( self ):
        img = self.held[ 2 ].image
        n = len( fineUnits( img, self.config ) )
        vertical5 = np.tile( [ 0, 1.0, 0, 0, 0 ], ( n, 1 ) )
        ipl = initialLabeling( img, self.config, self.models, vertical5 )
        self.assertTrue( np.allclose( ipl.initial[ :, 2 ], ipl.p3[ :, 1 ] ) )
        self.assertTrue( np.allclose( ipl.initial[ :, [ 1, 3, 4, 5 ] ], 0.0 ) )

    def testSaveLoad( self ):
        tmp = tempfile.mkdtemp()
        try:
            path = os.path.join( tmp, 'models.pkl' )
            self.models.save( path )
            loaded = loadModels( path )
            self.assertIsInstance( loaded, IplModels )
            img = self.held[ 0 ].image
            a = initialLabeling( img, self.config, self.models ).initial
            b = initialLabeling( img, self.config, loaded ).initial
            self.assertTrue( np.array_equal( a, b ) )
            junk = os.path.join( tmp, 'junk.pkl' )
            with open( junk, 'wb' ) as f:
                f.write( b'not a pickle' )
            self.assertRaises( ConfigError, loadModels, junk )
        finally:
            shutil.rmtree( tmp )

    def testNoVerticalModel( self ):
        models = IplModels( self.models.forests, self.models.fusion, None )
        self.assertRaises( ConfigError, initialLabeling, self.held[ 0 ].image,
                           self.config, models )


if __name__ == '__main__':
    unittest.main()
