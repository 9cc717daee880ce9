"Tests for label map evaluation and the attribute ablation"

import os
import shutil
import tempfile
import unittest

import numpy as np

from gal.config import Config
from gal.core import DimensionError, GeometricClass, LabelMap, writeLabelMap
from gal.evaluate import ( ABLATION_STEPS, AblationTable, EvalReport, ablate,
                           confusionMatrix, evaluate, labelFiles )
from gal.ipl import trainModels
from gal.scenes import generateScenes, readDataset


def writeCodes( codes, path ):
    writeLabelMap( LabelMap( codes ), 'codes', path )


class testConfusion( unittest.TestCase ):

    def testTally( self ):
        rng = np.random.default_rng( 2 )
        truth = rng.integers( 0, 7, ( 12, 9 ) )
        pred = rng.integers( 0, 7, ( 12, 9 ) )
        expected = np.zeros( ( 7, 7 ), dtype=int )
        for t, p in zip( truth.ravel(), pred.ravel() ):
            expected[ t, p ] += 1
        self.assertEqual( confusionMatrix( truth, pred ).tolist(),
                          expected.tolist() )

    def testMismatch( self ):
        self.assertRaises( DimensionError, confusionMatrix,
                           np.zeros( ( 2, 3 ) ), np.zeros( ( 3, 2 ) ) )


class testReport( unittest.TestCase ):

    def testQuarterWrong( self ):
        truth = np.zeros( ( 10, 10 ), dtype=int )
        pred = truth.copy()
        pred[ :5, :5 ] = GeometricClass.SKY
        report = EvalReport().add( 'x', truth, pred )
        self.assertAlmostEqual( report.overall, 0.75 )
        self.assertAlmostEqual( report.perClass[ GeometricClass.SUPPORT ], 0.75 )
        self.assertTrue( np.isnan( report.perClass[ GeometricClass.SKY ] ) )
        self.assertTrue( np.isnan( report.accuracy5 ) )
        self.assertEqual( report.images, [ ( 'x', 0.75 ) ] )

    def testVerticalAccuracy( self ):
        truth = np.array( [ [ 1, 2, 3, 6 ] ] )
        pred = np.array( [ [ 1, 3, 3, 0 ] ] )
        report = EvalReport().add( 'v', truth, pred )
        self.assertAlmostEqual( report.accuracy5, 2.0 / 3 )
        self.assertAlmostEqual( report.overall, 0.5 )

    def testMerge( self ):
        a = EvalReport().add( 'a', np.zeros( ( 2, 2 ) ), np.zeros( ( 2, 2 ) ) )
        b = EvalReport().add( 'b', np.zeros( ( 2, 2 ) ), np.ones( ( 2, 2 ) ) )
        b.skip( 'c', 'no prediction' )
        a.merge( b )
        self.assertEqual( a.total, 8 )
        self.assertAlmostEqual( a.overall, 0.5 )
        self.assertEqual( [ s for s, _ in a.images ], [ 'a', 'b' ] )
        self.assertEqual( a.skipped, [ ( 'c', 'no prediction' ) ] )

    def testKeyValues( self ):
        report = EvalReport().add( 'a', np.zeros( ( 2, 2 ) ), np.zeros( ( 2, 2 ) ) )
        pairs = dict( line.split( ' ', 1 ) for line in
                      report.keyvalues().splitlines() )
        self.assertEqual( pairs[ 'images' ], '1' )
        self.assertEqual( pairs[ 'overall' ], '1.000000' )
        self.assertEqual( pairs[ 'accuracy5' ], 'nan' )
        self.assertEqual( pairs[ 'class.support' ], '1.000000' )
        self.assertEqual( pairs[ 'confusion.0' ], '4 0 0 0 0 0 0' )
        self.assertEqual( pairs[ 'image.a' ], '1.000000' )
        self.assertIn( 'overall accuracy', report.text() )

    def testEmpty( self ):
        report = EvalReport()
        self.assertEqual( report.total, 0 )
        self.assertTrue( np.isnan( report.overall ) )


class testEvaluate( unittest.TestCase ):

    def setUp( self ):
        self.tmp = tempfile.mkdtemp()
        self.truthDir = os.path.join( self.tmp, 'truth' )
        self.predDir = os.path.join( self.tmp, 'pred' )
        os.makedirs( self.truthDir )
        os.makedirs( self.predDir )

    def tearDown( self ):
        shutil.rmtree( self.tmp )

    def testLabelFiles( self ):
        for name in ( 'a.pgm', 'a_codes.pgm', 'b.pgm', 'b_colors.ppm',
                      'c_truth.pgm', 'notes.txt' ):
            open( os.path.join( self.predDir, name ), 'w' ).close()
        found = labelFiles( self.predDir, ( '_codes', '' ) )
        self.assertEqual( sorted( found ), [ 'a', 'b' ] )
        self.assertTrue( found[ 'a' ].endswith( 'a_codes.pgm' ) )
        self.assertTrue( found[ 'b' ].endswith( 'b.pgm' ) )

    def testSelf( self ):
        rng = np.random.default_rng( 3 )
        for k in range( 3 ):
            writeCodes( rng.integers( 0, 7, ( 8, 6 ) ),
                        os.path.join( self.truthDir, 'img%d_truth.pgm' % k ) )
        report = evaluate( self.truthDir, self.truthDir )
        self.assertEqual( len( report.images ), 3 )
        self.assertEqual( report.skipped, [] )
        self.assertEqual( report.overall, 1.0 )

    def testSkippedPairs( self ):
        writeCodes( np.zeros( ( 4, 4 ) ), os.path.join( self.truthDir, 'a_truth.pgm' ) )
        writeCodes( np.zeros( ( 4, 4 ) ), os.path.join( self.truthDir, 'b_truth.pgm' ) )
        writeCodes( np.zeros( ( 4, 4 ) ), os.path.join( self.truthDir, 'c_truth.pgm' ) )
        writeCodes( np.zeros( ( 4, 4 ) ), os.path.join( self.predDir, 'a_codes.pgm' ) )
        writeCodes( np.zeros( ( 5, 4 ) ), os.path.join( self.predDir, 'b_codes.pgm' ) )
        writeCodes( np.zeros( ( 4, 4 ) ), os.path.join( self.predDir, 'z_codes.pgm' ) )
        report = evaluate( self.predDir, self.truthDir )
        self.assertEqual( [ s for s, _ in report.images ], [ 'a' ] )
        self.assertEqual( [ s for s, _ in report.skipped ], [ 'b', 'c' ] )
        self.assertEqual( report.skipped[ 1 ][ 1 ], 'no prediction' )
        self.assertEqual( report.total, 16 )


class testAblation( unittest.TestCase ):

    def testTable( self ):
        table = AblationTable()
        self.assertEqual( len( table.names ), 7 )
        for k, report in enumerate( table.reports ):
            pred = np.zeros( ( 2, 5 ) )
            pred[ 0, :k % 5 ] = 6
            report.add( 'x', np.zeros( ( 2, 5 ) ), pred )
        acc = table.accuracies
        self.assertAlmostEqual( acc[ 0 ], 1.0 )
        self.assertAlmostEqual( acc[ 1 ], 0.9 )
        self.assertIsNone( table.deltas[ 0 ] )
        self.assertAlmostEqual( table.deltas[ 1 ], -0.1 )
        lines = table.text().splitlines()
        self.assertTrue( lines[ 0 ].startswith( 'Global attribute' ) )
        self.assertIn( 'IPL only', lines[ 1 ] )
        self.assertIn( '-10.00%', lines[ 2 ] )
        self.assertEqual( len( lines ), 8 )

    def testSteps( self ):
        enabled = [ set( e or () ) for _, e in ABLATION_STEPS ]
        self.assertEqual( enabled[ 0 ], set() )
        for a, b in zip( enabled, enabled[ 1: ] ):
            self.assertTrue( a < b )
        self.assertEqual( len( enabled[ -1 ] ), 7 )

    def testAblate( self ):
        config = Config( slic__k=80, ipl__trees=10, ipl__depth=8 )
        scenes = generateScenes( 11, 8, width=160, height=120 )
        models = trainModels( [ ( s.image, s.truth ) for s in scenes ], config )
        tmp = tempfile.mkdtemp()
        try:
            generateScenes( 12, 2, kinds=( 'corner-building', 'occluded' ),
                            outdir=tmp, width=160, height=120 )
            table = ablate( readDataset( tmp ), config, models )
        finally:
            shutil.rmtree( tmp )
        self.assertEqual( len( table.accuracies ), len( ABLATION_STEPS ) )
        for report in table.reports:
            self.assertEqual( len( report.images ), 2 )
            self.assertEqual( report.total, 2 * 160 * 120 )
            self.assertTrue( 0.0 <= report.overall <= 1.0 )


if __name__ == '__main__':
    unittest.main()
