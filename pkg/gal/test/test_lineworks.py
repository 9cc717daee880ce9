"Tests for line segments, edge and defocus evidence"

import os
import tempfile
import unittest

import cv2
import numpy as np
from scipy import ndimage

from gal.config import Config
from gal.core import ParameterError, Raster
from gal.lineworks import ( LineSegment, computeEvidence, defocusMap,
                            detectSegments, edgeProbability, lineMap,
                            verticalLineScore, writeSegments )
from gal.scenes import generateScene


def stepImage( size=64 ):
    data = np.zeros( ( size, size ) )
    data[ :, size // 2: ] = 1.0
    return Raster( data )

def stripes( height=128, width=128, period=16 ):
    """Vertical black and white stripes, the outer ones half as wide so
       that no pixel is far from an edge"""
    half = period // 2
    row = ( ( ( np.arange( width ) + half // 2 ) // half ) % 2 ).astype( float )
    return np.tile( row, ( height, 1 ) )


class testLineSegment( unittest.TestCase ):

    def testGeometry( self ):
        s = LineSegment( 3, 0, 3, 10 )
        self.assertEqual( s.length, 10.0 )
        self.assertEqual( s.angle, 90.0 )
        self.assertTrue( s.isVertical() )
        self.assertFalse( s.isHorizontal() )
        self.assertEqual( s.midpoint, ( 3.0, 5.0 ) )

    def testEndpointOrder( self ):
        a, b = LineSegment( 0, 0, 10, 4 ), LineSegment( 10, 4, 0, 0 )
        self.assertEqual( a, b )
        self.assertEqual( a.angle, b.angle )

    def testWriteSegments( self ):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join( tmp, 'street_segments.txt' )
            writeSegments( [ LineSegment( 1, 2, 11, 2 ), LineSegment( 3, 10, 3, 0 ) ],
                           path )
            with open( path ) as f:
                self.assertEqual( f.read(), '1.00 2.00 11.00 2.00 10.00 0.00\n'
                                            '3.00 0.00 3.00 10.00 10.00 90.00\n' )

    def testHomogeneous( self ):
        a, b, c = LineSegment( 0, 2, 10, 2 ).homogeneous()
        # the line y = 2
        self.assertAlmostEqual( a, 0.0 )
        self.assertAlmostEqual( -c / b, 2.0 )


class testDetectSegments( unittest.TestCase ):

    def testStep( self ):
        segments = detectSegments( stepImage() )
        self.assertTrue( segments )
        longest = max( segments, key=lambda s: s.length )
        self.assertLessEqual( abs( longest.angle - 90.0 ), 1.0 )
        self.assertGreater( longest.length, 40 )

    def testUniform( self ):
        self.assertEqual( detectSegments( Raster( np.full( ( 32, 32 ), 0.4 ) ) ),
                          [] )

    def testWireframe( self ):
        drawn = [ ( 20, 20, 120, 30 ), ( 30, 60, 30, 180 ), ( 80, 80, 170, 170 ),
                  ( 60, 190, 180, 190 ), ( 170, 20, 140, 100 ) ]
        canvas = np.full( ( 200, 200 ), 255, dtype=np.uint8 )
        for x1, y1, x2, y2 in drawn:
            cv2.line( canvas, ( x1, y1 ), ( x2, y2 ), 0, 1 )
        found = detectSegments( Raster( canvas / 255.0 ) )
        recalled = 0
        for x1, y1, x2, y2 in drawn:
            for s in found:
                ends = np.array( [ [ s.x1, s.y1 ], [ s.x2, s.y2 ] ] )
                for p, q in ( ( ( x1, y1 ), ( x2, y2 ) ),
                              ( ( x2, y2 ), ( x1, y1 ) ) ):
                    if ( np.hypot( *( ends[ 0 ] - p ) ) <= 3 and
                         np.hypot( *( ends[ 1 ] - q ) ) <= 3 ):
                        break
                else:
                    continue
                recalled += 1
                break
        self.assertGreaterEqual( recalled, 4 )

    def testMinLength( self ):
        for s in detectSegments( stepImage(), minLength=30 ):
            self.assertGreaterEqual( s.length, 30 )

    def testLineMap( self ):
        lines = lineMap( [ LineSegment( 0, 0, 4, 0 ),
                           LineSegment( -5, 2, 1, 2 ) ], ( 3, 5 ) )
        self.assertEqual( lines.tolist(),
                          [ [ 1, 1, 1, 1, 1 ], [ 0 ] * 5, [ 1, 1, 0, 0, 0 ] ] )


class testEdgeProbability( unittest.TestCase ):

    def testUniform( self ):
        edge = edgeProbability( Raster( np.full( ( 16, 16 ), 0.7 ) ) )
        self.assertFalse( edge.any() )

    def testStepRidge( self ):
        edge = edgeProbability( stepImage() )
        self.assertAlmostEqual( edge.max(), 1.0 )
        columns = np.flatnonzero( edge.any( axis=0 ) )
        self.assertTrue( set( columns.tolist() ) <= { 31, 32 } )

    def testRange( self ):
        rng = np.random.default_rng( 8 )
        for _ in range( 5 ):
            edge = edgeProbability( Raster( rng.random( ( 24, 24, 3 ) ) ) )
            self.assertTrue( edge.min() >= 0 and edge.max() <= 1 )


class testDefocus( unittest.TestCase ):

    def testUniform( self ):
        self.assertFalse( defocusMap( Raster( np.full( ( 32, 32 ), 0.2 ) ) ).any() )

    def testSharpEverywhere( self ):
        pdf = defocusMap( Raster( stripes() ) )
        self.assertLess( pdf.max(), 0.2 )

    def testSharpScene( self ):
        data = np.full( ( 96, 128 ), 0.3 )
        data[ :, 40:88 ] = 0.8
        self.assertLess( defocusMap( Raster( data ) ).max(), 0.2 )
        pdf = defocusMap( Raster( data ), config=Config( defocus__far_blend=1 ) )
        self.assertGreater( pdf.max(), 0.5 )

    def testBlurredHalf( self ):
        sharp = stripes()
        blurred = ndimage.gaussian_filter( sharp, 3.0 )
        data = np.vstack( [ sharp[ :64 ], blurred[ 64: ] ] )
        pdf = defocusMap( Raster( data ), config=Config( edge__threshold=0.2 ) )
        rows = pdf.mean( axis=1 )
        peak = 8 + int( np.argmax( rows[ 8:-8 ] ) )
        self.assertLessEqual( abs( peak - 64 ), 4 )


class testVerticalLineScore( unittest.TestCase ):

    def setUp( self ):
        self.region = np.zeros( ( 120, 120 ), dtype=bool )
        self.region[ 10:110, 10:110 ] = True

    def testNoVertical( self ):
        segments = [ LineSegment( 20, 50, 90, 52 ) ]
        self.assertEqual( verticalLineScore( segments, self.region ), 0.0 )

    def testSaturated( self ):
        segments = [ LineSegment( x, 10, x, 109 ) for x in range( 10, 110, 2 ) ]
        self.assertEqual( verticalLineScore( segments, self.region ), 1.0 )

    def testMonotone( self ):
        segments, last = [], 0.0
        for x in range( 12, 100, 8 ):
            segments.append( LineSegment( x, 30, x + 1, 60 ) )
            score = verticalLineScore( segments, self.region )
            self.assertGreaterEqual( score, last )
            last = score
        self.assertGreater( last, 0.0 )

    def testTranslation( self ):
        segments = [ LineSegment( 30, 20, 30, 50 ), LineSegment( 60, 40, 61, 80 ) ]
        score = verticalLineScore( segments, self.region )
        shifted = np.roll( self.region, ( 5, 7 ), axis=( 0, 1 ) )
        moved = [ s.translated( 7, 5 ) for s in segments ]
        self.assertEqual( verticalLineScore( moved, shifted ), score )

    def testEmptyRegion( self ):
        self.assertRaises( ParameterError, verticalLineScore, [],
                           np.zeros( ( 4, 4 ), dtype=bool ) )


class testEvidence( unittest.TestCase ):

    def testSceneEvidence( self ):
        scene = generateScene( 'fronto-building', 11 )
        ev = computeEvidence( scene.image, Config() )
        self.assertEqual( ev.shape, scene.image.shape )
        for values in ( ev.lines, ev.edge, ev.defocus ):
            self.assertTrue( values.min() >= 0 and values.max() <= 1 )
        self.assertEqual( set( np.unique( ev.lines ).tolist() ) - { 0.0, 1.0 },
                          set() )
        self.assertTrue( np.array_equal( ev.lines,
                                         lineMap( ev.segments, ev.shape ) ) )
        self.assertTrue( any( s.isVertical() for s in ev.segments ) )


if __name__ == '__main__':
    unittest.main()
