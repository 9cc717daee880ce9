"Tests for configuration files and helpers"

import os
import tempfile
import unittest

from gal.config import DEFAULTS, Config, loadConfig, parseConfig
from gal.core import ConfigError
from gal.util import ( checkFloat, makeNumeric, natural, numThreads,
                       splitList, stemOf )


class testConfig( unittest.TestCase ):

    def testDefaults( self ):
        config = Config()
        self.assertEqual( config[ 'crf.lambda' ], 0.1 )
        self.assertEqual( config[ 'slic.k' ], 400 )
        self.assertEqual( config[ 'horizon.bins' ], 50 )
        self.assertEqual( config.changed(), [] )

    def testOverrides( self ):
        config = Config( crf__lambda=0.5, slic__k='600' )
        self.assertEqual( config[ 'crf.lambda' ], 0.5 )
        self.assertEqual( config[ 'slic.k' ], 600 )
        self.assertEqual( config.changed(), [ 'crf.lambda', 'slic.k' ] )

    def testParse( self ):
        config = parseConfig( '# finer super-pixels\nslic.k 600\n\n'
                              'crf.lambda 0.05  # smoother\n' )
        self.assertEqual( config[ 'slic.k' ], 600 )
        self.assertEqual( config[ 'crf.lambda' ], 0.05 )

    def testErrors( self ):
        self.assertRaises( ConfigError, parseConfig, 'no.such.key 1\n' )
        self.assertRaises( ConfigError, parseConfig, 'crf.lambda big\n' )
        self.assertRaises( ConfigError, parseConfig, 'slic.k 1.5\n' )
        self.assertRaises( ConfigError, parseConfig, 'slic.k\n' )
        self.assertRaises( ConfigError, Config().get, 'missing' )

    def testCopyIsIndependent( self ):
        config = Config()
        other = config.copy()
        other.set( 'seed', 9 )
        self.assertEqual( config[ 'seed' ], 0 )

    def testDumpParsesBack( self ):
        config = Config( crf__cap=20, fh__scale=50 )
        self.assertEqual( parseConfig( config.dump() ).values, config.values )
        self.assertEqual( set( config.values ), set( DEFAULTS ) )

    def testLoad( self ):
        with tempfile.NamedTemporaryFile( 'w', suffix='.cfg',
                                          delete=False ) as f:
            f.write( 'vertical.gate 0.4\n' )
        try:
            self.assertEqual( loadConfig( f.name )[ 'vertical.gate' ], 0.4 )
        finally:
            os.unlink( f.name )
        self.assertEqual( loadConfig().values, Config().values )


class testUtil( unittest.TestCase ):

    def testStem( self ):
        self.assertEqual( stemOf( 'out/scene007_truth.pgm' ), 'scene007' )
        self.assertEqual( stemOf( 'scene007.ppm' ), 'scene007' )
        self.assertEqual( stemOf( 'a_b_codes.pgm' ), 'a_b' )

    def testNaturalOrder( self ):
        names = [ 'scene10', 'scene9', 'scene100' ]
        self.assertEqual( sorted( names, key=natural ),
                          [ 'scene9', 'scene10', 'scene100' ] )

    def testNumeric( self ):
        self.assertTrue( checkFloat( '2.5e-3' ) )
        self.assertFalse( checkFloat( 'gate' ) )
        self.assertEqual( makeNumeric( '12' ), 12 )
        self.assertEqual( makeNumeric( '0.4' ), 0.4 )
        self.assertEqual( makeNumeric( 'on' ), 'on' )

    def testSplitList( self ):
        self.assertEqual( splitList( 'alley, occluded,,' ),
                          [ 'alley', 'occluded' ] )

    def testThreads( self ):
        old = os.environ.get( 'GAL_THREADS' )
        try:
            os.environ[ 'GAL_THREADS' ] = '3'
            self.assertEqual( numThreads(), 3 )
            os.environ[ 'GAL_THREADS' ] = 'many'
            self.assertGreaterEqual( numThreads(), 1 )
        finally:
            if old is None:
                os.environ.pop( 'GAL_THREADS', None )
            else:
                os.environ[ 'GAL_THREADS' ] = old


if __name__ == '__main__':
    unittest.main()
