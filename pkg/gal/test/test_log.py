"Tests for the gal logger"

import io
import unittest

from gal.log import GalLogger, debug, info, lg, output, setLogLevel, warn


class testLog( unittest.TestCase ):

    def setUp( self ):
        self.buffer = io.StringIO()
        self.previous = lg.handlers[ 0 ].setStream( self.buffer )

    def tearDown( self ):
        lg.handlers[ 0 ].setStream( self.previous )
        setLogLevel()

    def testSingleton( self ):
        self.assertIs( GalLogger(), lg )

    def testJoinedArguments( self ):
        setLogLevel( 'info' )
        info( '*** segments', 12, '\n' )
        output( 'done\n' )
        self.assertEqual( self.buffer.getvalue(), '*** segments 12 \ndone\n' )

    def testDefaultLevel( self ):
        setLogLevel()
        info( 'hidden\n' )
        debug( 'hidden\n' )
        output( 'shown\n' )
        warn( 'warned\n' )
        self.assertEqual( self.buffer.getvalue(), 'shown\nwarned\n' )

    def testLevelChangesTakeEffect( self ):
        setLogLevel( 'warning' )
        info( 'quiet\n' )
        setLogLevel( 'debug' )
        debug( 'loud\n' )
        setLogLevel( 'output' )
        info( 'quiet\n' )
        self.assertEqual( self.buffer.getvalue(), 'loud\n' )

    def testUnknownLevel( self ):
        self.assertRaises( ValueError, setLogLevel, 'chatty' )


if __name__ == '__main__':
    unittest.main()
