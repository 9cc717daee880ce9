"""
Logging for GAL.

Every module logs through the one 'gal' logger:

    from gal.log import info, output, warn

    info( '*** Segmenting', img, '\n' )

Messages are written as given, so callers end their own lines. Besides
the standard levels there is OUTPUT, between info and warning: at the
default OUTPUT level a run prints its results, warnings and errors and
none of the stage banners.
"""

import logging
import sys

OUTPUT = 25
logging.addLevelName( OUTPUT, 'OUTPUT' )

LEVELS = { 'debug': logging.DEBUG,
           'info': logging.INFO,
           'output': OUTPUT,
           'warning': logging.WARNING,
           'error': logging.ERROR,
           'critical': logging.CRITICAL }

DEFAULT_LEVEL = 'output'


class Singleton( type ):
    "Metaclass whose classes have at most one instance."

    _instances = {}

    def __call__( cls, *args, **kwargs ):
        if cls not in Singleton._instances:
            Singleton._instances[ cls ] = super( Singleton, cls ).__call__(
                *args, **kwargs )
        return Singleton._instances[ cls ]


class GalLogger( logging.Logger, metaclass=Singleton ):
    """The 'gal' logger: one unterminated stream handler on stderr
       and an output() method for the OUTPUT level."""

    def __init__( self, stream=None ):
        logging.Logger.__init__( self, 'gal' )
        handler = logging.StreamHandler( sys.stderr if stream is None
                                         else stream )
        handler.terminator = ''
        handler.setFormatter( logging.Formatter( '%(message)s' ) )
        self.addHandler( handler )
        self.setLogLevel()

    def setLogLevel( self, levelname=None ):
        """Set the level of the logger and its handler
           levelname: key of LEVELS, None for the default"""
        levelname = DEFAULT_LEVEL if levelname is None else levelname
        if levelname not in LEVELS:
            raise ValueError( 'unknown log level %r, expected one of %s'
                              % ( levelname, ', '.join( sorted( LEVELS ) ) ) )
        self.setLevel( LEVELS[ levelname ] )
        # the manager only resets caches of loggers it created
        self._cache.clear()
        for handler in self.handlers:
            handler.setLevel( LEVELS[ levelname ] )

    def output( self, msg, *args, **kwargs ):
        "Log msg % args at the OUTPUT level"
        if self.isEnabledFor( OUTPUT ):
            self._log( OUTPUT, msg, args, **kwargs )


lg = GalLogger()


def _joined( method ):
    """Wrap a logger method so that several arguments are joined with
       spaces: info( 'segments', 12, '\\n' )"""
    def log( *args ):
        if len( args ) == 1:
            return method( args[ 0 ] )
        return method( ' '.join( str( arg ) for arg in args ) )
    log.__name__ = method.__name__
    log.__doc__ = method.__doc__
    return log


debug = _joined( lg.debug )
info = _joined( lg.info )
output = _joined( lg.output )
warn = _joined( lg.warning )
error = _joined( lg.error )

setLogLevel = lg.setLogLevel
