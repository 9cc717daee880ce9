"""
A simple command-line interface for GAL.

The GAL CLI runs the labeling pipeline and its batch tools, either
one command at a time from the shell

gal run street.ppm --out labeled

or from an interactive console

gal> synth --seed 1 --count 10 --out corpus
gal> eval labeled corpus

Useful commands are 'run' (label one image), 'eval' (pixel accuracy
of a prediction directory), 'ablate' (accuracy as global attributes
are added one by one), 'synth' (synthetic scenes with ground truth),
'learn' (energy parameters) and 'train' (initial labeling models).
'config' shows or changes the session configuration and 'source'
runs a file of commands.

Every command leaves an exit status in CLI.status: 0 on success,
2 for unreadable or malformed input, 3 for invalid configuration or
parameters, and 1 when evaluation had to skip image pairs.
"""

from argparse import ArgumentParser
from cmd import Cmd
from functools import wraps
import shlex
import sys

from gal.config import Config, parseConfig
from gal.core import ( ConfigError, DimensionError, FormatError, GalError,
                       LengthError, ParameterError )
from gal.crf import learnParams, readParams, writeParams
from gal.evaluate import ablate, evaluate
from gal.ipl import loadModels, trainModels
from gal.log import LEVELS, error, info, output, setLogLevel
from gal.pipeline import LayoutPipeline, processImage, trainingSamples
from gal.scenes import KINDS, generateScenes, readDataset
from gal.util import splitList

INPUT_ERRORS = ( OSError, FormatError, LengthError, DimensionError )
CONFIG_ERRORS = ( ConfigError, ParameterError )


class CommandExit( Exception ):
    "Raised by CommandParser instead of leaving the interpreter"

    def __init__( self, status ):
        Exception.__init__( self, status )
        self.status = status


class CommandParser( ArgumentParser ):
    "Argument parser that reports errors instead of exiting."

    def exit( self, status=0, message=None ):
        if message:
            error( message )
        raise CommandExit( status )

    def error( self, message ):
        self.exit( 2, '%s\n%s: error: %s\n' % ( self.format_usage().strip(),
                                                 self.prog, message ) )


def commandParser( name, description ):
    "Parser with the options every command accepts"
    parser = CommandParser( prog=name, description=description )
    parser.add_argument( '-c', '--config', metavar='FILE',
                         help='configuration file applied over the session' )
    parser.add_argument( '-v', '--verbosity', choices=sorted( LEVELS ),
                         help='log level for this command' )
    return parser

def command( parser ):
    """Decorator turning fn( self, args ) into a Cmd do_ method that
       parses its line with parser and records an exit status"""
    def decorate( fn ):
        @wraps( fn )
        def do( self, line ):
            try:
                args = parser.parse_args( shlex.split( line ) )
                if args.verbosity:
                    setLogLevel( args.verbosity )
                config = self.sessionConfig( args.config )
                self.status = fn( self, args, config ) or 0
            except CommandExit as e:
                self.status = e.status
            except INPUT_ERRORS as e:
                error( '*** %s\n' % e )
                self.status = 2
            except CONFIG_ERRORS as e:
                error( '*** %s\n' % e )
                self.status = 3
            except GalError as e:
                error( '*** %s\n' % e )
                self.status = 1
            finally:
                setLogLevel( self.verbosity )
        do.__doc__ = parser.format_help()
        return do
    return decorate


runParser = commandParser( 'run', 'Label the geometric layout of an image.' )
runParser.add_argument( 'image', help='PPM or PGM image' )
runParser.add_argument( '-b', '--boxes', metavar='FILE',
                        help='object boxes "x y w h", one per line' )
runParser.add_argument( '--vertical-probs', metavar='FILE',
                        help='five vertical class probabilities per fine unit' )
runParser.add_argument( '-p', '--params', metavar='FILE',
                        help='energy parameters "w0 w1 w2 w3 w4 lambda"' )
runParser.add_argument( '-m', '--models', metavar='FILE',
                        help='initial labeling models written by train' )
runParser.add_argument( '-o', '--out', metavar='DIR', default='.',
                        help='output directory' )
runParser.add_argument( '-e', '--evidence', action='store_true',
                        help='also write line, edge, defocus and unit maps' )

evalParser = commandParser( 'eval', 'Pixel accuracy of predicted label maps.' )
evalParser.add_argument( 'pred', help='directory of <stem>_codes.pgm maps' )
evalParser.add_argument( 'truth', help='directory of <stem>_truth.pgm maps' )
evalParser.add_argument( '-o', '--out', metavar='FILE',
                         help='also write the key/value report here' )

ablateParser = commandParser( 'ablate',
                              'Accuracy as global attributes are added.' )
ablateParser.add_argument( 'dataset', help='directory of images with truth' )
ablateParser.add_argument( '-p', '--params', metavar='FILE' )
ablateParser.add_argument( '-m', '--models', metavar='FILE' )
ablateParser.add_argument( '-o', '--out', metavar='FILE',
                           help='also write the table here' )

synthParser = commandParser( 'synth',
                             'Render synthetic scenes with ground truth.' )
synthParser.add_argument( '-s', '--seed', type=int, default=0 )
synthParser.add_argument( '-n', '--count', type=int, default=10 )
synthParser.add_argument( '-k', '--kinds', default=','.join( KINDS ),
                          help='comma separated subset of ' + ','.join( KINDS ) )
synthParser.add_argument( '-o', '--out', metavar='DIR', required=True )

learnParser = commandParser( 'learn', 'Learn the energy parameters.' )
learnParser.add_argument( 'dataset', help='directory of images with truth' )
learnParser.add_argument( '-m', '--models', metavar='FILE' )
learnParser.add_argument( '-o', '--out', metavar='FILE', required=True )

trainParser = commandParser( 'train', 'Train the initial labeling models.' )
trainParser.add_argument( 'dataset', help='directory of images with truth' )
trainParser.add_argument( '-o', '--out', metavar='FILE', required=True )


def _dataset( directory ):
    "Dataset items with ground truth, at least one"
    items = readDataset( directory )
    if not items:
        raise FormatError( 'no images with ground truth in %s' % directory )
    return items

def _writeText( path, text ):
    with open( path, 'w' ) as f:
        f.write( text )


class CLI( Cmd ):
    "Simple command-line interface to the labeling pipeline."

    prompt = 'gal> '

    def __init__( self, config=None, stdin=sys.stdin, script=None,
                  verbosity=None ):
        """config: session Config (default: defaults)
           stdin: standard input for the console
           script: command file to run in batch mode
           verbosity: session log level"""
        self.config = Config() if config is None else config
        self.status = 0
        self.verbosity = verbosity
        Cmd.__init__( self, stdin=stdin )
        if verbosity:
            setLogLevel( verbosity )
        if script:
            self.do_source( script )

    def run( self ):
        "Run our cmdloop(), catching KeyboardInterrupt"
        info( '*** Starting CLI:\n' )
        while True:
            try:
                self.cmdloop()
                break
            except KeyboardInterrupt:
                output( '\nInterrupt\n' )

    def emptyline( self ):
        "Don't repeat last command when you hit return."
        pass

    def sessionConfig( self, path=None ):
        "The session configuration, with a file applied over a copy"
        if path is None:
            return self.config
        try:
            with open( path ) as f:
                text = f.read()
        except OSError as e:
            raise ConfigError( 'cannot read config file %s: %s'
                               % ( path, e.strerror ) )
        return parseConfig( text, self.config.copy() )

    @command( runParser )
    def do_run( self, args, config ):
        result = processImage( args.image, config, args.out, args.boxes,
                               args.vertical_probs, args.params, args.models,
                               args.evidence )
        output( result.gav.report() )

    @command( evalParser )
    def do_eval( self, args, _config ):
        report = evaluate( args.pred, args.truth )
        output( report.text() )
        output( report.keyvalues() )
        if args.out:
            _writeText( args.out, report.keyvalues() )
        return 1 if report.skipped else 0

    @command( ablateParser )
    def do_ablate( self, args, config ):
        items = _dataset( args.dataset )
        params = readParams( args.params, config ) if args.params else None
        models = loadModels( args.models ) if args.models else None
        table = ablate( items, config, models, params )
        output( table.text() )
        if args.out:
            _writeText( args.out, table.text() )

    @command( synthParser )
    def do_synth( self, args, _config ):
        kinds = splitList( args.kinds )
        unknown = [ k for k in kinds if k not in KINDS ]
        if unknown or not kinds:
            raise ParameterError( 'unknown scene kinds %s; choose from %s'
                                  % ( ','.join( unknown ), ','.join( KINDS ) ) )
        if args.count < 1:
            raise ParameterError( 'scene count must be >= 1' )
        generateScenes( args.seed, args.count, kinds, args.out )
        output( '*** Wrote %d scenes to %s\n' % ( args.count, args.out ) )

    @command( learnParser )
    def do_learn( self, args, config ):
        items = _dataset( args.dataset )
        models = loadModels( args.models ) if args.models else None
        pipeline = LayoutPipeline( config, models )
        params = learnParams( trainingSamples( items, pipeline ), config )
        writeParams( params, args.out )
        output( '%s\n' % params )

    @command( trainParser )
    def do_train( self, args, config ):
        items = _dataset( args.dataset )
        samples = []
        for item in items:
            img, truth, _ = item.load()
            samples.append( ( img, truth ) )
        models = trainModels( samples, config )
        models.save( args.out )
        output( '*** Saved %s to %s\n' % ( models, args.out ) )

    def do_config( self, line ):
        """Show or change the session configuration.
           Usage: config [key [value]]"""
        args = line.split()
        try:
            if not args:
                output( self.config.dump() )
            elif len( args ) == 1:
                output( '%s %s\n' % ( args[ 0 ], self.config[ args[ 0 ] ] ) )
            elif len( args ) == 2:
                self.config.set( *args )
            else:
                error( 'usage: config [key [value]]\n' )
                self.status = 2
                return
            self.status = 0
        except ConfigError as e:
            error( '*** %s\n' % e )
            self.status = 3

    def do_source( self, line ):
        """Read commands from an input file.
           Usage: source <file>"""
        args = line.split()
        if len( args ) != 1:
            error( 'usage: source <file>\n' )
            self.status = 2
            return None
        try:
            with open( args[ 0 ] ) as inputFile:
                for cmdline in inputFile:
                    cmdline = cmdline.split( '#', 1 )[ 0 ].strip()
                    if cmdline and self.onecmd( cmdline ):
                        return 'exited by script'
        except IOError:
            error( 'error reading file %s\n' % args[ 0 ] )
            self.status = 2
        return None

    def do_exit( self, _line ):
        "Exit"
        assert self  # satisfy pylint and allow override
        return 'exited by user command'

    def do_quit( self, line ):
        "Exit"
        return self.do_exit( line )

    def do_EOF( self, line ):
        "Exit"
        output( '\n' )
        return self.do_exit( line )

    def default( self, line ):
        error( '*** Unknown command: %s\n' % line )
        self.status = 2


def main( argv=None ):
    """Run one command given on the command line, or the interactive
       console without one
       returns: exit status"""
    argv = sys.argv[ 1: ] if argv is None else argv
    cli = CLI()
    if argv:
        cli.onecmd( ' '.join( shlex.quote( arg ) for arg in argv ) )
    else:
        cli.run()
    return cli.status
