"""
Flat key/value configuration.

Every tunable threshold of the pipeline lives under a dotted key.
A configuration file holds one 'key value' pair per line; '#' starts
a comment and blank lines are ignored, e.g.

    # finer super-pixels
    slic.k 600
    crf.lambda 0.05

Unknown keys and non-numeric values raise ConfigError.
"""

from gal.core import ConfigError
from gal.log import debug
from gal.util import makeNumeric


DEFAULTS = {
    # segmentation
    'slic.k': 400,
    'slic.compactness': 10.0,
    'slic.iterations': 10,
    'fh.scale': 100.0,
    'fh.min_size': 20,
    'fh.sigma': 0.8,
    'fh.coarse_factor': 4,
    # initial labeling
    'ipl.trees': 30,
    'ipl.depth': 12,
    'ipl.corpus': 24,
    # line evidence
    'lsd.angle_tolerance': 22.5,
    'lsd.min_length': 15.0,
    'edge.sigma': 1.0,
    'edge.percentile': 99.0,
    'edge.norm_floor': 0.1,
    'edge.threshold': 0.3,
    'defocus.sigma0': 1.0,
    'defocus.max_blur': 5.0,
    'defocus.far_blend': 0,
    'defocus.near_px': 6.0,
    'defocus.far_px': 16.0,
    'defocus.box': 9,
    'defocus.norm_floor': 0.05,
    # sky and ground lines
    'boundary.min_run': 0.05,
    'boundary.ls_dilate': 2,
    'boundary.band': 1,
    'boundary.min_confidence': 0.1,
    'boundary.min_area': 0.002,
    # horizon
    'horizon.building_length': 1.5,
    'horizon.segment_length': 0.05,
    'horizon.tilt': 10.0,
    'horizon.bins': 50,
    'horizon.prior_mean': 0.5,
    'horizon.prior_sigma': 0.2,
    'horizon.dominance': 1.5,
    # planar surfaces
    'trapezoid.break_height': 0.3,
    'trapezoid.window': 0.1,
    'trapezoid.slope': 0.05,
    'trapezoid.min_width': 0.05,
    'trapezoid.membership': 0.5,
    # vertical and vanishing lines
    'vertical.tolerance': 5.0,
    'vertical.dilate': 5,
    'vertical.gate': 0.3,
    'vanishing.iterations': 500,
    'vanishing.inlier_deg': 2.0,
    'vanishing.min_inliers': 5,
    'vanishing.center_frac': 0.2,
    'vanishing.far_factor': 10.0,
    # objects
    'gmm.components': 3,
    'gmm.iterations': 50,
    'gmm.tol': 1e-4,
    'grabcut.iterations': 5,
    'grabcut.frame': 10,
    'grabcut.gamma': 50.0,
    'solid.overlap': 0.5,
    'porous.mass': 0.8,
    'porous.band': 2,
    # refinement
    'crf.lambda': 0.1,
    'crf.epsilon': 1e-6,
    'crf.cap': 10.0,
    'crf.contrast_weight': 0.5,
    'crf.contrast_fallback': 0,
    'crf.cycles': 10,
    'crf.folds': 5,
    # everything random
    'seed': 0,
}

# Keys that must hold integers
INTEGER_KEYS = { key for key, value in DEFAULTS.items()
                 if isinstance( value, int ) }


class Config( object ):
    "Typed view of the configuration keys with their defaults."

    def __init__( self, **overrides ):
        """overrides: key=value pairs, dots in keys written as '__'
           e.g. Config( crf__lambda=0.5 )"""
        self.values = dict( DEFAULTS )
        for key, value in overrides.items():
            self.set( key.replace( '__', '.' ), value )

    def set( self, key, value ):
        "Set a key, converting and checking the value"
        if key not in DEFAULTS:
            raise ConfigError( 'unknown configuration key %s' % key )
        if isinstance( value, str ):
            value = makeNumeric( value )
        if isinstance( value, bool ) or not isinstance( value,
                                                        ( int, float ) ):
            raise ConfigError( 'non-numeric value %r for %s'
                               % ( value, key ) )
        if key in INTEGER_KEYS:
            if value != int( value ):
                raise ConfigError( '%s expects an integer, got %s'
                                   % ( key, value ) )
            value = int( value )
        else:
            value = float( value )
        self.values[ key ] = value

    def get( self, key ):
        "Return the value of a key"
        try:
            return self.values[ key ]
        except KeyError:
            raise ConfigError( 'unknown configuration key %s' % key )

    __getitem__ = get

    def copy( self ):
        "Return an independent copy"
        other = Config()
        other.values = dict( self.values )
        return other

    def changed( self ):
        "Return the keys that differ from their defaults"
        return sorted( key for key, value in self.values.items()
                       if value != DEFAULTS[ key ] )

    def dump( self ):
        "Return the configuration as file text"
        return ''.join( '%s %s\n' % ( key, self.values[ key ] )
                        for key in sorted( self.values ) )

    def __repr__( self ):
        return '<Config %s>' % ' '.join(
            '%s=%s' % ( key, self.values[ key ] ) for key in self.changed() )


def parseConfig( text, config=None ):
    """Parse configuration text
       text: file contents
       config: Config to update (default: fresh defaults)
       returns: Config"""
    config = Config() if config is None else config
    for lineno, line in enumerate( text.splitlines(), 1 ):
        line = line.split( '#', 1 )[ 0 ].strip()
        if not line:
            continue
        fields = line.split()
        if len( fields ) != 2:
            raise ConfigError( 'line %d: expected "key value", got %r'
                               % ( lineno, line ) )
        try:
            config.set( *fields )
        except ConfigError as e:
            raise ConfigError( 'line %d: %s' % ( lineno, e ) )
    return config

def loadConfig( path=None ):
    """Load a configuration file
       path: file path, or None for the defaults"""
    if path is None:
        return Config()
    with open( path ) as f:
        config = parseConfig( f.read() )
    debug( '*** Loaded configuration %s: %s\n' % ( path, config ) )
    return config
