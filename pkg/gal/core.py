"""
Core data types shared by every GAL stage.

A Raster is an immutable H x W x C grid of values in [0,1] used for
images, probability maps and evidence maps. A LabelMap holds one
GeometricClass code per pixel. Class distributions are plain numpy
vectors of length 7 (or 3 for the support/vertical/sky stage) that
sum to one.

Only binary 8-bit PGM (P5) and PPM (P6) files are read and written,
so every file round-trips bit-exactly without external decoders.
"""

from enum import IntEnum

import numpy as np


class GalError( Exception ):
    "Base class of all GAL errors"

class FormatError( GalError ):
    "Malformed file header or text record"

class LengthError( GalError ):
    "Truncated file payload"

class DegenerateInputError( GalError ):
    "Input that cannot be turned into a distribution"

class ParameterError( GalError ):
    "Invalid numeric parameter"

class DimensionError( GalError ):
    "Rasters or segmentations of different sizes"

class ConfigError( GalError ):
    "Invalid configuration or missing model"

class SizeError( GalError ):
    "Problem too large for exhaustive search"

class ConsistencyError( GalError ):
    "Internal invariant violated"


class GeometricClass( IntEnum ):
    "The seven geometric classes with their display colors"

    SUPPORT = 0
    PLANAR_LEFT = 1
    PLANAR_CENTER = 2
    PLANAR_RIGHT = 3
    POROUS = 4
    SOLID = 5
    SKY = 6

    @property
    def color( self ):
        "8-bit RGB display color"
        return PALETTE[ self.value ]

    @property
    def label( self ):
        "Lowercase display name, e.g. 'planar-left'"
        return self.name.lower().replace( '_', '-' )

    @classmethod
    def fromLabel( cls, label ):
        "Look up a class by its display name"
        return cls[ label.upper().replace( '-', '_' ) ]


NCLASSES = 7

PALETTE = ( ( 0, 0, 0 ),          # support: black
            ( 255, 0, 255 ),      # planar-left: magenta
            ( 0, 0, 139 ),        # planar-center: dark blue
            ( 255, 0, 0 ),        # planar-right: red
            ( 0, 255, 0 ),        # porous: green
            ( 128, 128, 128 ),    # solid: gray
            ( 135, 206, 235 ) )   # sky: light blue

PLANAR = ( GeometricClass.PLANAR_LEFT, GeometricClass.PLANAR_CENTER,
           GeometricClass.PLANAR_RIGHT )
VERTICAL = PLANAR + ( GeometricClass.POROUS, GeometricClass.SOLID )

# Three-class (stage 1 and 2) codes
SUPPORT3, VERTICAL3, SKY3 = 0, 1, 2

UNIFORM = np.full( NCLASSES, 1.0 / NCLASSES )


def to3Class( codes ):
    "Collapse 7-class codes to support/vertical/sky codes"
    codes = np.asarray( codes )
    out = np.full( codes.shape, VERTICAL3, dtype=np.uint8 )
    out[ codes == GeometricClass.SUPPORT ] = SUPPORT3
    out[ codes == GeometricClass.SKY ] = SKY3
    return out


class Raster( object ):
    "Immutable channelled pixel grid with values in [0,1]."

    def __init__( self, data ):
        """data: array of shape (H, W) or (H, W, C), C in (1, 3)"""
        data = np.array( data, dtype=np.float64 )
        if data.ndim == 2:
            data = data[ :, :, np.newaxis ]
        if data.ndim != 3 or data.shape[ 2 ] not in ( 1, 3 ):
            raise DimensionError( 'raster must be H x W x {1,3}, got %s'
                                  % ( data.shape, ) )
        if data.shape[ 0 ] < 1 or data.shape[ 1 ] < 1:
            raise DimensionError( 'empty raster' )
        if not np.all( np.isfinite( data ) ):
            raise ParameterError( 'raster values must be finite' )
        if data.min() < 0.0 or data.max() > 1.0:
            raise ParameterError( 'raster values must lie in [0,1]' )
        data.flags.writeable = False
        self.data = data

    @property
    def height( self ):
        return self.data.shape[ 0 ]

    @property
    def width( self ):
        return self.data.shape[ 1 ]

    @property
    def channels( self ):
        return self.data.shape[ 2 ]

    @property
    def shape( self ):
        "( height, width )"
        return self.data.shape[ :2 ]

    def pixels( self ):
        "Return an (H, W) view for gray rasters, (H, W, 3) for color"
        return self.data[ :, :, 0 ] if self.channels == 1 else self.data

    def gray( self ):
        "Luminance 0.299R + 0.587G + 0.114B as an (H, W) array"
        if self.channels == 1:
            return self.data[ :, :, 0 ]
        return self.data @ np.array( [ 0.299, 0.587, 0.114 ] )

    def rgb( self ):
        "Return an (H, W, 3) array, replicating gray channels"
        if self.channels == 3:
            return self.data
        return np.repeat( self.data, 3, axis=2 )

    def __eq__( self, other ):
        return ( isinstance( other, Raster ) and
                 np.array_equal( self.data, other.data ) )

    def __repr__( self ):
        return '<Raster %dx%dx%d>' % ( self.width, self.height,
                                       self.channels )


class LabelMap( object ):
    "Immutable per-pixel GeometricClass codes."

    def __init__( self, codes ):
        codes = np.array( codes )
        if codes.ndim != 2:
            raise DimensionError( 'label map must be 2-dimensional' )
        if codes.size and ( codes.min() < 0 or codes.max() >= NCLASSES ):
            raise ParameterError( 'label codes must lie in 0..6' )
        codes = codes.astype( np.uint8 )
        codes.flags.writeable = False
        self.codes = codes

    @property
    def height( self ):
        return self.codes.shape[ 0 ]

    @property
    def width( self ):
        return self.codes.shape[ 1 ]

    @property
    def shape( self ):
        return self.codes.shape

    def colors( self ):
        "Return the (H, W, 3) uint8 palette rendering"
        return np.array( PALETTE, dtype=np.uint8 )[ self.codes ]

    def __eq__( self, other ):
        return ( isinstance( other, LabelMap ) and
                 np.array_equal( self.codes, other.codes ) )

    def __repr__( self ):
        return '<LabelMap %dx%d>' % ( self.width, self.height )


def normalizeDistribution( raw ):
    """Scale non-negative weights to a class distribution.
       raw: sequence of non-negative scalars, at least one positive
       returns: float array summing to 1"""
    raw = np.asarray( raw, dtype=np.float64 )
    if raw.ndim != 1 or raw.size == 0:
        raise DegenerateInputError( 'expected a non-empty vector' )
    if not np.all( np.isfinite( raw ) ) or np.any( raw < 0 ):
        raise DegenerateInputError( 'negative or NaN weight in %s' % raw )
    total = raw.sum()
    if total <= 0:
        raise DegenerateInputError( 'all-zero weights' )
    if np.all( raw == raw[ 0 ] ):
        return np.full( raw.size, 1.0 / raw.size )
    return raw / total

def isDistribution( rows, tol=1e-6 ):
    "Check that every row is non-negative and sums to 1 within tol"
    rows = np.atleast_2d( rows )
    return bool( np.all( rows >= 0 ) and
                 np.all( np.abs( rows.sum( axis=1 ) - 1.0 ) <= tol ) )


# PGM/PPM input and output

def _readToken( payload, pos ):
    "Read one whitespace-delimited header token, skipping comments"
    n = len( payload )
    while pos < n:
        c = payload[ pos:pos + 1 ]
        if c == b'#':
            while pos < n and payload[ pos:pos + 1 ] not in ( b'\n', b'\r' ):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not payload[ pos:pos + 1 ].isspace():
        pos += 1
    if start == pos:
        raise FormatError( 'truncated header' )
    return payload[ start:pos ], pos

def decodeNetpbm( payload ):
    """Decode P5/P6 bytes
       returns: uint8 array (H, W) for P5, (H, W, 3) for P6"""
    magic, pos = _readToken( payload, 0 )
    if magic not in ( b'P5', b'P6' ):
        raise FormatError( 'unsupported magic number %r' % magic )
    fields = []
    for _ in range( 3 ):
        token, pos = _readToken( payload, pos )
        if not token.isdigit():
            raise FormatError( 'non-numeric header field %r' % token )
        fields.append( int( token ) )
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError( 'bad dimensions %dx%d' % ( width, height ) )
    if maxval != 255:
        raise FormatError( 'only 8-bit files are supported (maxval %d)'
                           % maxval )
    if pos >= len( payload ) or not payload[ pos:pos + 1 ].isspace():
        raise FormatError( 'missing whitespace after header' )
    pos += 1
    channels = 3 if magic == b'P6' else 1
    expected = width * height * channels
    body = payload[ pos:pos + expected ]
    if len( body ) < expected:
        raise LengthError( 'expected %d payload bytes, found %d'
                           % ( expected, len( body ) ) )
    pixels = np.frombuffer( body, dtype=np.uint8 )
    if channels == 3:
        return pixels.reshape( height, width, 3 )
    return pixels.reshape( height, width )

def encodeNetpbm( pixels ):
    "Encode a uint8 array (H, W) or (H, W, 3) as P5/P6 bytes"
    pixels = np.ascontiguousarray( pixels, dtype=np.uint8 )
    magic = b'P6' if pixels.ndim == 3 else b'P5'
    header = b'%s\n%d %d\n255\n' % ( magic, pixels.shape[ 1 ],
                                     pixels.shape[ 0 ] )
    return header + pixels.tobytes()

def quantize( values ):
    "Map [0,1] floats to 8-bit levels"
    return np.clip( np.round( np.asarray( values ) * 255.0 ),
                    0, 255 ).astype( np.uint8 )

def readRaster( path ):
    """Read an 8-bit PGM or PPM file
       path: file path
       returns: Raster scaled to [0,1]"""
    with open( path, 'rb' ) as f:
        pixels = decodeNetpbm( f.read() )
    return Raster( pixels / 255.0 )

def writeRaster( raster, path ):
    "Write a Raster as P5 (1 channel) or P6 (3 channels)"
    with open( path, 'wb' ) as f:
        f.write( encodeNetpbm( quantize( raster.pixels() ) ) )

def writeProbabilityMap( values, path ):
    "Write an (H, W) array of probabilities as P5 with levels v*255"
    writeRaster( Raster( np.clip( values, 0.0, 1.0 ) ), path )

def writeLabelMap( labels, mode, path ):
    """Write a label map
       mode: 'codes' writes P5 with raw codes 0-6,
             'colors' writes P6 with the display palette"""
    if mode == 'codes':
        payload = encodeNetpbm( labels.codes )
    elif mode == 'colors':
        payload = encodeNetpbm( labels.colors() )
    else:
        raise ParameterError( 'unknown label map mode %r' % mode )
    with open( path, 'wb' ) as f:
        f.write( payload )

def readLabelMap( path ):
    "Read a P5 code map written by writeLabelMap( ..., 'codes', ... )"
    with open( path, 'rb' ) as f:
        pixels = decodeNetpbm( f.read() )
    if pixels.ndim != 2:
        raise FormatError( '%s: label maps must be P5' % path )
    if pixels.size and pixels.max() >= NCLASSES:
        raise FormatError( '%s: code %d out of range'
                           % ( path, pixels.max() ) )
    return LabelMap( pixels )
