"""
Synthetic outdoor scenes with exact ground truth.

Five kinds are rendered:

horizon-only: sky over a flat support with a horizon row
fronto-building: a facade parallel to the image plane
corner-building: two facades meeting at a near corner, receding to
    vanishing points on the horizon
alley: two walls receding to a vanishing point between them
occluded: one of the above with a solid object and a porous patch

Facades carry window grids whose top and bottom edges pass through
the facade vanishing point, so line and vanishing evidence is
consistent with the labels. Every scene comes from its own seeded
generator, making a corpus byte-identical for a given seed.
"""

import os

import numpy as np
from scipy import ndimage

from gal.core import ( GeometricClass, LabelMap, Raster, quantize,
                       readLabelMap, readRaster, writeLabelMap, writeRaster )
from gal.grabcut import Box, readBoxes, writeBoxes
from gal.log import info, output
from gal.util import natural, stemOf

KINDS = ( 'horizon-only', 'fronto-building', 'corner-building', 'alley',
          'occluded' )
BASE_KINDS = KINDS[ :4 ]

WIDTH, HEIGHT = 320, 240
NOISE = 0.02
WINDOW_HEIGHT = 0.18

SUPPORT, SKY = GeometricClass.SUPPORT, GeometricClass.SKY


class SyntheticScene( object ):
    """A rendered scene
       kind: one of KINDS
       image: Raster; truth: LabelMap
       boxes: object Boxes
       gav: dict of the attribute payloads the render implies"""

    def __init__( self, kind, image, truth, boxes, gav ):
        self.kind = kind
        self.image = image
        self.truth = truth
        self.boxes = boxes
        self.gav = gav

    def __repr__( self ):
        return '<SyntheticScene %s %s>' % ( self.kind, self.gav )


class Canvas( object ):
    "RGB and label buffers plus pixel coordinate grids."

    def __init__( self, rng, width, height ):
        self.rng = rng
        self.width, self.height = width, height
        self.y, self.x = np.indices( ( height, width ) )
        self.rgb = np.zeros( ( height, width, 3 ) )
        self.codes = np.zeros( ( height, width ), dtype=np.uint8 )

    def color( self, low, high ):
        "Random RGB color between two corners"
        return self.rng.uniform( low, high )

    def fill( self, mask, color, code=None, sigma=NOISE ):
        "Paint a noisy flat color, and a class code if given"
        count = int( mask.sum() )
        self.rgb[ mask ] = color + self.rng.normal( 0, sigma, ( count, 3 ) )
        if code is not None:
            self.codes[ mask ] = code

    def uniform( self, low, high ):
        return float( self.rng.uniform( low, high ) )

    def raster( self ):
        "8-bit quantized Raster of the painted image"
        return Raster( quantize( np.clip( self.rgb, 0, 1 ) ) / 255.0 )


def _line( x0, y0, x1, y1 ):
    "y( x ) of the line through two points"
    slope = ( y1 - y0 ) / float( x1 - x0 )
    return lambda x: y0 + slope * ( x - x0 )

def _skyAndGround( canvas, horizon ):
    "Sky above the horizon row, support below"
    sky = canvas.color( ( 0.5, 0.7, 0.88 ), ( 0.65, 0.82, 0.98 ) )
    ground = canvas.color( ( 0.3, 0.28, 0.2 ), ( 0.5, 0.45, 0.35 ) )
    canvas.fill( canvas.y < horizon, sky, SKY )
    canvas.fill( canvas.y >= horizon, ground, SUPPORT )

def _facade( canvas, x0, x1, top, bottom, code, color ):
    """Paint a facade between columns x0, x1 and the lines top( x ),
       bottom( x ), with a grid of windows
       returns: facade mask"""
    x, y = canvas.x, canvas.y
    mask = ( x >= x0 ) & ( x < x1 ) & ( y >= top( x ) ) & ( y < bottom( x ) )
    canvas.fill( mask, color, code )
    window = canvas.color( ( 0.12, 0.14, 0.2 ), ( 0.25, 0.27, 0.35 ) )
    columns = int( canvas.rng.integers( 3, 6 ) )
    rows = int( canvas.rng.integers( 2, 4 ) )
    span = float( x1 - x0 )
    v = ( y - top( x ) ) / np.maximum( bottom( x ) - top( x ), 1e-9 )
    for c in range( columns ):
        u0 = x0 + span * ( c + 0.3 ) / columns
        u1 = x0 + span * ( c + 0.7 ) / columns
        for r in range( rows ):
            v0 = 0.12 + r * ( 0.8 / rows )
            pane = mask & ( x >= u0 ) & ( x < u1 ) & ( v >= v0 ) & (
                v < v0 + WINDOW_HEIGHT )
            canvas.fill( pane, window )
    return mask

def _facadeColor( canvas ):
    return canvas.color( ( 0.55, 0.38, 0.3 ), ( 0.85, 0.62, 0.5 ) )

def renderHorizon( canvas ):
    height = canvas.height
    horizon = int( round( canvas.uniform( 0.3, 0.7 ) * height ) )
    _skyAndGround( canvas, horizon )
    return dict( horizon=horizon, skyline=False, planar=[], vertical=False,
                 vanishing=False )

def renderFronto( canvas ):
    width, height = canvas.width, canvas.height
    horizon = int( round( canvas.uniform( 0.45, 0.6 ) * height ) )
    _skyAndGround( canvas, horizon )
    x0 = int( canvas.uniform( 0.15, 0.25 ) * width )
    x1 = int( canvas.uniform( 0.75, 0.85 ) * width )
    yt = int( canvas.uniform( 0.15, 0.3 ) * height )
    yb = horizon + int( canvas.uniform( 0.1, 0.2 ) * height )
    _facade( canvas, x0, x1, lambda x: yt + 0.0 * x, lambda x: yb + 0.0 * x,
             GeometricClass.PLANAR_CENTER, _facadeColor( canvas ) )
    return dict( horizon=horizon, skyline=True, planar=[ 'center' ],
                 vertical=True, vanishing=True )

def renderCorner( canvas ):
    width, height = canvas.width, canvas.height
    horizon = int( round( canvas.uniform( 0.45, 0.6 ) * height ) )
    _skyAndGround( canvas, horizon )
    xc = canvas.uniform( 0.4, 0.6 ) * width
    top = canvas.uniform( 0.1, 0.2 ) * height
    base = horizon + canvas.uniform( 0.15, 0.25 ) * height
    xl = canvas.uniform( 0.05, 0.15 ) * width
    xr = width - canvas.uniform( 0.05, 0.15 ) * width
    color = _facadeColor( canvas )
    vps = []
    for side, x0, x1, code, shade in (
            ( -1, xl, xc, GeometricClass.PLANAR_LEFT, 1.0 ),
            ( 1, xc, xr, GeometricClass.PLANAR_RIGHT, 0.75 ) ):
        slope = side * canvas.uniform( 0.1, 0.4 )
        vx = xc + ( horizon - top ) / slope
        vps.append( vx )
        _facade( canvas, x0, x1, _line( xc, top, vx, horizon ),
                 _line( xc, base, vx, horizon ), code, color * shade )
    return dict( horizon=horizon, skyline=True, planar=[ 'left', 'right' ],
                 vertical=True, vanishing=True, vanishing_x=vps )

def renderAlley( canvas ):
    width, height = canvas.width, canvas.height
    horizon = int( round( canvas.uniform( 0.45, 0.55 ) * height ) )
    _skyAndGround( canvas, horizon )
    vx = canvas.uniform( 0.45, 0.55 ) * width
    color = _facadeColor( canvas )
    # the left wall faces right and the right wall faces left
    for edge, x0, x1, code, shade in (
            ( 0.0, 0.0, canvas.uniform( 0.3, 0.38 ) * width,
              GeometricClass.PLANAR_RIGHT, 1.0 ),
            ( float( width ), canvas.uniform( 0.62, 0.7 ) * width,
              float( width ), GeometricClass.PLANAR_LEFT, 0.75 ) ):
        yt = canvas.uniform( 0.03, 0.12 ) * height
        yb = canvas.uniform( 0.88, 0.97 ) * height
        _facade( canvas, x0, x1, _line( edge, yt, vx, horizon ),
                 _line( edge, yb, vx, horizon ), code, color * shade )
    return dict( horizon=horizon, skyline=True, planar=[ 'right', 'left' ],
                 vertical=True, vanishing=True, vanishing_x=[ vx ] )

RENDERERS = { 'horizon-only': renderHorizon,
              'fronto-building': renderFronto,
              'corner-building': renderCorner,
              'alley': renderAlley }


def _groundRow( codes, column ):
    "Topmost support row of a column"
    rows = np.flatnonzero( codes[ :, column ] == SUPPORT )
    return int( rows[ 0 ] ) if rows.size else codes.shape[ 0 ] - 1

def addOccluders( canvas, rng ):
    """Paint a solid block on the left half and a porous patch on the
       right half, both standing on the ground
       returns: solid Box"""
    width, height = canvas.width, canvas.height
    w = int( rng.uniform( 0.12, 0.2 ) * width )
    h = int( rng.uniform( 0.12, 0.2 ) * height )
    x = int( rng.uniform( 0.1, 0.45 ) * width - w / 2 )
    ground = _groundRow( canvas.codes, x + w // 2 )
    y = min( max( ground - h // 2, 1 ), height - h - 1 )
    box = Box( x, y, w, h )
    solid = np.zeros( canvas.codes.shape, dtype=bool )
    solid[ box.slices() ] = True
    canvas.fill( solid, rng.uniform( ( 0.08, 0.08, 0.1 ), ( 0.2, 0.2, 0.25 ) ),
                 GeometricClass.SOLID, sigma=0.0 )
    radius = rng.uniform( 0.06, 0.1 ) * width
    cx = rng.uniform( 0.6, 0.85 ) * width
    cy = _groundRow( canvas.codes, int( cx ) ) - 0.6 * radius
    patch = ( ( canvas.x - cx ) ** 2 + ( canvas.y - cy ) ** 2 ) < radius ** 2
    foliage = ndimage.gaussian_filter( rng.normal( size=patch.shape ), 1.5 )
    dark, light = ( 0.08, 0.3, 0.08 ), ( 0.3, 0.6, 0.2 )
    lit = foliage > np.median( foliage[ patch ] )
    canvas.fill( patch & lit, light, GeometricClass.POROUS, sigma=0.0 )
    canvas.fill( patch & ~lit, dark, GeometricClass.POROUS, sigma=0.0 )
    return box


def generateScene( kind, seed, width=WIDTH, height=HEIGHT, occluders=None ):
    """Render one scene
       kind: one of KINDS
       seed: generator seed
       occluders: force occluders on or off on a base kind; an
       occluded scene without occluders equals its base render"""
    if kind not in KINDS:
        raise ValueError( 'unknown scene kind %s' % kind )
    rng = np.random.default_rng( seed )
    base = kind
    if kind == 'occluded':
        base = BASE_KINDS[ int( rng.integers( len( BASE_KINDS ) ) ) ]
        occluders = True if occluders is None else occluders
    canvas = Canvas( np.random.default_rng( rng.integers( 2 ** 32 ) ),
                     width, height )
    gav = RENDERERS[ base ]( canvas )
    gav.update( base=base, solid=[], porous=False )
    if occluders:
        box = addOccluders( canvas, np.random.default_rng( rng.integers( 2 ** 32 ) ) )
        gav.update( solid=[ tuple( box ) ], porous=True )
    boxes = [ Box( *b ) for b in gav[ 'solid' ] ]
    return SyntheticScene( kind, canvas.raster(), LabelMap( canvas.codes ),
                           boxes, gav )

def generateScenes( seed, count, kinds=KINDS, outdir=None, width=WIDTH,
                    height=HEIGHT ):
    """Render count scenes cycling through kinds
       outdir: if given, write every scene there as scene<i>
       returns: [ SyntheticScene ]"""
    if count < 1:
        raise ValueError( 'scene count must be >= 1' )
    kinds = list( kinds )
    scenes = []
    for index in range( count ):
        kind = kinds[ index % len( kinds ) ]
        scene = generateScene( kind, seed * 100003 + index, width, height )
        scenes.append( scene )
        if outdir is not None:
            writeScene( scene, outdir, 'scene%03d' % index )
    info( '*** Generated %d scenes\n' % count )
    return scenes


def formatGav( gav ):
    "Text lines 'flag name payload' of a scene's known attributes"
    entries = ( ( 'sky-ground-line', gav[ 'skyline' ], '' ),
                ( 'horizon', gav[ 'horizon' ] is not None,
                  '' if gav[ 'horizon' ] is None else 'y=%d' % gav[ 'horizon' ] ),
                ( 'planar', bool( gav[ 'planar' ] ), ','.join( gav[ 'planar' ] ) ),
                ( 'vertical-line', gav[ 'vertical' ], '' ),
                ( 'vanishing-line', gav[ 'vanishing' ], ' '.join(
                    'x=%.1f' % x for x in gav.get( 'vanishing_x', [] ) ) ),
                ( 'solid', bool( gav[ 'solid' ] ), ' '.join(
                    '%d,%d,%d,%d' % b for b in gav[ 'solid' ] ) ),
                ( 'porous', gav[ 'porous' ], '' ) )
    return ''.join( '%d %s %s\n' % ( int( flag ), name, payload )
                    for name, flag, payload in entries )

def writeScene( scene, outdir, stem ):
    "Write image, truth, boxes and attribute files of a scene"
    os.makedirs( outdir, exist_ok=True )
    path = os.path.join( outdir, stem )
    writeRaster( scene.image, path + '.ppm' )
    writeLabelMap( scene.truth, 'codes', path + '_truth.pgm' )
    writeBoxes( scene.boxes, path + '_boxes.txt' )
    with open( path + '_gav.txt', 'w' ) as f:
        f.write( '# kind %s\n' % scene.kind )
        f.write( formatGav( scene.gav ) )


class DatasetItem( object ):
    "Image of a dataset directory with its optional companion files"

    def __init__( self, stem, image, truth=None, boxes=None ):
        self.stem = stem
        self.image = image
        self.truth = truth
        self.boxes = boxes

    def load( self ):
        "Return ( Raster, LabelMap or None, [ Box ] )"
        truth = readLabelMap( self.truth ) if self.truth else None
        boxes = readBoxes( self.boxes ) if self.boxes else []
        return readRaster( self.image ), truth, boxes

    def __repr__( self ):
        return '<DatasetItem %s>' % self.stem


def readDataset( directory, requireTruth=True ):
    """Find '<stem>.ppm' / '<stem>.pgm' images with '<stem>_truth.pgm'
       and '<stem>_boxes.txt' companions, in natural stem order"""
    items = []
    for name in sorted( os.listdir( directory ), key=natural ):
        stem, ext = os.path.splitext( name )
        if ext not in ( '.ppm', '.pgm' ) or stemOf( name ) != stem:
            continue
        path = os.path.join( directory, stem )
        truth = path + '_truth.pgm'
        boxes = path + '_boxes.txt'
        item = DatasetItem( stem, os.path.join( directory, name ),
                            truth if os.path.exists( truth ) else None,
                            boxes if os.path.exists( boxes ) else None )
        if requireTruth and item.truth is None:
            output( '*** %s has no ground truth, skipping\n' % stem )
            continue
        items.append( item )
    return items
