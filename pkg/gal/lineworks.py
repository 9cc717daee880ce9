"""
Low-level geometric evidence.

detectSegments finds straight line segments with the LSD detector,
edgeProbability and defocusMap produce the boundary-likelihood maps
that validate sky and ground lines, and verticalLineScore measures
how much vertical structure a region carries.
"""

from collections import namedtuple
import math

import cv2
import numpy as np
from scipy import ndimage
from skimage.draw import line as drawLine

from gal.config import Config
from gal.core import ParameterError, quantize
from gal.log import debug

# gradient magnitudes below this are treated as exactly zero
GRADIENT_FLOOR = 1e-8


class LineSegment( namedtuple( 'LineSegment', 'x1 y1 x2 y2' ) ):
    """Straight segment in pixel coordinates, image y pointing down.
       Endpoints are stored in ( y, x ) order so that equal segments
       compare equal regardless of how they were given."""

    __slots__ = ()

    def __new__( cls, x1, y1, x2, y2 ):
        if ( y2, x2 ) < ( y1, x1 ):
            x1, y1, x2, y2 = x2, y2, x1, y1
        return super( LineSegment, cls ).__new__( cls, float( x1 ), float( y1 ),
                                                  float( x2 ), float( y2 ) )

    @property
    def length( self ):
        return math.hypot( self.x2 - self.x1, self.y2 - self.y1 )

    @property
    def angle( self ):
        "Direction in degrees in [0, 180); 90 is vertical"
        return math.degrees( math.atan2( self.y2 - self.y1,
                                         self.x2 - self.x1 ) ) % 180.0

    @property
    def midpoint( self ):
        return ( ( self.x1 + self.x2 ) / 2.0, ( self.y1 + self.y2 ) / 2.0 )

    def isVertical( self, tolerance=5.0 ):
        "Within tolerance degrees of vertical"
        return abs( self.angle - 90.0 ) <= tolerance

    def isHorizontal( self, tolerance=10.0 ):
        "Within tolerance degrees of horizontal"
        return min( self.angle, 180.0 - self.angle ) <= tolerance

    def homogeneous( self ):
        "Homogeneous line coordinates ( a, b, c ), a x + b y + c = 0"
        return np.cross( [ self.x1, self.y1, 1.0 ], [ self.x2, self.y2, 1.0 ] )

    def translated( self, dx, dy ):
        return LineSegment( self.x1 + dx, self.y1 + dy,
                            self.x2 + dx, self.y2 + dy )

    def __str__( self ):
        return '%.2f %.2f %.2f %.2f %.2f %.2f' % (
            self.x1, self.y1, self.x2, self.y2, self.length, self.angle )


def detectSegments( img, angleTolerance=22.5, minLength=15.0 ):
    """Detect line segments with LSD
       img: Raster, converted to 8-bit gray
       angleTolerance: region growing orientation tolerance in degrees
       minLength: shorter segments are dropped
       returns: [ LineSegment ] ordered by ( y1, x1 )"""
    gray = quantize( img.gray() )
    lsd = cv2.createLineSegmentDetector( cv2.LSD_REFINE_STD, 0.8, 0.6, 2.0,
                                         angleTolerance, 0, 0.7, 1024 )
    found = lsd.detect( gray )[ 0 ]
    segments = []
    if found is not None:
        for x1, y1, x2, y2 in found.reshape( -1, 4 ).astype( float ):
            segment = LineSegment( x1, y1, x2, y2 )
            if segment.length >= minLength:
                segments.append( segment )
    segments.sort( key=lambda s: ( s.y1, s.x1, s.y2, s.x2 ) )
    debug( '*** %d line segments\n' % len( segments ) )
    return segments

def lineMap( segments, shape ):
    """Rasterize segments with 1-pixel Bresenham lines
       returns: (H, W) array of 0.0 and 1.0"""
    height, width = shape
    out = np.zeros( shape )
    for s in segments:
        rows, cols = drawLine( int( round( s.y1 ) ), int( round( s.x1 ) ),
                               int( round( s.y2 ) ), int( round( s.x2 ) ) )
        inside = ( rows >= 0 ) & ( rows < height ) & ( cols >= 0 ) & ( cols < width )
        out[ rows[ inside ], cols[ inside ] ] = 1.0
    return out

def writeSegments( segments, path ):
    "Write segments as 'x1 y1 x2 y2 length angle' lines"
    with open( path, 'w' ) as f:
        for s in segments:
            f.write( '%s\n' % ( s, ) )


def _normalize( response, percentile, floor ):
    "Scale by max( percentile of positive responses, floor ), clamp to 1"
    positive = response[ response > 0 ]
    if not positive.size:
        return np.zeros_like( response )
    scale = max( np.percentile( positive, percentile ), floor )
    return np.clip( response / scale, 0.0, 1.0 )

def gaussianGradient( gray, sigma ):
    "Gaussian derivatives ( gx, gy, magnitude )"
    gx = ndimage.gaussian_filter( gray, sigma, order=( 0, 1 ) )
    gy = ndimage.gaussian_filter( gray, sigma, order=( 1, 0 ) )
    magnitude = np.hypot( gx, gy )
    magnitude[ magnitude < GRADIENT_FLOOR ] = 0.0
    return gx, gy, magnitude

def suppressNonMaxima( gx, gy, magnitude ):
    """Keep pixels whose magnitude is >= both neighbours along the
       gradient direction, quantized to 0, 45, 90 or 135 degrees"""
    padded = np.pad( magnitude, 1 )
    height, width = magnitude.shape
    angle = np.degrees( np.arctan2( gy, gx ) ) % 180.0
    sector = ( ( angle + 22.5 ) // 45 ).astype( int ) % 4
    # ( dy, dx ) steps for gradient directions 0, 45, 90, 135 degrees
    steps = ( ( 0, 1 ), ( 1, 1 ), ( 1, 0 ), ( 1, -1 ) )
    keep = np.zeros( magnitude.shape, dtype=bool )
    for index, ( dy, dx ) in enumerate( steps ):
        ahead = padded[ 1 + dy:1 + dy + height, 1 + dx:1 + dx + width ]
        behind = padded[ 1 - dy:1 - dy + height, 1 - dx:1 - dx + width ]
        keep |= ( ( sector == index ) & ( magnitude >= ahead ) &
                  ( magnitude >= behind ) )
    return np.where( keep & ( magnitude > 0 ), magnitude, 0.0 )

def edgeProbability( img, sigma=1.0, percentile=99.0, floor=0.1 ):
    """Boundary likelihood P_SE: thinned Gaussian gradient magnitude
       img: Raster
       returns: (H, W) array in [0, 1]"""
    gx, gy, magnitude = gaussianGradient( img.gray(), sigma )
    return _normalize( suppressNonMaxima( gx, gy, magnitude ),
                       percentile, floor )

def blurEstimate( gray, sigma0=1.0, maxBlur=5.0, eps=1e-6 ):
    """Per-pixel defocus estimate from the re-blur gradient ratio
       returns: (H, W) blur sigma in [0, maxBlur]"""
    gy, gx = np.gradient( gray )
    sharp = np.hypot( gx, gy )
    gy, gx = np.gradient( ndimage.gaussian_filter( gray, sigma0 ) )
    reblurred = np.hypot( gx, gy )
    ratio = sharp / np.maximum( reblurred, GRADIENT_FLOOR )
    sigma = sigma0 / np.sqrt( np.maximum( ratio ** 2 - 1.0, eps ) )
    return np.clip( sigma, 0.0, maxBlur )

def denseBlur( gray, edges, sigma0=1.0, maxBlur=5.0, box=9, farBlend=False,
               nearPx=6.0, farPx=16.0 ):
    """Dense defocus map: every pixel takes the blur estimate of its
       nearest edge pixel, then a box x box mean filter
       edges: boolean (H, W) edge pixel mask
       farBlend: blend pixels between nearPx and farPx from any edge
       towards maxBlur
       returns: (H, W) blur map"""
    if not edges.any():
        return np.full( gray.shape, float( maxBlur ) )
    sparse = blurEstimate( gray, sigma0, maxBlur )
    distance, ( rows, cols ) = ndimage.distance_transform_edt(
        ~edges, return_indices=True )
    dense = sparse[ rows, cols ]
    if farBlend:
        t = np.clip( ( distance - nearPx ) / max( farPx - nearPx, 1e-9 ), 0, 1 )
        dense = ( 1.0 - t ) * dense + t * maxBlur
    return ndimage.uniform_filter( dense, size=box, mode='nearest' )

def defocusMap( img, edge=None, config=None ):
    """Defocus edge probability P_DF
       img: Raster
       edge: precomputed edgeProbability (optional)
       config: Config for thresholds (optional)
       returns: (H, W) array in [0, 1]"""
    config = Config() if config is None else config
    if edge is None:
        edge = edgeProbability( img, config[ 'edge.sigma' ],
                                config[ 'edge.percentile' ],
                                config[ 'edge.norm_floor' ] )
    dense = denseBlur( img.gray(), edge > config[ 'edge.threshold' ],
                       config[ 'defocus.sigma0' ], config[ 'defocus.max_blur' ],
                       config[ 'defocus.box' ],
                       bool( config[ 'defocus.far_blend' ] ),
                       config[ 'defocus.near_px' ], config[ 'defocus.far_px' ] )
    magnitude = ndimage.gaussian_gradient_magnitude( dense, 1.0 )
    magnitude[ magnitude < GRADIENT_FLOOR ] = 0.0
    return _normalize( magnitude, config[ 'edge.percentile' ],
                       config[ 'defocus.norm_floor' ] )

def verticalLineScore( segments, region, tolerance=5.0 ):
    """Vertical structure of a region
       segments: [ LineSegment ]
       region: boolean (H, W) mask
       returns: min( 1, total length of near-vertical segments whose
       midpoint lies in region / sqrt( area ) )"""
    area = int( np.count_nonzero( region ) )
    if not area:
        raise ParameterError( 'vertical line score of an empty region' )
    height, width = region.shape
    total = 0.0
    for s in segments:
        if not s.isVertical( tolerance ):
            continue
        mx, my = s.midpoint
        col, row = int( math.floor( mx ) ), int( math.floor( my ) )
        if 0 <= row < height and 0 <= col < width and region[ row, col ]:
            total += s.length
    return min( 1.0, total / math.sqrt( area ) )


class EvidenceMaps( object ):
    """Line, edge and defocus evidence of one image
       segments: detected LineSegments
       lines: P_LS, edge: P_SE, defocus: P_DF, all (H, W)"""

    def __init__( self, segments, lines, edge, defocus ):
        self.segments = segments
        self.lines = lines
        self.edge = edge
        self.defocus = defocus
        for name in ( 'lines', 'edge', 'defocus' ):
            getattr( self, name ).flags.writeable = False

    @property
    def shape( self ):
        return self.edge.shape


def computeEvidence( img, config ):
    "Compute all EvidenceMaps of an image"
    segments = detectSegments( img, config[ 'lsd.angle_tolerance' ],
                               config[ 'lsd.min_length' ] )
    edge = edgeProbability( img, config[ 'edge.sigma' ],
                            config[ 'edge.percentile' ],
                            config[ 'edge.norm_floor' ] )
    defocus = defocusMap( img, edge, config )
    return EvidenceMaps( segments, lineMap( segments, img.shape ),
                         edge, defocus )
