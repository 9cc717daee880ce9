"""
Global attribute extraction.

Seven questions are asked of every image, each answered by a binary
flag with a geometric payload:

sky-ground-line: are there sky or ground lines the evidence supports?
horizon: where do sky and support meet directly?
planar: which trapezoidal facades does the skyline outline?
vertical-line: which segments carry vertical building structure?
vanishing-line: which way do facade lines recede?
solid: which objects do the supplied boxes hold?
porous: which candidate objects have random contours?

The answers become the five unary components and the three pairwise
evidence sources of the refinement energy. A component whose
attribute did not fire is exactly uniform.
"""

from bisect import bisect_left

import numpy as np
from more_itertools import consecutive_groups, windowed
from scipy import ndimage
from scipy.special import logsumexp, softmax
from skimage import measure
from skimage.draw import line as drawLine

from gal.core import ( ConsistencyError, GeometricClass, NCLASSES, PLANAR,
                       SUPPORT3, VERTICAL3, SKY3, UNIFORM, isDistribution )
from gal.gmm import fitColorModel
from gal.grabcut import solidMask
from gal.lineworks import gaussianGradient, verticalLineScore
from gal.log import debug, info
from gal.vanishing import ransacVanishing, vanishingPoints

ATTRIBUTES = ( 'skyGroundLine', 'horizon', 'planar', 'verticalLine',
               'vanishing', 'solid', 'porous' )

NAMES = { 'skyGroundLine': 'sky-ground-line', 'horizon': 'horizon',
          'planar': 'planar', 'verticalLine': 'vertical-line',
          'vanishing': 'vanishing-line', 'solid': 'solid',
          'porous': 'porous' }

ORIENTATIONS = { 'left': GeometricClass.PLANAR_LEFT,
                 'center': GeometricClass.PLANAR_CENTER,
                 'right': GeometricClass.PLANAR_RIGHT }

# segments closer than this to vertical do not vote for horizontal
# vanishing points
NEAR_VERTICAL = 30.0

# colour samples used per GMM fit
GMM_SAMPLES = 20000


class BoundaryPolyline( object ):
    """Sky or ground line, one y value per column
       kind: 'sky' or 'ground'
       ys: (W,) rows; valid: (W,) column flags
       confidence: evidence mean, accepted: passed validation
       deposit: (W,) per-column evidence of an accepted line"""

    def __init__( self, kind, ys, valid, confidence=0.0, accepted=False,
                  deposit=None ):
        self.kind = kind
        self.ys = np.asarray( ys, dtype=np.float64 )
        self.valid = np.asarray( valid, dtype=bool )
        self.confidence = float( confidence )
        self.accepted = accepted
        self.deposit = deposit

    @property
    def width( self ):
        return self.valid.size

    @property
    def present( self ):
        return bool( self.valid.any() )

    def columns( self ):
        return np.flatnonzero( self.valid )

    def filled( self ):
        "ys over every column, interpolated across invalid ones"
        cols = self.columns()
        return np.interp( np.arange( self.width ), cols, self.ys[ cols ] )

    def summary( self ):
        cols = self.columns()
        return '%s:%d-%d:%.3f' % ( self.kind, cols[ 0 ], cols[ -1 ],
                                   self.confidence )

    def __repr__( self ):
        return '<BoundaryPolyline %s %d columns>' % ( self.kind,
                                                      self.valid.sum() )


# Sky and ground lines

def _bridge( ys, valid, hidden ):
    "Interpolate over hidden runs that have valid columns on both sides"
    width = valid.size
    for run in consecutive_groups( np.flatnonzero( hidden & ~valid ).tolist() ):
        run = list( run )
        left, right = run[ 0 ] - 1, run[ -1 ] + 1
        if left < 0 or right >= width or not ( valid[ left ] and valid[ right ] ):
            continue
        ys[ run ] = np.interp( run, [ left, right ], [ ys[ left ], ys[ right ] ] )
        valid[ run ] = True

def _dropShortRuns( valid, minRun ):
    for run in consecutive_groups( np.flatnonzero( valid ).tolist() ):
        run = list( run )
        if len( run ) < minRun:
            valid[ run ] = False

def traceBoundaries( labels3, occluder=None, minRun=0.05 ):
    """Sky and ground polylines of a support/vertical/sky map
       labels3: (H, W) 3-class codes
       occluder: boolean (H, W) mask of removed objects; transitions
       touching it are bridged from the neighbouring columns
       minRun: shortest kept run of valid columns, fraction of W
       returns: ( sky, ground ) BoundaryPolylines"""
    labels3 = np.asarray( labels3 )
    height, width = labels3.shape
    if occluder is None:
        occluder = np.zeros( labels3.shape, dtype=bool )
    lines = {}
    for kind in ( 'sky', 'ground' ):
        lines[ kind ] = ( np.zeros( width ), np.zeros( width, dtype=bool ),
                          np.zeros( width, dtype=bool ) )
    for x in range( width ):
        col, hid = labels3[ :, x ], occluder[ :, x ]
        sky = np.flatnonzero( col == SKY3 )
        if sky.size:
            end = sky[ 0 ]
            while end + 1 < height and col[ end + 1 ] == SKY3:
                end += 1
            if end + 1 < height and col[ end + 1 ] == VERTICAL3:
                ys, valid, hidden = lines[ 'sky' ]
                if hid[ end ] or hid[ end + 1 ]:
                    hidden[ x ] = True
                else:
                    ys[ x ], valid[ x ] = end, True
        steps = np.flatnonzero( ( col[ 1: ] == SUPPORT3 ) &
                                ( col[ :-1 ] == VERTICAL3 ) )
        if steps.size:
            y = steps[ 0 ] + 1
            ys, valid, hidden = lines[ 'ground' ]
            if hid[ y ] or hid[ y - 1 ]:
                hidden[ x ] = True
            else:
                ys[ x ], valid[ x ] = y, True
    result = []
    for kind in ( 'sky', 'ground' ):
        ys, valid, hidden = lines[ kind ]
        _bridge( ys, valid, hidden )
        _dropShortRuns( valid, minRun * width )
        result.append( BoundaryPolyline( kind, ys, valid ) )
    return tuple( result )

def evidenceAlong( line, ev, dilate=2, band=1 ):
    """Per-column product P_LS * P_SE * P_DF along a polyline
       P_LS is dilated by dilate pixels, P_SE and P_DF are read as the
       maximum over +-band rows
       returns: (k,) values for the valid columns"""
    height = ev.shape[ 0 ]
    size = 2 * dilate + 1
    lines = ndimage.maximum_filter( ev.lines, size=( size, size ) )
    edge = ndimage.maximum_filter( ev.edge, size=( 2 * band + 1, 1 ) )
    defocus = ndimage.maximum_filter( ev.defocus, size=( 2 * band + 1, 1 ) )
    cols = line.columns()
    rows = np.clip( np.round( line.ys[ cols ] ).astype( int ), 0, height - 1 )
    return lines[ rows, cols ] * edge[ rows, cols ] * defocus[ rows, cols ]

def validateBoundary( line, ev, config ):
    """Score a polyline against the evidence maps
       returns: BoundaryPolyline with confidence, accepted flag and
       per-column deposit"""
    if not line.present:
        return BoundaryPolyline( line.kind, line.ys, line.valid )
    p = evidenceAlong( line, ev, config[ 'boundary.ls_dilate' ],
                       config[ 'boundary.band' ] )
    confidence = float( p.mean() )
    accepted = confidence >= config[ 'boundary.min_confidence' ]
    deposit = np.zeros( line.width )
    deposit[ line.columns() ] = p
    if not accepted:
        debug( '*** %s line rejected, confidence %.3f\n'
               % ( line.kind, confidence ) )
    return BoundaryPolyline( line.kind, line.ys, line.valid, confidence,
                             accepted, deposit )

def depositLines( lines, shape ):
    "Pixel map of the evidence that accepted lines carry"
    out = np.zeros( shape )
    for line in lines:
        cols = line.columns()
        rows = np.clip( np.round( line.ys[ cols ] ).astype( int ), 0,
                        shape[ 0 ] - 1 )
        out[ rows, cols ] = np.maximum( out[ rows, cols ],
                                        line.deposit[ cols ] )
    return out

def checkAboveBelow( labels3, lines, minArea=0.002 ):
    """Vertical regions lying above a sky line or below a ground line
       lines: polylines to test against
       returns: [ boolean (H, W) mask ], components of at least
       minArea * H * W pixels"""
    labels3 = np.asarray( labels3 )
    height, width = labels3.shape
    rows = np.arange( height )[ :, np.newaxis ]
    outside = np.zeros( labels3.shape, dtype=bool )
    for line in lines:
        if not line.present:
            continue
        y = line.filled()[ np.newaxis, : ]
        outside |= ( rows < y ) if line.kind == 'sky' else ( rows > y )
    components = measure.label( ( labels3 == VERTICAL3 ) & outside,
                                connectivity=1 )
    sizes = np.bincount( components.ravel() )
    return [ components == c for c in range( 1, sizes.size )
             if sizes[ c ] >= minArea * height * width ]


# Horizon

def sceneMode( segments, height, config ):
    "'building' when vertical segments add up to enough length"
    tolerance = config[ 'vertical.tolerance' ]
    shortest = config[ 'horizon.segment_length' ] * height
    total = sum( s.length for s in segments
                 if s.isVertical( tolerance ) and s.length >= shortest )
    return ( 'building' if total >= config[ 'horizon.building_length' ] * height
             else 'natural' )

def horizonHistogram( segments, ev, config ):
    """Row histogram of near-horizontal segment pixels weighted by edge
       probability and a Gaussian location prior
       returns: ( votes, vote-weighted row sums ) per bin"""
    height, width = ev.shape
    bins = config[ 'horizon.bins' ]
    mean = config[ 'horizon.prior_mean' ] * height
    sigma = config[ 'horizon.prior_sigma' ] * height
    votes, rowSums = np.zeros( bins ), np.zeros( bins )
    for s in segments:
        if not s.isHorizontal( config[ 'horizon.tilt' ] ):
            continue
        rows, cols = drawLine( int( round( s.y1 ) ), int( round( s.x1 ) ),
                               int( round( s.y2 ) ), int( round( s.x2 ) ) )
        inside = ( rows >= 0 ) & ( rows < height ) & ( cols >= 0 ) & ( cols < width )
        rows, cols = rows[ inside ], cols[ inside ]
        vote = ev.edge[ rows, cols ] * np.exp( -0.5 * ( ( rows - mean ) / sigma ) ** 2 )
        index = np.minimum( ( rows * bins ) // height, bins - 1 )
        np.add.at( votes, index, vote )
        np.add.at( rowSums, index, vote * rows )
    return votes, rowSums

def horizonNatural( segments, ev, config ):
    """Horizon row of a natural scene from the dominant histogram bin
       returns: row, or None when no bin dominates"""
    votes, rowSums = horizonHistogram( segments, ev, config )
    if not ( votes > 0 ).any():
        return None
    peak = int( np.argmax( votes ) )
    window = np.zeros( votes.size, dtype=bool )
    window[ max( peak - 1, 0 ):peak + 2 ] = True
    others = votes[ ~window & ( votes > 0 ) ]
    if others.size and votes[ window ].sum() < (
            config[ 'horizon.dominance' ] * others.mean() ):
        debug( '*** no dominant horizon bin\n' )
        return None
    return int( round( rowSums[ peak ] / votes[ peak ] ) )

def horizonFromPoints( points ):
    """Least-squares horizontal line through finite vanishing points
       returns: row, or None with fewer than two points"""
    ys = [ p.y for p in points if p.finite ]
    if len( ys ) < 2:
        return None
    return int( round( float( np.mean( ys ) ) ) )

def horizonBuilding( segments, config ):
    "Horizon row of a building scene from its horizontal vanishing points"
    candidates = [ s for s in segments if not s.isVertical( NEAR_VERTICAL ) ]
    points = vanishingPoints( candidates, 4, config[ 'vanishing.iterations' ],
                              config[ 'vanishing.inlier_deg' ],
                              config[ 'vanishing.min_inliers' ],
                              config[ 'seed' ] )
    return horizonFromPoints( points )

def segmentLabels3( graph, labels3 ):
    "Majority 3-class code of every segment"
    counts = np.stack( [ graph.segmentMeans( labels3 == c )
                         for c in ( SUPPORT3, VERTICAL3, SKY3 ) ], axis=1 )
    return np.argmax( counts, axis=1 )

def _logMean( model, samples ):
    "log of the mean per-sample likelihood"
    return logsumexp( model.logLikelihood( samples ) ) - np.log( len( samples ) )

def gmmRefine( img, graph, labels3, horizon, initial, config ):
    """Sky/support correction of segments on the wrong side of the horizon
       initial: (n, 7) P_initial
       returns: ( P_horizon (n, 7), True when the colour models could
       be fitted )"""
    height, width = labels3.shape
    rows = np.tile( UNIFORM, ( len( graph ), 1 ) )
    rgb = img.rgb().reshape( -1, 3 )
    flat = np.asarray( labels3 ).ravel()
    y = np.repeat( np.arange( height ), width )
    confident = { 'sky': ( flat == SKY3 ) & ( y < horizon ),
                  'support': ( flat == SUPPORT3 ) & ( y >= horizon ) }
    if not all( mask.any() for mask in confident.values() ):
        debug( '*** horizon refinement has no confident region\n' )
        return rows, False
    models = {}
    for name, mask in confident.items():
        samples = rgb[ mask ]
        models[ name ] = fitColorModel(
            samples[ ::max( 1, len( samples ) // GMM_SAMPLES ) ], config )
    codes = segmentLabels3( graph, labels3 )
    cy = np.array( [ graph.node[ i ][ 'centroid' ][ 1 ] for i in range( len( graph ) ) ] ) * height
    wrong = ( ( codes == SKY3 ) & ( cy >= horizon ) ) | (
        ( codes == SUPPORT3 ) & ( cy < horizon ) )
    for node in np.flatnonzero( wrong ):
        samples = rgb[ graph.node[ node ][ 'pixels' ] ]
        pair = softmax( [ _logMean( models[ 'sky' ], samples ),
                          _logMean( models[ 'support' ], samples ) ] )
        row = initial[ node ].copy()
        mass = row[ GeometricClass.SKY ] + row[ GeometricClass.SUPPORT ]
        row[ GeometricClass.SKY ] = mass * pair[ 0 ]
        row[ GeometricClass.SUPPORT ] = mass * pair[ 1 ]
        rows[ node ] = row
    debug( '*** horizon %d: %d segments refined\n' % ( horizon, wrong.sum() ) )
    return rows, True


# Planar surfaces

class Surface( object ):
    """Planar piece between break columns
       x0, x1: first and last column; slope: skyline slope dy/dx
       orientation: 'left', 'center' or 'right'
       mask: (H, W) region between the lines; members: segment ids"""

    def __init__( self, x0, x1, slope, orientation, mask, members ):
        self.x0, self.x1 = x0, x1
        self.slope = slope
        self.orientation = orientation
        self.mask = mask
        self.members = members

    @property
    def label( self ):
        return ORIENTATIONS[ self.orientation ]

    def summary( self ):
        return '%s:%d-%d' % ( self.orientation, self.x0, self.x1 )

    def __repr__( self ):
        return '<Surface %s slope %.3f>' % ( self.summary(), self.slope )


def fitSlope( xs, ys ):
    "Least-squares slope dy/dx"
    xs = np.asarray( xs, dtype=np.float64 )
    ys = np.asarray( ys, dtype=np.float64 )
    dx = xs - xs.mean()
    return float( ( dx * ( ys - ys.mean() ) ).sum() / ( dx * dx ).sum() )

def orientationOf( slope, threshold ):
    if slope < -threshold:
        return 'left'
    if slope > threshold:
        return 'right'
    return 'center'

def _slopeBreaks( columns, ys, half, threshold ):
    """Positions where the windowed skyline slope changes sign, ignoring
       slopes inside the +-threshold dead band"""
    breaks, previous = [], None
    for window in windowed( columns, 2 * half + 1 ):
        if window[ -1 ] is None:
            break
        window = list( window )
        slope = fitSlope( window, ys[ window ] )
        sign = 1 if slope > threshold else -1 if slope < -threshold else 0
        column = window[ half ]
        if sign:
            if previous and previous[ 0 ] != sign:
                breaks.append( ( previous[ 1 ] + column ) / 2.0 )
            previous = ( sign, column )
    return breaks

def _lineBounds( sky, ground, shape ):
    "Rows bounding the vertical region per column, exclusive"
    height, width = shape
    top = sky.filled() if sky is not None and sky.present else np.full( width, -1.0 )
    bottom = ( ground.filled() if ground is not None and ground.present
               else np.full( width, float( height ) ) )
    return top, bottom

def fitTrapezoids( sky, ground, segments, graph, config ):
    """Split the vertical region into planar pieces and orient each
       from its skyline slope (the ground line, sign inverted, when
       there is no sky line)
       returns: ( [ Surface ], P_planar (n, 7) of 0 and 1 )"""
    height, width = graph.shape
    planar = np.zeros( ( len( graph ), NCLASSES ) )
    if sky is not None and sky.present:
        reference, sign = sky, 1.0
    elif ground is not None and ground.present:
        reference, sign = ground, -1.0
    else:
        return [], planar
    top, bottom = _lineBounds( sky, ground, graph.shape )
    local = bottom - top
    threshold = config[ 'trapezoid.slope' ]
    breaks = []
    for s in segments:
        if not s.isVertical( config[ 'vertical.tolerance' ] ):
            continue
        mx = s.midpoint[ 0 ]
        column = min( max( int( round( mx ) ), 0 ), width - 1 )
        if reference.valid[ column ] and (
                s.length >= config[ 'trapezoid.break_height' ] * local[ column ] ):
            breaks.append( mx )
    half = max( 1, int( round( config[ 'trapezoid.window' ] * width / 2.0 ) ) )
    runs = [ list( run ) for run in
             consecutive_groups( reference.columns().tolist() ) ]
    for run in runs:
        breaks.extend( _slopeBreaks( run, reference.ys, half, threshold ) )
    breaks.sort()
    rows = np.arange( height )[ :, np.newaxis ]
    between = ( rows > top[ np.newaxis, : ] ) & ( rows < bottom[ np.newaxis, : ] )
    surfaces = []
    for run in runs:
        pieces = {}
        for column in run:
            index = bisect_left( breaks, column )
            if index < len( breaks ) and breaks[ index ] == column:
                continue
            pieces.setdefault( index, [] ).append( column )
        for columns in pieces.values():
            if len( columns ) < config[ 'trapezoid.min_width' ] * width:
                continue
            slope = sign * fitSlope( columns, reference.ys[ columns ] )
            mask = np.zeros( graph.shape, dtype=bool )
            mask[ :, columns ] = between[ :, columns ]
            members = np.flatnonzero( graph.segmentMeans( mask ) >=
                                      config[ 'trapezoid.membership' ] )
            surface = Surface( columns[ 0 ], columns[ -1 ], slope,
                               orientationOf( slope, threshold ), mask,
                               members )
            planar[ members, surface.label ] = 1.0
            surfaces.append( surface )
    debug( '*** planar surfaces: %s\n' % surfaces )
    return surfaces, planar


# Vertical and vanishing lines

def _padded( graph, node, pad ):
    "Slices of a segment's bounding box grown by pad pixels"
    height, width = graph.shape
    x0, y0, x1, y1 = graph.node[ node ][ 'bbox' ]
    return ( slice( max( y0 - pad, 0 ), min( y1 + pad + 1, height ) ),
             slice( max( x0 - pad, 0 ), min( x1 + pad + 1, width ) ) )

def verticalAttribute( graph, segments, config ):
    """Building evidence b of every segment and the component it implies
       returns: ( P_vertical (n, 7), b (n,) )"""
    tolerance = config[ 'vertical.tolerance' ]
    pad = config[ 'vertical.dilate' ]
    structure = np.ones( ( 2 * pad + 1, 2 * pad + 1 ), dtype=bool )
    vertical = [ s for s in segments if s.isVertical( tolerance ) ]
    b = np.zeros( len( graph ) )
    if vertical:
        mids = np.array( [ s.midpoint for s in vertical ] )
        for node in graph.nodes():
            ys, xs = _padded( graph, node, pad )
            near = ( ( mids[ :, 0 ] >= xs.start ) & ( mids[ :, 0 ] < xs.stop ) &
                     ( mids[ :, 1 ] >= ys.start ) & ( mids[ :, 1 ] < ys.stop ) )
            if not near.any():
                continue
            region = ndimage.binary_dilation(
                graph.labels[ ys, xs ] == node, structure )
            b[ node ] = verticalLineScore(
                [ vertical[ i ].translated( -xs.start, -ys.start )
                  for i in np.flatnonzero( near ) ], region, tolerance )
    rows = np.repeat( ( ( 1.0 - b ) / 4.0 )[ :, np.newaxis ], NCLASSES, axis=1 )
    rows[ :, PLANAR ] = ( b / 3.0 )[ :, np.newaxis ]
    return rows, b

def _buildingRegions( graph, b, gate ):
    "Connected unions of segments with b above the gate"
    strong = graph.paint( b > gate )
    components = measure.label( strong, connectivity=1 )
    return [ components == c for c in range( 1, components.max() + 1 ) ]

def vanishingOrientation( vp, cx, width, config ):
    "Facade orientation implied by a vanishing point and the region centre"
    if not vp.finite or abs( vp.x - cx ) > config[ 'vanishing.far_factor' ] * width:
        return 'center'
    if abs( vp.x - cx ) < config[ 'vanishing.center_frac' ] * width:
        return 'center'
    return 'left' if vp.x < cx else 'right'

def estimateVanishing( segments, graph, b, config, regions=None ):
    """Facade orientation from the vanishing point of the lines in each
       building region
       regions: (H, W) masks, default the connected building segments
       returns: ( P_vanishing (n, 7) of 0 and 1, [ ( orientation, vp ) ] )"""
    height, width = graph.shape
    rows = np.zeros( ( len( graph ), NCLASSES ) )
    gate = config[ 'vertical.gate' ]
    if regions is None:
        regions = _buildingRegions( graph, b, gate )
    areas = graph.areas()
    found = []
    for index, mask in enumerate( regions ):
        members = np.flatnonzero( graph.segmentMeans( mask ) >=
                                  config[ 'trapezoid.membership' ] )
        if not members.size or np.average( b[ members ],
                                           weights=areas[ members ] ) <= gate:
            continue
        lines = []
        for s in segments:
            mx, my = s.midpoint
            col, row = int( mx ), int( my )
            if ( not s.isVertical( NEAR_VERTICAL ) and 0 <= row < height and
                 0 <= col < width and mask[ row, col ] ):
                lines.append( s )
        vp = ransacVanishing( lines, config[ 'vanishing.iterations' ],
                              config[ 'vanishing.inlier_deg' ],
                              config[ 'vanishing.min_inliers' ],
                              config[ 'seed' ] + index )
        if vp is None:
            continue
        cx = np.nonzero( mask )[ 1 ].mean()
        orientation = vanishingOrientation( vp, cx, width, config )
        rows[ members, ORIENTATIONS[ orientation ] ] = 1.0
        found.append( ( orientation, vp ) )
    return rows, found


# Porous and solid

def contourRandomness( angles, bins=8 ):
    """Normalized entropy of contour orientations
       angles: degrees, taken modulo 180
       returns: r in [0, 1], 0 for one orientation"""
    angles = np.asarray( angles, dtype=np.float64 ).ravel()
    if not angles.size:
        raise ValueError( 'no contour orientations' )
    width = 180.0 / bins
    index = ( ( ( angles + width / 2.0 ) % 180.0 ) // width ).astype( int )
    p = np.bincount( np.minimum( index, bins - 1 ), minlength=bins ) / float( angles.size )
    p = p[ p > 0 ]
    return float( -( p * np.log( p ) ).sum() / np.log( bins ) )

def porousScore( img, graph, ev, initial, regions, config ):
    """Porous against solid evidence of candidate object segments
       regions: masks from checkAboveBelow
       returns: ( P_porous (n, 7), { segment: r } )"""
    rows = np.tile( UNIFORM, ( len( graph ), 1 ) )
    candidate = np.isin( np.argmax( initial, axis=1 ),
                         ( GeometricClass.POROUS, GeometricClass.SOLID ) )
    if regions:
        union = np.logical_or.reduce( regions )
        candidate |= graph.segmentMeans( union ) >= 0.5
    if not candidate.any():
        return rows, {}
    gx, gy, _ = gaussianGradient( img.gray(), config[ 'edge.sigma' ] )
    angle = np.degrees( np.arctan2( gy, gx ) ) % 180.0
    edges = ev.edge > config[ 'edge.threshold' ]
    band = config[ 'porous.band' ]
    structure = np.ones( ( 2 * band + 1, 2 * band + 1 ), dtype=bool )
    mass = config[ 'porous.mass' ]
    scores = {}
    for node in np.flatnonzero( candidate ):
        crop = _padded( graph, node, 0 )
        interior = ndimage.binary_erosion( graph.labels[ crop ] == node,
                                           structure ) & edges[ crop ]
        if not interior.any():
            continue
        r = contourRandomness( angle[ crop ][ interior ] )
        row = np.full( NCLASSES, ( 1.0 - mass ) / NCLASSES )
        row[ GeometricClass.POROUS ] += mass * r
        row[ GeometricClass.SOLID ] += mass * ( 1.0 - r )
        rows[ node ] = row
        scores[ int( node ) ] = r
    return rows, scores


# The attribute vector

class GlobalAttributeVector( object ):
    """Seven flags with payloads. Payload reads are logged in reads."""

    def __init__( self ):
        self.payloads = {}
        self.reads = []

    def set( self, name, payload ):
        "Raise the flag of an attribute"
        if name not in ATTRIBUTES:
            raise ConsistencyError( 'unknown attribute %s' % name )
        if payload is None or ( hasattr( payload, '__len__' ) and
                                not len( payload ) ):
            raise ConsistencyError( 'attribute %s set without payload' % name )
        self.payloads[ name ] = payload

    def flag( self, name ):
        return int( name in self.payloads )

    def payload( self, name ):
        "Payload of a raised flag, None otherwise"
        self.reads.append( name )
        return self.payloads.get( name )

    @property
    def vector( self ):
        return tuple( self.flag( name ) for name in ATTRIBUTES )

    def _summary( self, name ):
        payload = self.payload( name )
        if name == 'skyGroundLine':
            return ' '.join( line.summary() for line in payload )
        if name == 'horizon':
            return 'y=%d' % payload
        if name == 'planar':
            return ' '.join( s.summary() for s in payload )
        if name == 'verticalLine':
            return 'segments=%d' % len( payload )
        if name == 'vanishing':
            return ' '.join( '%s@%s' % ( o, '%.1f' % vp.x if vp.finite
                                         else 'inf' ) for o, vp in payload )
        if name == 'solid':
            return ' '.join( '%d,%d,%d,%d' % tuple( box ) for box, _ in payload )
        return 'segments=%d max_r=%.3f' % ( len( payload ),
                                            max( payload.values() ) )

    def report( self ):
        "Text lines 'flag name payload-summary'"
        return ''.join( '%d %s %s\n' % (
            self.flag( name ), NAMES[ name ],
            self._summary( name ) if self.flag( name ) else '' )
            for name in ATTRIBUTES )

    def __repr__( self ):
        return '<GlobalAttributeVector %s>' % ''.join( map( str, self.vector ) )


COMPONENTS = ( 'initial', 'porous', 'solid', 'horizon', 'vertical' )


class AttributeMaps( object ):
    """Unary components and pairwise evidence of one image
       initial, porous, solid, horizon, vertical: (n, 7) distributions
       line: (H, W) P_line in [0, 1]
       vanishing, planar: (n, 7) 0/1 indicators
       useVanishing, usePlanar: whether those pairwise terms apply"""

    def __init__( self, initial, porous, solid, horizon, vertical, line,
                  vanishing, planar, useVanishing=False, usePlanar=False ):
        self.initial = initial
        self.porous = porous
        self.solid = solid
        self.horizon = horizon
        self.vertical = vertical
        self.line = line
        self.vanishing = vanishing
        self.planar = planar
        self.useVanishing = useVanishing
        self.usePlanar = usePlanar

    def components( self ):
        "The five unary components stacked, (5, n, 7)"
        return np.stack( [ getattr( self, name ) for name in COMPONENTS ] )

    def validate( self ):
        for name in COMPONENTS:
            rows = getattr( self, name )
            if rows.shape != self.initial.shape or not isDistribution( rows ):
                raise ConsistencyError( 'invalid %s component rows' % name )
        if self.line.min() < 0 or self.line.max() > 1:
            raise ConsistencyError( 'boundary evidence outside [0,1]' )
        return self

    @property
    def size( self ):
        return self.initial.shape[ 0 ]


def assembleGav( gav, initial, components, line, vanishing, planar ):
    """Collect the extracted components into AttributeMaps
       components: { name: (n, 7) } for the fired unary attributes;
       missing ones are uniform
       returns: validated AttributeMaps"""
    n = initial.shape[ 0 ]
    uniform = np.tile( UNIFORM, ( n, 1 ) )
    rows = dict( ( name, components.get( name, uniform ) )
                 for name in COMPONENTS[ 1: ] )
    maps = AttributeMaps( initial, line=line,
                          vanishing=vanishing if gav.flag( 'vanishing' )
                          else np.zeros( ( n, NCLASSES ) ),
                          planar=planar if gav.flag( 'planar' )
                          else np.zeros( ( n, NCLASSES ) ),
                          useVanishing=bool( gav.flag( 'vanishing' ) ),
                          usePlanar=bool( gav.flag( 'planar' ) ), **rows )
    return maps.validate()


def extractAttributes( img, ipl, ev, config, boxes=(), enabled=ATTRIBUTES ):
    """Run every enabled extractor on one image
       ipl: IplResult; ev: EvidenceMaps
       boxes: object Boxes for grab-cut
       enabled: attribute names to extract; the others stay at flag 0
       returns: ( GlobalAttributeVector, AttributeMaps )"""
    info( '*** Extracting global attributes\n' )
    graph, labels3, initial = ipl.graph, ipl.labels3, ipl.initial
    height, width = graph.shape
    gav = GlobalAttributeVector()
    components = {}
    occluder = None
    if 'solid' in enabled and boxes:
        masks, rows = solidMask( img, boxes, graph, config )
        if masks:
            gav.set( 'solid', masks )
            components[ 'solid' ] = rows
            occluder = np.logical_or.reduce( [ m for _, m in masks ] )
    sky, ground = traceBoundaries( labels3, occluder,
                                   config[ 'boundary.min_run' ] )
    sky = validateBoundary( sky, ev, config )
    ground = validateBoundary( ground, ev, config )
    accepted = [ line for line in ( sky, ground ) if line.accepted ]
    deposits = np.zeros( graph.shape )
    if 'skyGroundLine' in enabled and accepted:
        gav.set( 'skyGroundLine', accepted )
        deposits = depositLines( accepted, graph.shape )
    line = deposits
    if config[ 'crf.contrast_fallback' ]:
        line = np.maximum( deposits, config[ 'crf.contrast_weight' ] * ev.edge )
    if 'horizon' in enabled:
        if sceneMode( ev.segments, height, config ) == 'building':
            horizon = horizonBuilding( ev.segments, config )
        else:
            horizon = horizonNatural( ev.segments, ev, config )
        if horizon is not None:
            rows, fitted = gmmRefine( img, graph, labels3, horizon, initial,
                                      config )
            if fitted:
                gav.set( 'horizon', horizon )
                components[ 'horizon' ] = rows
    verticalRows, b = verticalAttribute( graph, ev.segments, config )
    building = np.flatnonzero( b > config[ 'vertical.gate' ] )
    if 'verticalLine' in enabled and building.size:
        gav.set( 'verticalLine', building )
        components[ 'vertical' ] = verticalRows
    surfaces, planar = [], None
    if 'planar' in enabled or 'vanishing' in enabled:
        validSky = sky if sky.accepted else None
        validGround = ground if ground.accepted else None
        surfaces, planar = fitTrapezoids( validSky, validGround, ev.segments,
                                          graph, config )
        if 'planar' in enabled and surfaces:
            gav.set( 'planar', surfaces )
    vanishing = None
    if 'vanishing' in enabled:
        regions = [ s.mask for s in surfaces ] if surfaces else None
        vanishing, found = estimateVanishing( ev.segments, graph, b, config,
                                              regions )
        if found:
            gav.set( 'vanishing', found )
    if 'porous' in enabled:
        regions = checkAboveBelow( labels3, accepted,
                                   config[ 'boundary.min_area' ] )
        rows, scores = porousScore( img, graph, ev, initial, regions, config )
        if scores:
            gav.set( 'porous', scores )
            components[ 'porous' ] = rows
    debug( '*** attributes %s\n' % gav )
    return gav, assembleGav( gav, initial, components, line, vanishing, planar )
