"""
Grab-cut object segmentation inside bounding boxes.

Each box is segmented on its own: the pixels of a frame around the box
are hard background, box pixels start as foreground, and a few rounds
of (color model refit -> min-cut) settle the object mask. Segments
mostly covered by an object mask become solid.
"""

import numpy as np

from gal.core import FormatError, GeometricClass, NCLASSES, UNIFORM
from gal.gmm import GmmModel
from gal.log import debug, warn
from gal.optim import FlowNetwork, maxFlow

# ( dy, dx ) steps of the 8-neighbourhood, each pair counted once
NEIGHBOURS = ( ( 0, 1 ), ( 1, 0 ), ( 1, 1 ), ( 1, -1 ) )


class Box( object ):
    "Axis-aligned box x, y, w, h in pixels"

    def __init__( self, x, y, w, h ):
        self.x, self.y, self.w, self.h = int( x ), int( y ), int( w ), int( h )

    def slices( self ):
        return np.s_[ self.y:self.y + self.h, self.x:self.x + self.w ]

    def __eq__( self, other ):
        return isinstance( other, Box ) and tuple( self ) == tuple( other )

    def __iter__( self ):
        return iter( ( self.x, self.y, self.w, self.h ) )

    def __repr__( self ):
        return 'Box(%d, %d, %d, %d)' % tuple( self )


def readBoxes( path ):
    "Read a boxes file, one 'x y w h' per line"
    boxes = []
    with open( path ) as f:
        for lineno, line in enumerate( f, 1 ):
            fields = line.split( '#', 1 )[ 0 ].split()
            if not fields:
                continue
            if len( fields ) != 4 or not all(
                    f.lstrip( '-' ).isdigit() for f in fields ):
                raise FormatError( '%s:%d: expected "x y w h"'
                                   % ( path, lineno ) )
            boxes.append( Box( *map( int, fields ) ) )
    return boxes

def writeBoxes( boxes, path ):
    with open( path, 'w' ) as f:
        for box in boxes:
            f.write( '%d %d %d %d\n' % tuple( box ) )

def checkBox( box, shape ):
    """Clip a box to the image
       returns: clipped Box, or None for empty or whole-image boxes"""
    height, width = shape
    x0, y0 = max( box.x, 0 ), max( box.y, 0 )
    x1, y1 = min( box.x + box.w, width ), min( box.y + box.h, height )
    if x1 <= x0 or y1 <= y0:
        warn( '*** Rejecting empty box %s\n' % ( box, ) )
        return None
    if x0 == 0 and y0 == 0 and x1 == width and y1 == height:
        warn( '*** Rejecting whole-image box %s\n' % ( box, ) )
        return None
    return Box( x0, y0, x1 - x0, y1 - y0 )


def _pairSlices( shape, dy, dx ):
    "Slices selecting the first and second pixel of every ( dy, dx ) pair"
    height, width = shape
    first = np.s_[ 0:height - dy, max( -dx, 0 ):width - max( dx, 0 ) ]
    second = np.s_[ dy:height, max( dx, 0 ):width + min( dx, 0 ) ]
    return first, second

def pairWeights( rgb, gamma=50.0 ):
    """Contrast-sensitive 8-neighbour weights
       gamma * exp( -beta |dI|^2 ), diagonals divided by sqrt( 2 ),
       beta = 1 / ( 2 mean |dI|^2 )
       returns: list of ( dy, dx, weights ) per direction"""
    diffs = []
    for dy, dx in NEIGHBOURS:
        first, second = _pairSlices( rgb.shape[ :2 ], dy, dx )
        diffs.append( ( ( rgb[ first ] - rgb[ second ] ) ** 2 ).sum( axis=-1 ) )
    mean = np.concatenate( [ d.ravel() for d in diffs ] ).mean()
    beta = 1.0 / ( 2.0 * mean ) if mean > 0 else 0.0
    weights = []
    for ( dy, dx ), d in zip( NEIGHBOURS, diffs ):
        scale = gamma / np.sqrt( 2.0 ) if dy and dx else gamma
        weights.append( ( dy, dx, scale * np.exp( -beta * d ) ) )
    return weights

def _pairIndex( shape, dy, dx ):
    "Flat indices of the first and second pixel of every ( dy, dx ) pair"
    index = np.arange( shape[ 0 ] * shape[ 1 ] ).reshape( shape )
    first, second = _pairSlices( shape, dy, dx )
    return index[ first ].ravel(), index[ second ].ravel()


class GrabCut( object ):
    "Grab-cut segmentation of one box."

    def __init__( self, img, box, frame=10, gamma=50.0, components=3,
                  seed=0 ):
        height, width = img.shape
        self.box = box
        y0, x0 = max( box.y - frame, 0 ), max( box.x - frame, 0 )
        y1 = min( box.y + box.h + frame, height )
        x1 = min( box.x + box.w + frame, width )
        self.origin = ( y0, x0 )
        self.rgb = img.rgb()[ y0:y1, x0:x1 ]
        shape = self.rgb.shape[ :2 ]
        self.inBox = np.zeros( shape, dtype=bool )
        self.inBox[ box.y - y0:box.y - y0 + box.h,
                    box.x - x0:box.x - x0 + box.w ] = True
        self.pairs = []
        for dy, dx, w in pairWeights( self.rgb, gamma ):
            p, q = _pairIndex( shape, dy, dx )
            self.pairs.append( ( p, q, w.ravel() ) )
        self.fg = GmmModel( components, seed=seed )
        self.bg = GmmModel( components, seed=seed )
        self.energies = []

    def _unaries( self ):
        "Per-pixel costs of foreground and background, flat arrays"
        colors = self.rgb.reshape( -1, 3 )
        return ( -self.fg.logLikelihood( colors ),
                 -self.bg.logLikelihood( colors ) )

    def energy( self, mask ):
        "Grab-cut energy of a flat foreground mask"
        costFg, costBg = self._unaries()
        total = np.where( mask, costFg, costBg ).sum()
        for p, q, w in self.pairs:
            total += w[ mask[ p ] != mask[ q ] ].sum()
        return float( total )

    def _cut( self ):
        "Min-cut for the current color models; frame pixels stay background"
        costFg, costBg = self._unaries()
        free = self.inBox.ravel()
        n = free.size
        # a box pixel next to the frame pays w when it is foreground
        costFg = costFg.copy()
        net = FlowNetwork( n + 2, source=n, sink=n + 1 )
        for p, q, w in self.pairs:
            both = free[ p ] & free[ q ]
            net.addArcs( p[ both ], q[ both ], w[ both ] )
            net.addArcs( q[ both ], p[ both ], w[ both ] )
            edge = free[ p ] & ~free[ q ]
            np.add.at( costFg, p[ edge ], w[ edge ] )
            edge = free[ q ] & ~free[ p ]
            np.add.at( costFg, q[ edge ], w[ edge ] )
        nodes = np.flatnonzero( free )
        shift = np.minimum( costFg, costBg )[ nodes ]
        # sink side is foreground
        net.addArcs( np.full( nodes.size, n ), nodes, costFg[ nodes ] - shift )
        net.addArcs( nodes, np.full( nodes.size, n + 1 ),
                     costBg[ nodes ] - shift )
        _, sourceSide = maxFlow( net )
        return free & ~sourceSide[ :n ]

    def run( self, iterations=5 ):
        """Alternate color model refits and min-cuts
           returns: (h, w) boolean mask of the region around the box"""
        mask = self.inBox.ravel().copy()
        colors = self.rgb.reshape( -1, 3 )
        for _ in range( iterations ):
            if not mask.any() or mask.all():
                break
            self.fg.fit( colors[ mask ] )
            self.bg.fit( colors[ ~mask ] )
            candidate = self._cut()
            energy = self.energy( candidate )
            if self.energies and energy > self.energies[ -1 ]:
                break
            mask = candidate
            self.energies.append( energy )
        return mask.reshape( self.inBox.shape )


def grabCut( img, box, config ):
    """Segment the object in one box
       returns: ( (H, W) boolean mask, energy trace )"""
    cut = GrabCut( img, box, config[ 'grabcut.frame' ],
                   config[ 'grabcut.gamma' ], config[ 'gmm.components' ],
                   config[ 'seed' ] )
    region = cut.run( config[ 'grabcut.iterations' ] )
    mask = np.zeros( img.shape, dtype=bool )
    y0, x0 = cut.origin
    mask[ y0:y0 + region.shape[ 0 ], x0:x0 + region.shape[ 1 ] ] = region
    debug( '*** grab-cut %s: %d pixels, energies %s\n'
           % ( box, mask.sum(), np.round( cut.energies, 2 ) ) )
    return mask, cut.energies

def solidMask( img, boxes, graph, config ):
    """Object masks and the solid unary component
       boxes: [ Box ]
       returns: ( [ ( Box, mask ) ], P_solid (n, 7) )"""
    rows = np.tile( UNIFORM, ( len( graph ), 1 ) )
    masks = []
    for box in boxes:
        box = checkBox( box, img.shape )
        if box is None:
            continue
        mask, _ = grabCut( img, box, config )
        if mask.any():
            masks.append( ( box, mask ) )
    if masks:
        union = np.logical_or.reduce( [ m for _, m in masks ] )
        overlap = graph.segmentMeans( union )
        solid = overlap > config[ 'solid.overlap' ]
        rows[ solid ] = np.eye( NCLASSES )[ GeometricClass.SOLID ]
    return masks, rows
