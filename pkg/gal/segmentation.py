"""
Super-pixel segmentation and the segment adjacency graph.

Three segmentations of different granularity are computed per image
(SLIC plus Felzenszwalb-Huttenlocher at two scales), intersected into
fine units, and the fine units become the nodes of a SegmentGraph.
Every Segmentation holds contiguous ids 0..count-1, one per
4-connected region, so the graph built on it is exactly the pixel
adjacency structure.
"""

import numpy as np
from scipy import ndimage
from skimage import measure, segmentation as sksegmentation

from gal.core import ( DimensionError, ParameterError, ConsistencyError,
                       encodeNetpbm )
from gal.log import debug

# RGB values are scaled to this range before SLIC so that a
# compactness of 10 weighs space against color as it does in CIELAB
SLIC_COLOR_RANGE = 100.0


def relabelConnected( ids ):
    """Split every id into its 4-connected components
       ids: (H, W) integer array
       returns: (H, W) int32 array of contiguous ids in raster order"""
    labels = measure.label( np.asarray( ids ).astype( np.int64 ) + 1,
                            background=0, connectivity=1 )
    return ( labels - 1 ).astype( np.int32 )

def adjacentPairs( ids ):
    """Return all 4-adjacent pixel pairs with differing ids
       returns: ( a, b, pa, pb ) arrays: ids and flat pixel indices,
       ordered so that a < b"""
    ids = np.asarray( ids )
    index = np.arange( ids.size ).reshape( ids.shape )
    pieces = []
    for first, second in ( ( np.s_[ :, :-1 ], np.s_[ :, 1: ] ),
                           ( np.s_[ :-1, : ], np.s_[ 1:, : ] ) ):
        a, b = ids[ first ].ravel(), ids[ second ].ravel()
        pa, pb = index[ first ].ravel(), index[ second ].ravel()
        differ = a != b
        pieces.append( ( a[ differ ], b[ differ ],
                         pa[ differ ], pb[ differ ] ) )
    a, b, pa, pb = ( np.concatenate( arrays ) for arrays in zip( *pieces ) )
    swap = a > b
    a, b = np.where( swap, b, a ), np.where( swap, a, b )
    pa, pb = np.where( swap, pb, pa ), np.where( swap, pa, pb )
    return a, b, pa, pb


class Segmentation( object ):
    "Per-pixel segment ids with the method that produced them."

    def __init__( self, labels, method='given', **params ):
        """labels: (H, W) ids, contiguous and 4-connected
           method: producing algorithm tag
           params: algorithm parameters"""
        labels = np.array( labels, dtype=np.int32 )
        if labels.ndim != 2 or labels.size == 0:
            raise DimensionError( 'segmentation must be a non-empty 2-d map' )
        count = int( labels.max() ) + 1
        if labels.min() != 0 or np.unique( labels ).size != count:
            raise ConsistencyError( 'segment ids are not contiguous' )
        if int( relabelConnected( labels ).max() ) + 1 != count:
            raise ConsistencyError( 'segments are not 4-connected' )
        labels.flags.writeable = False
        self.labels = labels
        self.count = count
        self.method = method
        self.params = params

    @classmethod
    def fromIds( cls, ids, method='given', **params ):
        "Build a Segmentation from arbitrary ids, splitting disconnected ids"
        return cls( relabelConnected( ids ), method, **params )

    @property
    def shape( self ):
        return self.labels.shape

    def sizes( self ):
        "Pixel count per segment"
        return np.bincount( self.labels.ravel(), minlength=self.count )

    def __repr__( self ):
        return '<Segmentation %s %d segments %s>' % (
            self.method, self.count, self.params )


def _mergeOrphans( rgb, ids, keep ):
    """Merge components not in keep into the adjacent component with the
       closest mean color, repeating until every component is kept
       ids: 4-connected component ids; keep: bool per component"""
    ids = ids.copy()
    flat = rgb.reshape( -1, rgb.shape[ -1 ] )
    while not keep.all():
        count = keep.size
        sizes = np.bincount( ids.ravel(), minlength=count ).astype( float )
        sums = np.stack( [ np.bincount( ids.ravel(), flat[ :, c ], count )
                           for c in range( flat.shape[ 1 ] ) ], axis=1 )
        means = sums / np.maximum( sizes, 1 )[ :, None ]
        a, b, _, _ = adjacentPairs( ids )
        pairs = np.unique( np.stack( [ a, b ], axis=1 ), axis=0 )
        target = np.arange( count )
        merged = False
        for orphan in np.flatnonzero( ~keep ):
            nbrs = np.concatenate( [ pairs[ pairs[ :, 0 ] == orphan, 1 ],
                                     pairs[ pairs[ :, 1 ] == orphan, 0 ] ] )
            nbrs = nbrs[ keep[ nbrs ] ]
            if not nbrs.size:
                continue
            dist = np.linalg.norm( means[ nbrs ] - means[ orphan ], axis=1 )
            target[ orphan ] = nbrs[ np.argmin( dist ) ]
            keep[ orphan ] = True
            merged = True
        if not merged:
            # only orphans left anywhere: keep the largest one
            keep[ np.argmax( np.where( keep, -1, sizes ) ) ] = True
        ids = target[ ids ]
    return relabelConnected( ids )

def slic( img, k, compactness, iterations=10 ):
    """SLIC super-pixels on raw RGB
       img: 3-channel Raster
       k: target segment count
       compactness: weight of spatial against color distance
       iterations: k-means iterations"""
    if img.channels != 3:
        raise DimensionError( 'slic needs a 3-channel raster' )
    if k < 1 or k > img.width * img.height:
        raise ParameterError( 'slic k=%s must lie in [1, %d]'
                              % ( k, img.width * img.height ) )
    if compactness <= 0:
        raise ParameterError( 'slic compactness must be positive' )
    raw = sksegmentation.slic( img.data * SLIC_COLOR_RANGE, n_segments=k,
                               compactness=compactness,
                               max_num_iter=iterations, convert2lab=False,
                               enforce_connectivity=False, start_label=0,
                               channel_axis=-1 )
    components = relabelConnected( raw )
    # the largest component of each SLIC cluster survives
    sizes = np.bincount( components.ravel() )
    owner = np.zeros( sizes.size, dtype=np.int64 )
    owner[ components.ravel() ] = raw.ravel()
    best = np.full( raw.max() + 1, -1 )
    for comp in np.argsort( sizes, kind='stable' ):
        best[ owner[ comp ] ] = comp
    keep = np.zeros( sizes.size, dtype=bool )
    keep[ best[ best >= 0 ] ] = True
    labels = _mergeOrphans( img.data, components, keep )
    seg = Segmentation( labels, 'slic', k=k, compactness=compactness )
    debug( '*** slic k=%d: %d segments\n' % ( k, seg.count ) )
    return seg

def graphSegment( img, scale, minSize, sigma=0.8 ):
    """Felzenszwalb-Huttenlocher graph-based segmentation
       img: Raster
       scale: the k of the merge criterion, for 8-bit intensities
       minSize: components below this pixel count are merged
       sigma: Gaussian presmoothing"""
    if scale <= 0:
        raise ParameterError( 'graph segmentation scale must be positive' )
    if minSize < 1:
        raise ParameterError( 'graph segmentation min size must be >= 1' )
    raw = sksegmentation.felzenszwalb( img.rgb(), scale=scale, sigma=sigma,
                                       min_size=int( minSize ),
                                       channel_axis=-1 )
    seg = Segmentation.fromIds( raw, 'fh', scale=scale, min_size=minSize )
    debug( '*** fh scale=%s: %d segments\n' % ( scale, seg.count ) )
    return seg

def intersectSegmentations( segs ):
    """Intersect segmentations into fine units
       segs: two or more Segmentations of equal shape
       returns: Segmentation whose pixels share an id iff they share
       ids in every input and are 4-connected through such pixels"""
    segs = list( segs )
    if len( segs ) < 2:
        raise ParameterError( 'intersection needs at least 2 segmentations' )
    shape = segs[ 0 ].shape
    key = np.zeros( shape, dtype=np.int64 )
    for seg in segs:
        if seg.shape != shape:
            raise DimensionError( 'cannot intersect %s with %s'
                                  % ( shape, seg.shape ) )
        key = key * seg.count + seg.labels
        key = np.unique( key, return_inverse=True )[ 1 ].reshape( shape )
    return Segmentation.fromIds( key, 'intersection',
                                 sources=[ s.method for s in segs ] )

def multiScale( img, config ):
    """Compute the three segmentations fused by the initial labeling
       returns: [ slic, fine fh, coarse fh ]"""
    factor = config[ 'fh.coarse_factor' ]
    return [ slic( img, config[ 'slic.k' ], config[ 'slic.compactness' ],
                   config[ 'slic.iterations' ] ),
             graphSegment( img, config[ 'fh.scale' ], config[ 'fh.min_size' ],
                           config[ 'fh.sigma' ] ),
             graphSegment( img, config[ 'fh.scale' ] * factor,
                           config[ 'fh.min_size' ] * factor,
                           config[ 'fh.sigma' ] ) ]


class SegmentGraph( object ):
    """Segment adjacency graph G(S,E)
       node[ i ]: pixels (flat indices), area, centroid (x, y) and
       bbox (x0, y0, x1, y1), inclusive
       edge[ ( i, j ) ], i < j: boundary, an (n, 2) array of flat pixel
       index pairs, first in i, second in j"""

    def __init__( self, seg ):
        self.seg = seg
        self.node = {}
        self.edge = {}

    @property
    def shape( self ):
        return self.seg.shape

    @property
    def labels( self ):
        return self.seg.labels

    def addNode( self, node, **attrs ):
        self.node[ node ] = attrs

    def addEdge( self, src, dst, **attrs ):
        if src == dst:
            raise ConsistencyError( 'self-loop on segment %d' % src )
        self.edge[ ( min( src, dst ), max( src, dst ) ) ] = attrs

    def nodes( self, data=False ):
        """Return list of graph nodes
           data: return list of ( node, attrs )"""
        return list( self.node.items() ) if data else list( self.node )

    def edges( self, data=False ):
        """Return list of graph edges in ( min id, max id ) order
           data: return list of ( src, dst, attrs )"""
        if data:
            return [ ( i, j, attrs ) for ( i, j ), attrs in self.edge.items() ]
        return list( self.edge )

    def neighbors( self, node ):
        "Return the segments adjacent to node"
        return sorted( j if i == node else i for i, j in self.edge
                       if node in ( i, j ) )

    def __len__( self ):
        "Return the number of segments"
        return len( self.node )

    def areas( self ):
        "Pixel count per segment as an array"
        return np.array( [ self.node[ i ][ 'area' ] for i in range( len( self ) ) ] )

    def mask( self, node ):
        "Boolean (H, W) mask of one segment"
        return self.labels == node

    def paint( self, values ):
        """Spread per-segment values onto pixels
           values: array indexed by segment id"""
        return np.asarray( values )[ self.labels ]

    def segmentMeans( self, values ):
        "Mean of an (H, W) map over every segment"
        flat = self.labels.ravel()
        sums = np.bincount( flat, np.asarray( values, float ).ravel(),
                            minlength=len( self ) )
        return sums / self.areas()

    def __repr__( self ):
        return '<SegmentGraph %d nodes %d edges>' % ( len( self ),
                                                      len( self.edge ) )


def buildGraph( seg ):
    """Build the adjacency graph of a segmentation
       returns: SegmentGraph with edges in lexicographic order"""
    graph = SegmentGraph( seg )
    labels = seg.labels
    height, width = labels.shape
    flat = labels.ravel()
    order = np.argsort( flat, kind='stable' )
    bounds = np.cumsum( np.bincount( flat, minlength=seg.count ) )[ :-1 ]
    ys, xs = np.indices( labels.shape )
    areas = np.bincount( flat, minlength=seg.count )
    cx = np.bincount( flat, xs.ravel() + 0.5, seg.count ) / areas
    cy = np.bincount( flat, ys.ravel() + 0.5, seg.count ) / areas
    slices = ndimage.find_objects( labels + 1 )
    for node, pixels in enumerate( np.split( order, bounds ) ):
        rows, cols = slices[ node ]
        graph.addNode( node, pixels=pixels, area=int( areas[ node ] ),
                       centroid=( cx[ node ] / width, cy[ node ] / height ),
                       bbox=( cols.start, rows.start,
                              cols.stop - 1, rows.stop - 1 ) )
    a, b, pa, pb = adjacentPairs( labels )
    if a.size:
        order = np.lexsort( ( b, a ) )
        a, b, pa, pb = a[ order ], b[ order ], pa[ order ], pb[ order ]
        starts = np.flatnonzero( np.r_[ True, ( a[ 1: ] != a[ :-1 ] ) |
                                        ( b[ 1: ] != b[ :-1 ] ) ] )
        ends = np.r_[ starts[ 1: ], a.size ]
        for start, end in zip( starts, ends ):
            graph.addEdge( int( a[ start ] ), int( b[ start ] ),
                           boundary=np.stack( [ pa[ start:end ],
                                                pb[ start:end ] ], axis=1 ) )
    debug( '*** segment graph: %s\n' % graph )
    return graph

def writeSegmentation( seg, path ):
    "Write segment ids modulo 256 as a P5 file for inspection"
    with open( path, 'wb' ) as f:
        f.write( encodeNetpbm( ( seg.labels % 256 ).astype( np.uint8 ) ) )
