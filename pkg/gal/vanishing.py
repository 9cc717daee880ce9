"""
Vanishing points of line segments by RANSAC.

Candidate points are intersections of two segments in homogeneous
coordinates, so parallel segments produce points at infinity. A
segment supports a point when the direction from its midpoint to the
point is within a few degrees of its own direction.
"""

from itertools import combinations
import math

import numpy as np

from gal.log import debug

# third homogeneous coordinate below this (after scaling) is at infinity
INFINITY_EPS = 1e-9


class VanishingPoint( object ):
    """Homogeneous point with the indices of its supporting segments
       point: (3,) unit vector"""

    def __init__( self, point, inliers ):
        self.point = np.asarray( point, dtype=np.float64 )
        self.inliers = inliers

    @property
    def finite( self ):
        return abs( self.point[ 2 ] ) > INFINITY_EPS

    @property
    def x( self ):
        return self.point[ 0 ] / self.point[ 2 ] if self.finite else math.inf

    @property
    def y( self ):
        return self.point[ 1 ] / self.point[ 2 ] if self.finite else math.inf

    def __repr__( self ):
        if self.finite:
            return '<VanishingPoint %.1f,%.1f %d inliers>' % (
                self.x, self.y, len( self.inliers ) )
        return '<VanishingPoint at infinity %d inliers>' % len( self.inliers )


def _lines( segments ):
    "Homogeneous lines, scaled so that a^2 + b^2 = 1, (n, 3)"
    lines = np.array( [ s.homogeneous() for s in segments ], dtype=np.float64 )
    return lines / np.hypot( lines[ :, 0 ], lines[ :, 1 ] )[ :, np.newaxis ]

def residuals( segments, point ):
    """Angle in degrees between every segment and the direction from
       its midpoint to a homogeneous point"""
    point = np.asarray( point, dtype=np.float64 )
    mids = np.array( [ s.midpoint for s in segments ] )
    dirs = np.array( [ ( s.x2 - s.x1, s.y2 - s.y1 ) for s in segments ] )
    if abs( point[ 2 ] ) > INFINITY_EPS:
        towards = point[ :2 ] / point[ 2 ] - mids
    else:
        towards = np.tile( point[ :2 ], ( len( segments ), 1 ) )
    norm = np.hypot( *towards.T ) * np.hypot( *dirs.T )
    cos = np.abs( ( towards * dirs ).sum( axis=1 ) ) / np.maximum( norm, 1e-12 )
    angle = np.degrees( np.arccos( np.clip( cos, 0.0, 1.0 ) ) )
    # a point sitting on a midpoint constrains nothing
    angle[ norm < 1e-12 ] = 90.0
    return angle

def _refit( lines ):
    "Least-squares point closest to all lines, as a unit vector"
    _, _, vt = np.linalg.svd( lines )
    point = vt[ -1 ]
    return point / np.linalg.norm( point )

def ransacVanishing( segments, iterations=500, inlierDeg=2.0, minInliers=5,
                     seed=0 ):
    """Dominant vanishing point of a set of segments
       segments: [ LineSegment ]
       iterations: random pairs to try; all pairs are tried when there
       are fewer
       returns: VanishingPoint, or None with fewer than minInliers"""
    if len( segments ) < max( 2, minInliers ):
        return None
    lines = _lines( segments )
    n = len( segments )
    if n * ( n - 1 ) // 2 <= iterations:
        pairs = combinations( range( n ), 2 )
    else:
        rng = np.random.default_rng( seed )
        pairs = ( rng.choice( n, 2, replace=False ) for _ in range( iterations ) )
    best, bestCount = None, 0
    for i, j in pairs:
        point = np.cross( lines[ i ], lines[ j ] )
        norm = np.linalg.norm( point )
        if norm < 1e-12:
            continue
        count = int( ( residuals( segments, point / norm ) < inlierDeg ).sum() )
        if count > bestCount:
            best, bestCount = point / norm, count
    if best is None or bestCount < minInliers:
        return None
    inliers = np.flatnonzero( residuals( segments, best ) < inlierDeg )
    refined = _refit( lines[ inliers ] )
    again = np.flatnonzero( residuals( segments, refined ) < inlierDeg )
    if len( again ) >= len( inliers ):
        best, inliers = refined, again
    return VanishingPoint( best, inliers.tolist() )

def vanishingPoints( segments, count=3, iterations=500, inlierDeg=2.0,
                     minInliers=5, seed=0 ):
    """Up to count vanishing points, found one after the other on the
       segments not yet explained
       returns: [ VanishingPoint ], inliers indexing segments"""
    remaining = list( range( len( segments ) ) )
    points = []
    while len( points ) < count:
        vp = ransacVanishing( [ segments[ i ] for i in remaining ],
                              iterations, inlierDeg, minInliers,
                              seed + len( points ) )
        if vp is None:
            break
        vp.inliers = [ remaining[ i ] for i in vp.inliers ]
        points.append( vp )
        used = set( vp.inliers )
        remaining = [ i for i in remaining if i not in used ]
    debug( '*** vanishing points: %s\n' % points )
    return points
