"""
Refinement energy over the segment graph.

The unary cost of a label is the negative log of a weighted average
of the five unary components. The pairwise cost of two adjacent
segments taking different labels adds boundary, vanishing and planar
terms; a boundary carrying little line evidence makes disagreement
expensive and so smooths the labeling. Every cost is capped at M and
probabilities are floored at epsilon.
"""

from itertools import product

import numpy as np

from gal.core import LabelMap, NCLASSES, ParameterError, FormatError
from gal.log import debug, info, warn
from gal.optim import LabelingProblem, alphaExpansion
from gal.util import checkFloat

# lambda candidates of the parameter search
LAMBDAS = ( 0.01, 0.05, 0.1, 0.5, 1.0 )

# w grid resolution: compositions of STEPS into five parts
STEPS = 10


class CrfParams( object ):
    """Energy parameters
       w: five non-negative weights summing to 1
       lam: pairwise weight > 0
       epsilon: probability floor in ( 0, 1e-3 ]
       cap: cost cap M >= 1"""

    def __init__( self, w=None, lam=0.1, epsilon=1e-6, cap=10.0 ):
        w = np.full( 5, 0.2 ) if w is None else np.array( w, dtype=np.float64 )
        if w.shape != ( 5, ) or not np.all( np.isfinite( w ) ) or np.any(
                w < 0 ) or abs( w.sum() - 1.0 ) > 1e-9:
            raise ParameterError( 'w must be 5 non-negative weights summing to 1' )
        if not lam > 0:
            raise ParameterError( 'lambda must be > 0' )
        if not 0 < epsilon <= 1e-3:
            raise ParameterError( 'epsilon must lie in (0, 1e-3]' )
        if not cap >= 1:
            raise ParameterError( 'cost cap must be >= 1' )
        self.w = w
        self.lam = float( lam )
        self.epsilon = float( epsilon )
        self.cap = float( cap )

    @classmethod
    def fromConfig( cls, config, w=None ):
        return cls( w, config[ 'crf.lambda' ], config[ 'crf.epsilon' ],
                    config[ 'crf.cap' ] )

    def __eq__( self, other ):
        return ( isinstance( other, CrfParams ) and
                 np.array_equal( self.w, other.w ) and self.lam == other.lam )

    def __repr__( self ):
        return '<CrfParams w=%s lambda=%s>' % ( np.round( self.w, 3 ), self.lam )


def readParams( path, config ):
    "Read a 'w0 w1 w2 w3 w4 lambda' params file"
    with open( path ) as f:
        fields = f.read().split( '#', 1 )[ 0 ].split()
    if len( fields ) != 6 or not all( checkFloat( v ) for v in fields ):
        raise FormatError( '%s: expected "w0 w1 w2 w3 w4 lambda"' % path )
    values = [ float( v ) for v in fields ]
    return CrfParams( values[ :5 ], values[ 5 ], config[ 'crf.epsilon' ],
                      config[ 'crf.cap' ] )

def writeParams( params, path ):
    with open( path, 'w' ) as f:
        f.write( '%s %s\n' % ( ' '.join( '%.6g' % w for w in params.w ),
                               '%.6g' % params.lam ) )


def _cost( p, params ):
    "-log of floored probabilities, capped"
    return np.minimum( -np.log( np.maximum( p, params.epsilon ) ), params.cap )

def fusedProbability( maps, w ):
    "Weighted average of the unary components, (n, 7)"
    return np.tensordot( np.asarray( w, dtype=np.float64 ),
                         maps.components(), axes=1 )

def unaryCosts( maps, params ):
    """Unary cost matrix
       returns: (n, 7) costs in [0, M]"""
    maps.validate()
    return _cost( fusedProbability( maps, params.w ), params )

def _edgeArrays( graph ):
    "Edge node pairs (m, 2) and their boundary pixel pairs"
    edges = graph.edges( data=True )
    pairs = np.array( [ ( i, j ) for i, j, _ in edges ], dtype=np.int64 ).reshape( -1, 2 )
    return pairs, [ attrs[ 'boundary' ] for _, _, attrs in edges ]

def boundaryEvidence( line, boundaries ):
    """Mean over shared-boundary pixel pairs of the larger P_line value
       of the pair, per edge"""
    flat = line.ravel()
    return np.array( [ np.maximum( flat[ b[ :, 0 ] ], flat[ b[ :, 1 ] ] ).mean()
                       for b in boundaries ] )

def _disagreement( rows, pairs, params ):
    """-log | P( i, a ) - P( j, b ) | tables, zero for edges where
       neither end carries evidence"""
    left, right = rows[ pairs[ :, 0 ] ], rows[ pairs[ :, 1 ] ]
    phi = _cost( np.abs( left[ :, :, np.newaxis ] - right[ :, np.newaxis, : ] ),
                 params )
    evidence = left.any( axis=1 ) | right.any( axis=1 )
    phi[ ~evidence ] = 0.0
    return phi

def pairwiseCosts( maps, graph, params ):
    """Pairwise tables of every edge
       returns: ( edges (m, 2), theta (m, 7, 7) ), symmetric with zero
       diagonals, values in [0, M]"""
    pairs, boundaries = _edgeArrays( graph )
    theta = np.zeros( ( len( pairs ), NCLASSES, NCLASSES ) )
    if not len( pairs ):
        return pairs, theta
    phi = _cost( boundaryEvidence( maps.line, boundaries ), params )
    theta += phi[ :, np.newaxis, np.newaxis ]
    if maps.useVanishing:
        theta += _disagreement( maps.vanishing, pairs, params )
    if maps.usePlanar:
        theta += _disagreement( maps.planar, pairs, params )
    theta = np.minimum( theta, params.cap )
    theta = ( theta + theta.transpose( 0, 2, 1 ) ) / 2.0
    theta[ :, np.arange( NCLASSES ), np.arange( NCLASSES ) ] = 0.0
    return pairs, theta

def buildProblem( maps, graph, params ):
    "The LabelingProblem of one image"
    edges, theta = pairwiseCosts( maps, graph, params )
    return LabelingProblem( unaryCosts( maps, params ), edges, theta,
                            params.lam )

def totalEnergy( problem, labeling ):
    "Unary plus lambda-weighted pairwise energy of a labeling"
    return problem.energy( labeling )


class Refinement( object ):
    """Result of refine
       labels: LabelMap; segments: (n,) labels per segment
       trace: expansion energy trace; problem: the LabelingProblem"""

    def __init__( self, labels, segments, trace, problem ):
        self.labels = labels
        self.segments = segments
        self.trace = trace
        self.problem = problem

    @property
    def energy( self ):
        return self.trace[ -1 ][ 2 ]


def refine( maps, graph, params, cycles=10 ):
    """Minimize the energy with alpha-expansion and paint the labels
       returns: Refinement"""
    info( '*** Refining labels\n' )
    problem = buildProblem( maps, graph, params )
    segments, trace = alphaExpansion( problem, cycles )
    return Refinement( LabelMap( graph.paint( segments ) ), segments, trace,
                       problem )


# Parameter learning

class CrfSample( object ):
    """Training image for learnParams
       maps: AttributeMaps; graph: SegmentGraph
       truth: (H, W) ground-truth codes"""

    def __init__( self, maps, graph, truth ):
        self.maps = maps
        self.graph = graph
        self.truth = np.asarray( truth )
        counts = np.zeros( ( len( graph ), NCLASSES ) )
        np.add.at( counts, ( graph.labels.ravel(), self.truth.ravel() ), 1 )
        self.segmentTruth = np.argmax( counts, axis=1 )
        self.areas = graph.areas().astype( np.float64 )


def weightGrid( steps=STEPS ):
    """Every w on the 5-simplex with the given resolution, larger w[ 0 ]
       first, (k, 5)"""
    grid = [ c for c in product( range( steps, -1, -1 ), repeat=5 )
             if sum( c ) == steps ]
    return np.array( grid, dtype=np.float64 ) / steps

def _folds( count, folds ):
    "Fold index of every sample, leave-one-out when samples are few"
    folds = min( folds, count )
    return np.arange( count ) % folds, folds

def _foldMean( scores, fold, folds ):
    "Mean over folds of the mean held-out score"
    scores = np.asarray( scores )
    return np.mean( [ scores[ fold == k ].mean( axis=0 ) for k in range( folds ) ],
                    axis=0 )

def logLikelihoods( sample, grid, epsilon ):
    """Area-weighted mean log probability of the true labels for every
       grid weight vector, (k,)"""
    components = sample.maps.components()
    n = components.shape[ 1 ]
    truth = components[ :, np.arange( n ), sample.segmentTruth ]
    p = np.maximum( grid @ truth, epsilon )
    return ( np.log( p ) @ sample.areas ) / sample.areas.sum()

def pixelAccuracy( predicted, truth ):
    return float( np.mean( np.asarray( predicted ) == np.asarray( truth ) ) )

def learnParams( samples, config ):
    """Grid search of w by held-out log-likelihood, then of lambda by
       held-out pixel accuracy after refinement
       samples: [ CrfSample ]
       returns: CrfParams"""
    default = CrfParams.fromConfig( config )
    if len( samples ) < 2:
        warn( '*** Need at least 2 training images, using default '
              'parameters\n' )
        return default
    fold, folds = _folds( len( samples ), config[ 'crf.folds' ] )
    grid = weightGrid()
    info( '*** Scoring %d weight vectors over %d folds\n'
          % ( len( grid ), folds ) )
    scores = _foldMean( [ logLikelihoods( s, grid, default.epsilon )
                          for s in samples ], fold, folds )
    # argmax keeps the first maximum: the grid is sorted by w[ 0 ] descending
    w = grid[ int( np.argmax( np.round( scores, 12 ) ) ) ]
    best, bestAccuracy = None, -1.0
    for lam in LAMBDAS:
        params = CrfParams( w, lam, default.epsilon, default.cap )
        accuracy = _foldMean( [ pixelAccuracy(
            refine( s.maps, s.graph, params, config[ 'crf.cycles' ] ).labels.codes,
            s.truth ) for s in samples ], fold, folds )
        debug( '*** lambda %s: accuracy %.4f\n' % ( lam, accuracy ) )
        if accuracy > bestAccuracy + 1e-12:
            best, bestAccuracy = params, accuracy
    info( '*** Learned %s\n' % best )
    return best
