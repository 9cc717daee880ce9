"""
Combinatorial core: max-flow/min-cut, alpha-expansion and an
exhaustive search used to check them.

maxFlow solves an s-t network with the Boykov-Kolmogorov solver of
PyMaxflow. Expansion moves reduce each binary move to a min-cut with
the Kolmogorov-Zabih construction; pair tables that are not
submodular for a move are truncated by raising their E01 entry, and a
move is only taken when it strictly lowers the energy.
"""

import numpy as np
import maxflow

from gal.core import ParameterError, SizeError
from gal.log import debug

# largest number of labelings bruteForce will enumerate
BRUTE_FORCE_LIMIT = 10 ** 7
BRUTE_FORCE_CHUNK = 1 << 16


class FlowNetwork( object ):
    "Directed capacitated network with designated source and sink."

    def __init__( self, nodes, source=0, sink=1 ):
        if source == sink:
            raise ParameterError( 'source and sink must differ' )
        if not ( 0 <= source < nodes and 0 <= sink < nodes ):
            raise ParameterError( 'terminal outside the network' )
        self.nodes = nodes
        self.source = source
        self.sink = sink
        self.tails = []
        self.heads = []
        self.caps = []

    def addArc( self, u, v, cap ):
        "Add arc u -> v"
        self.addArcs( [ u ], [ v ], [ cap ] )

    def addArcs( self, tails, heads, caps ):
        "Add a batch of arcs given as three parallel sequences"
        tails = np.asarray( tails, dtype=np.int64 ).ravel()
        heads = np.asarray( heads, dtype=np.int64 ).ravel()
        caps = np.asarray( caps, dtype=np.float64 ).ravel()
        if not ( tails.size == heads.size == caps.size ):
            raise ParameterError( 'arc arrays differ in length' )
        if not np.all( np.isfinite( caps ) ) or np.any( caps < 0 ):
            raise ParameterError( 'capacities must be finite and >= 0' )
        for ends in ( tails, heads ):
            if ends.size and ( ends.min() < 0 or ends.max() >= self.nodes ):
                raise ParameterError( 'arc endpoint outside the network' )
        self.tails.append( tails )
        self.heads.append( heads )
        self.caps.append( caps )

    def arcs( self ):
        "Return ( tails, heads, caps ) arrays in insertion order"
        if not self.caps:
            empty = np.zeros( 0, dtype=np.int64 )
            return empty, empty, np.zeros( 0 )
        return ( np.concatenate( self.tails ), np.concatenate( self.heads ),
                 np.concatenate( self.caps ) )

    def cutCapacity( self, sourceSide ):
        "Capacity of the cut given a boolean source-side mask"
        tails, heads, caps = self.arcs()
        sourceSide = np.asarray( sourceSide, dtype=bool )
        return float( caps[ sourceSide[ tails ] & ~sourceSide[ heads ] ].sum() )

    def __repr__( self ):
        return '<FlowNetwork %d nodes %d arcs>' % ( self.nodes,
                                                    len( self.arcs()[ 2 ] ) )


def maxFlow( net ):
    """Maximum s-t flow
       net: FlowNetwork
       returns: ( flow value, boolean array, True for source-side nodes )"""
    tails, heads, caps = net.arcs()
    inner = [ n for n in range( net.nodes ) if n not in ( net.source, net.sink ) ]
    index = np.full( net.nodes, -1, dtype=np.int64 )
    index[ inner ] = np.arange( len( inner ) )
    useful = ( ( tails != heads ) & ( tails != net.sink ) &
               ( heads != net.source ) & ( caps > 0 ) )
    tails, heads, caps = tails[ useful ], heads[ useful ], caps[ useful ]
    direct = ( tails == net.source ) & ( heads == net.sink )
    value = float( caps[ direct ].sum() )
    sourceSide = np.zeros( net.nodes, dtype=bool )
    sourceSide[ net.source ] = True
    if not inner:
        return value, sourceSide
    g = maxflow.Graph[ float ]( len( inner ), int( useful.sum() ) )
    g.add_nodes( len( inner ) )
    fromSource = ( tails == net.source ) & ~direct
    toSink = ( heads == net.sink ) & ~direct
    middle = ~( fromSource | toSink | direct )
    if fromSource.any():
        g.add_grid_tedges( index[ heads[ fromSource ] ], caps[ fromSource ],
                           np.zeros( int( fromSource.sum() ) ) )
    if toSink.any():
        g.add_grid_tedges( index[ tails[ toSink ] ],
                           np.zeros( int( toSink.sum() ) ), caps[ toSink ] )
    for u, v, cap in zip( index[ tails[ middle ] ], index[ heads[ middle ] ],
                          caps[ middle ] ):
        g.add_edge( int( u ), int( v ), float( cap ), 0.0 )
    value += g.maxflow()
    for node in inner:
        sourceSide[ node ] = g.get_segment( int( index[ node ] ) ) == 0
    return value, sourceSide


class LabelingProblem( object ):
    """Pairwise labeling energy
       E( x ) = sum_i unary[ i, x_i ] + lam * sum_e theta[ e, x_i, x_j ]
       unary: (n, L) costs; edges: (m, 2) node pairs;
       theta: (m, L, L) tables, symmetrized with zero diagonal"""

    def __init__( self, unary, edges, theta, lam=1.0 ):
        unary = np.array( unary, dtype=np.float64 )
        if unary.ndim != 2 or unary.shape[ 0 ] < 1:
            raise ParameterError( 'unary costs must be an (n, L) matrix' )
        n, labels = unary.shape
        edges = np.array( edges, dtype=np.int64 ).reshape( -1, 2 )
        theta = np.array( theta, dtype=np.float64 ).reshape(
            len( edges ), labels, labels )
        for name, costs in ( ( 'unary', unary ), ( 'pairwise', theta ) ):
            if not np.all( np.isfinite( costs ) ) or np.any( costs < 0 ):
                raise ParameterError( '%s costs must be finite and >= 0'
                                      % name )
        if edges.size and ( edges.min() < 0 or edges.max() >= n or
                            np.any( edges[ :, 0 ] == edges[ :, 1 ] ) ):
            raise ParameterError( 'invalid edge list' )
        if lam < 0 or not np.isfinite( lam ):
            raise ParameterError( 'lambda must be finite and >= 0' )
        theta = ( theta + theta.transpose( 0, 2, 1 ) ) / 2.0
        theta[ :, np.arange( labels ), np.arange( labels ) ] = 0.0
        self.unary = unary
        self.edges = edges
        self.theta = theta
        self.lam = float( lam )
        # expansion moves that had to truncate a non-submodular pair
        self.truncations = 0

    @property
    def size( self ):
        return self.unary.shape[ 0 ]

    @property
    def labels( self ):
        return self.unary.shape[ 1 ]

    def energy( self, labeling ):
        "Total energy of a labeling"
        x = np.asarray( labeling, dtype=np.int64 )
        value = self.unary[ np.arange( self.size ), x ].sum()
        if len( self.edges ):
            i, j = self.edges[ :, 0 ], self.edges[ :, 1 ]
            value += self.lam * self.theta[ np.arange( len( i ) ),
                                            x[ i ], x[ j ] ].sum()
        return float( value )


def expand( problem, current, alpha ):
    """One alpha-expansion move
       problem: LabelingProblem
       current: labeling, (n,) ints
       alpha: label every node may switch to
       returns: the improved labeling, or current when no move
       strictly lowers the energy"""
    current = np.asarray( current, dtype=np.int64 )
    n = problem.size
    nodes = np.arange( n )
    # u0: cost of keeping the label, u1: cost of switching to alpha
    u0 = problem.unary[ nodes, current ].copy()
    u1 = problem.unary[ :, alpha ].copy()
    net = FlowNetwork( n + 2, source=n, sink=n + 1 )
    if len( problem.edges ):
        i, j = problem.edges[ :, 0 ], problem.edges[ :, 1 ]
        e = np.arange( len( i ) )
        theta = problem.lam * problem.theta
        A = theta[ e, current[ i ], current[ j ] ]
        B = theta[ e, current[ i ], alpha ]
        C = theta[ e, alpha, current[ j ] ]
        D = theta[ e, alpha, alpha ]
        K = B + C - A - D
        truncated = K < -1e-12
        if truncated.any():
            problem.truncations += 1
        K = np.maximum( K, 0.0 )
        np.add.at( u1, i, C - A )
        np.add.at( u1, j, D - C )
        # ( 1 - x_i ) x_j: i keeps while j switches
        net.addArcs( i, j, K )
    shift = np.minimum( u0, u1 )
    net.addArcs( np.full( n, n ), nodes, u1 - shift )
    net.addArcs( nodes, np.full( n, n + 1 ), u0 - shift )
    _, sourceSide = maxFlow( net )
    candidate = np.where( sourceSide[ :n ], current, alpha )
    if problem.energy( candidate ) < problem.energy( current ):
        return candidate
    return current

def alphaExpansion( problem, maxCycles=10 ):
    """Minimize a LabelingProblem by cycling expansion moves over the
       labels 0..L-1 in order
       returns: ( labeling, trace of ( cycle, label, energy ) )"""
    labeling = np.argmin( problem.unary, axis=1 )
    trace = [ ( 0, -1, problem.energy( labeling ) ) ]
    for cycle in range( 1, maxCycles + 1 ):
        changed = False
        for alpha in range( problem.labels ):
            moved = expand( problem, labeling, alpha )
            if not np.array_equal( moved, labeling ):
                labeling = moved
                changed = True
            trace.append( ( cycle, alpha, problem.energy( labeling ) ) )
        if not changed:
            break
    debug( '*** alpha-expansion: %d nodes, energy %.4f -> %.4f\n'
           % ( problem.size, trace[ 0 ][ 2 ], trace[ -1 ][ 2 ] ) )
    return labeling, trace

def bruteForce( problem ):
    """Exact minimum by enumeration, ties to the lexicographically
       smallest labeling
       returns: labeling"""
    n, labels = problem.size, problem.labels
    if labels ** n > BRUTE_FORCE_LIMIT:
        raise SizeError( '%d^%d labelings exceed the search limit'
                         % ( labels, n ) )
    total = labels ** n
    best, bestEnergy = None, np.inf
    e = np.arange( len( problem.edges ) )
    for start in range( 0, total, BRUTE_FORCE_CHUNK ):
        index = np.arange( start, min( start + BRUTE_FORCE_CHUNK, total ) )
        x = np.stack( np.unravel_index( index, ( labels, ) * n ), axis=1 )
        energy = problem.unary[ np.arange( n ), x ].sum( axis=1 )
        if len( e ):
            i, j = problem.edges[ :, 0 ], problem.edges[ :, 1 ]
            energy = energy + problem.lam * problem.theta[
                e, x[ :, i ], x[ :, j ] ].sum( axis=1 )
        k = int( np.argmin( energy ) )
        if energy[ k ] < bestEnergy:
            best, bestEnergy = x[ k ].copy(), energy[ k ]
    return best

def writeEnergyTrace( trace, path ):
    "Write an expansion trace as 'cycle label energy' lines"
    with open( path, 'w' ) as f:
        for cycle, label, energy in trace:
            f.write( '%d %d %.6f\n' % ( cycle, label, energy ) )
