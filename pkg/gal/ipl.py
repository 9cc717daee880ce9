"""
Initial pixel labeling.

Stage 1 classifies the segments of each of the three segmentations as
support, vertical or sky with a random forest on 19 color, position and
texture features. Stage 2 concatenates the three stage-1 distributions
of every fine unit (intersection segment) and fuses them with a linear
softmax model. The vertical mass is finally split over the five
vertical classes, from a probability file or a built-in forest, giving
the 7-class distribution P_initial of every fine unit.
"""

from functools import lru_cache
import pickle

import numpy as np
from scipy.special import softmax
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression

from gal.config import Config
from gal.core import ( ConfigError, DegenerateInputError, DimensionError,
                       FormatError, ParameterError, GeometricClass, NCLASSES,
                       SUPPORT3, VERTICAL3, SKY3, VERTICAL,
                       normalizeDistribution, to3Class )
from gal.log import info, debug
from gal.scenes import KINDS, generateScenes
from gal.segmentation import buildGraph, intersectSegmentations, multiScale

FEATURES = 19
ORIENTATION_BINS = 8


def extractFeatures( img, graph ):
    """Per-segment feature vectors
       color: mean and std of R, G, B (6)
       position: centroid x, y and bbox height, normalized (3)
       texture: magnitude-weighted gradient orientation histogram over
       8 bins, uniform when the segment has no gradient, and the mean
       gradient magnitude (9)
       area fraction (1)
       returns: (n, 19) array"""
    if img.shape != graph.shape:
        raise DimensionError( 'image %s and segments %s differ'
                              % ( img.shape, graph.shape ) )
    n = len( graph )
    height, width = img.shape
    labels = graph.labels.ravel()
    areas = np.bincount( labels, minlength=n ).astype( float )
    rgb = img.rgb().reshape( -1, 3 )
    out = np.zeros( ( n, FEATURES ) )
    for c in range( 3 ):
        mean = np.bincount( labels, rgb[ :, c ], n ) / areas
        spread = np.bincount( labels, ( rgb[ :, c ] - mean[ labels ] ) ** 2,
                              n ) / areas
        out[ :, c ] = mean
        out[ :, 3 + c ] = np.sqrt( spread )
    for node, attrs in graph.nodes( data=True ):
        x0, y0, x1, y1 = attrs[ 'bbox' ]
        out[ node, 6:9 ] = ( attrs[ 'centroid' ][ 0 ], attrs[ 'centroid' ][ 1 ],
                             ( y1 - y0 + 1.0 ) / height )
    gy, gx = np.gradient( img.gray() )
    magnitude = np.hypot( gx, gy ).ravel()
    orientation = ( np.degrees( np.arctan2( gy, gx ) ) % 180.0 ).ravel()
    bins = np.minimum( ( orientation / ( 180.0 / ORIENTATION_BINS ) ).astype( int ),
                       ORIENTATION_BINS - 1 )
    hist = np.bincount( labels * ORIENTATION_BINS + bins, magnitude,
                        n * ORIENTATION_BINS ).reshape( n, ORIENTATION_BINS )
    total = hist.sum( axis=1, keepdims=True )
    out[ :, 9:17 ] = np.where( total > 0, hist / np.where( total > 0, total, 1 ),
                               1.0 / ORIENTATION_BINS )
    out[ :, 17 ] = np.bincount( labels, magnitude, n ) / areas
    out[ :, 18 ] = areas / ( height * width )
    return out

def majorityLabels( graph, codes, classes ):
    """Pixel-majority label of every segment
       codes: (H, W) class codes in 0..classes-1, negative codes ignored
       returns: (n,) labels"""
    flat = graph.labels.ravel()
    codes = np.asarray( codes ).ravel().astype( np.int64 )
    valid = codes >= 0
    tally = np.bincount( flat[ valid ] * classes + codes[ valid ],
                         minlength=len( graph ) * classes )
    return np.argmax( tally.reshape( len( graph ), classes ), axis=1 )


class ForestModel( object ):
    "Random forest over feature vectors with a fixed class count."

    def __init__( self, forest, classes, dims ):
        self.forest = forest
        self.classes = classes
        self.dims = dims

    @property
    def trees( self ):
        return len( self.forest.estimators_ )

    def __repr__( self ):
        return '<ForestModel %d trees, %d classes>' % ( self.trees,
                                                        self.classes )


def trainForest( features, labels, trees=30, depth=12, classes=3, seed=0 ):
    """Train a random forest: bootstrap samples, Gini splits over
       sqrt( d ) candidate features
       returns: ForestModel"""
    features = np.asarray( features, dtype=float )
    labels = np.asarray( labels, dtype=int )
    if trees < 1:
        raise ParameterError( 'a forest needs at least one tree' )
    if features.ndim != 2 or len( features ) == 0:
        raise DegenerateInputError( 'empty training set' )
    if len( labels ) != len( features ):
        raise DimensionError( 'features and labels differ in length' )
    forest = RandomForestClassifier( n_estimators=trees, max_depth=depth,
                                     criterion='gini', max_features='sqrt',
                                     bootstrap=True, random_state=seed )
    forest.fit( features, labels )
    return ForestModel( forest, classes, features.shape[ 1 ] )

def predictForest( model, features ):
    """Mean leaf class histogram over the trees
       features: (d,) or (n, d)
       returns: (n, classes) rows summing to 1"""
    features = np.atleast_2d( np.asarray( features, dtype=float ) )
    if features.shape[ 1 ] != model.dims:
        raise DimensionError( 'expected %d features, got %d'
                              % ( model.dims, features.shape[ 1 ] ) )
    out = np.zeros( ( len( features ), model.classes ) )
    out[ :, model.forest.classes_ ] = model.forest.predict_proba( features )
    return out


class FusionModel( object ):
    """Linear softmax over the 9 concatenated stage-1 probabilities
       weights: (3, 9), bias: (3,)"""

    def __init__( self, weights=None, bias=None ):
        self.weights = ( np.zeros( ( 3, 9 ) ) if weights is None
                         else np.asarray( weights, dtype=float ) )
        self.bias = np.zeros( 3 ) if bias is None else np.asarray( bias, float )
        if self.weights.shape != ( 3, 9 ) or not np.all(
                np.isfinite( self.weights ) ):
            raise ParameterError( 'fusion weights must be a finite 3x9 matrix' )

    def __repr__( self ):
        return '<FusionModel %s>' % np.round( self.weights, 2 ).tolist()


# bias of classes missing from the fusion training set
ABSENT_BIAS = -30.0

def trainFusion( stage1, labels, seed=0 ):
    "Fit a FusionModel by multinomial logistic regression"
    stage1 = np.asarray( stage1, dtype=float )
    labels = np.asarray( labels, dtype=int )
    if not len( stage1 ):
        raise DegenerateInputError( 'empty fusion training set' )
    present = np.unique( labels )
    if present.size == 1:
        bias = np.full( 3, ABSENT_BIAS )
        bias[ present[ 0 ] ] = 0.0
        return FusionModel( np.zeros( ( 3, 9 ) ), bias )
    regression = LogisticRegression( C=10.0, max_iter=1000,
                                     random_state=seed ).fit( stage1, labels )
    weights, bias = np.zeros( ( 3, 9 ) ), np.full( 3, ABSENT_BIAS )
    if present.size == 2:
        # binary fits hold one row for the second class
        weights[ present[ 1 ] ] = regression.coef_[ 0 ]
        bias[ present ] = ( 0.0, regression.intercept_[ 0 ] )
    else:
        weights[ present ] = regression.coef_
        bias[ present ] = regression.intercept_
    return FusionModel( weights, bias )

def fuseStage2( stage1, model ):
    """Fuse stage-1 outputs of fine units
       stage1: (n, 9) concatenated 3-class distributions
       returns: (n, 3) softmax distributions"""
    scores = np.atleast_2d( stage1 ) @ model.weights.T + model.bias
    return softmax( scores, axis=1 )

def assembleInitial( p3, vertical5 ):
    """Seven-class P_initial
       p3: (n, 3) support/vertical/sky distributions
       vertical5: (n, 5) left/center/right/porous/solid distributions
       returns: (n, 7)"""
    if vertical5 is None:
        raise ConfigError( 'no vertical class probabilities and no model' )
    p3 = np.atleast_2d( p3 )
    vertical5 = np.atleast_2d( vertical5 )
    if vertical5.shape != ( len( p3 ), 5 ):
        raise DimensionError( 'expected %d vertical rows, got %s'
                              % ( len( p3 ), vertical5.shape ) )
    if np.any( vertical5 < 0 ) or np.any(
            np.abs( vertical5.sum( axis=1 ) - 1.0 ) > 1e-6 ):
        raise ParameterError( 'vertical class rows must be distributions' )
    out = np.zeros( ( len( p3 ), NCLASSES ) )
    out[ :, GeometricClass.SUPPORT ] = p3[ :, SUPPORT3 ]
    out[ :, GeometricClass.SKY ] = p3[ :, SKY3 ]
    out[ :, list( VERTICAL ) ] = p3[ :, VERTICAL3, None ] * vertical5
    return out

def readVerticalProbs( path, n ):
    """Read 'id p_left p_center p_right p_porous p_solid' lines
       n: number of fine segments
       returns: (n, 5) rows"""
    rows = np.full( ( n, 5 ), np.nan )
    with open( path ) as f:
        for lineno, line in enumerate( f, 1 ):
            fields = line.split()
            if not fields or fields[ 0 ].startswith( '#' ):
                continue
            try:
                node, values = int( fields[ 0 ] ), [ float( v ) for v in fields[ 1: ] ]
            except ValueError:
                raise FormatError( '%s:%d: non-numeric field' % ( path, lineno ) )
            if len( values ) != 5 or not 0 <= node < n:
                raise FormatError( '%s:%d: expected id < %d and 5 values'
                                   % ( path, lineno, n ) )
            try:
                rows[ node ] = normalizeDistribution( values )
            except DegenerateInputError as e:
                raise FormatError( '%s:%d: %s' % ( path, lineno, e ) )
    missing = np.flatnonzero( np.isnan( rows[ :, 0 ] ) )
    if missing.size:
        raise FormatError( '%s: no probabilities for segments %s'
                           % ( path, missing[ :10 ].tolist() ) )
    return rows

def writeVerticalProbs( rows, path ):
    with open( path, 'w' ) as f:
        for node, row in enumerate( rows ):
            f.write( '%d %s\n' % ( node, ' '.join( '%.6f' % v for v in row ) ) )


class IplModels( object ):
    "The three stage-1 forests, the fusion model and the vertical forest."

    def __init__( self, forests, fusion, vertical ):
        self.forests = forests
        self.fusion = fusion
        self.vertical = vertical

    def save( self, path ):
        with open( path, 'wb' ) as f:
            pickle.dump( self, f )

    def __repr__( self ):
        return '<IplModels %s %s %s>' % ( self.forests, self.fusion,
                                          self.vertical )


def loadModels( path ):
    "Load models written by IplModels.save"
    with open( path, 'rb' ) as f:
        try:
            models = pickle.load( f )
        except ( pickle.UnpicklingError, EOFError, AttributeError ) as e:
            raise ConfigError( '%s: not a model file (%s)' % ( path, e ) )
    if not isinstance( models, IplModels ):
        raise ConfigError( '%s: not a model file' % path )
    return models


class IplResult( object ):
    """Everything the initial labeling produced for one image
       segmentations: the three source Segmentations
       graph: SegmentGraph of the fine units
       features: (n, 19); stage1: (n, 9); p3: (n, 3); initial: (n, 7)
       labels3: (H, W) support/vertical/sky codes"""

    def __init__( self, segmentations, graph, features, stage1, p3, initial ):
        self.segmentations = segmentations
        self.graph = graph
        self.features = features
        self.stage1 = stage1
        self.p3 = p3
        self.initial = initial
        self.labels3 = graph.paint( np.argmax( p3, axis=1 ) ).astype( np.uint8 )


def _imageUnits( img, config ):
    "Segmentations, their graphs and the fine-unit graph of an image"
    segmentations = multiScale( img, config )
    graphs = [ buildGraph( seg ) for seg in segmentations ]
    fine = buildGraph( intersectSegmentations( segmentations ) )
    return segmentations, graphs, fine

def _transfer( fine, seg, rows ):
    "Copy per-segment rows of a coarser segmentation onto fine units"
    first = np.array( [ fine.node[ i ][ 'pixels' ][ 0 ] for i in range( len( fine ) ) ] )
    return rows[ seg.labels.ravel()[ first ] ]

def _stage1( img, segmentations, graphs, fine, forests ):
    "Stage-1 distributions of every fine unit, (n, 9)"
    columns = []
    for seg, graph, forest in zip( segmentations, graphs, forests ):
        probs = predictForest( forest, extractFeatures( img, graph ) )
        columns.append( _transfer( fine, seg, probs ) )
    return np.hstack( columns )

def initialLabeling( img, config, models, vertical5=None ):
    """Run both stages and assemble P_initial
       models: IplModels
       vertical5: (n, 5) rows for the fine units, None to use the
       built-in vertical forest
       returns: IplResult"""
    info( '*** Initial labeling\n' )
    segmentations, graphs, fine = _imageUnits( img, config )
    features = extractFeatures( img, fine )
    stage1 = _stage1( img, segmentations, graphs, fine, models.forests )
    p3 = fuseStage2( stage1, models.fusion )
    if vertical5 is None and models.vertical is not None:
        vertical5 = predictForest( models.vertical, features )
    initial = assembleInitial( p3, vertical5 )
    debug( '*** %d fine units\n' % len( fine ) )
    return IplResult( segmentations, fine, features, stage1, p3, initial )

def fineUnits( img, config ):
    "The fine-unit graph of an image, as initialLabeling builds it"
    return _imageUnits( img, config )[ 2 ]


def trainModels( samples, config ):
    """Train all initial labeling models
       samples: [ ( Raster, LabelMap ) ]; the first half trains the
       stage-1 forests, the second half the fusion model, all of them
       the vertical forest
       returns: IplModels"""
    if not samples:
        raise DegenerateInputError( 'no training images' )
    trees, depth, seed = config[ 'ipl.trees' ], config[ 'ipl.depth' ], config[ 'seed' ]
    half = max( 1, len( samples ) // 2 )
    first, second = samples[ :half ], samples[ half: ] or samples[ :half ]
    info( '*** Training stage-1 forests on %d images\n' % len( first ) )
    units = [ _imageUnits( img, config ) for img, _ in samples ]
    forests = []
    for k in range( 3 ):
        X, y = [], []
        for ( img, truth ), ( _, graphs, _ ) in zip( first, units ):
            X.append( extractFeatures( img, graphs[ k ] ) )
            y.append( majorityLabels( graphs[ k ], to3Class( truth.codes ), 3 ) )
        forests.append( trainForest( np.vstack( X ), np.concatenate( y ),
                                     trees, depth, 3, seed + k ) )
    info( '*** Training fusion on %d images\n' % len( second ) )
    offset = half if samples[ half: ] else 0
    X, y = [], []
    for ( img, truth ), ( segs, graphs, fine ) in zip( second, units[ offset: ] ):
        X.append( _stage1( img, segs, graphs, fine, forests ) )
        y.append( majorityLabels( fine, to3Class( truth.codes ), 3 ) )
    fusion = trainFusion( np.vstack( X ), np.concatenate( y ), seed )
    info( '*** Training vertical forest\n' )
    X, y = [], []
    for ( img, truth ), ( _, _, fine ) in zip( samples, units ):
        # vertical codes 1..5 become 0..4, everything else is ignored
        codes = truth.codes.astype( np.int64 ) - 1
        codes[ ( truth.codes == GeometricClass.SUPPORT ) |
               ( truth.codes == GeometricClass.SKY ) ] = -1
        vertical = majorityLabels( fine, to3Class( truth.codes ), 3 ) == VERTICAL3
        if vertical.any():
            X.append( extractFeatures( img, fine )[ vertical ] )
            y.append( majorityLabels( fine, codes, 5 )[ vertical ] )
    verticalForest = ( trainForest( np.vstack( X ), np.concatenate( y ),
                                    trees, depth, 5, seed + 3 ) if X else None )
    return IplModels( forests, fusion, verticalForest )

@lru_cache( maxsize=4 )
def _builtin( key ):
    config = Config()
    for name, value in key:
        config.set( name, value )
    scenes = generateScenes( config[ 'seed' ], config[ 'ipl.corpus' ], KINDS )
    return trainModels( [ ( s.image, s.truth ) for s in scenes ], config )

def builtinModels( config ):
    """Models trained on the seeded synthetic corpus, cached per
       configuration"""
    return _builtin( tuple( sorted( config.values.items() ) ) )
