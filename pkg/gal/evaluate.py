"""
Pixel accuracy of predicted label maps and the attribute ablation.

evaluate() pairs '<stem>_codes.pgm' predictions with '<stem>_truth.pgm'
ground truth and accumulates a 7x7 confusion matrix (rows: truth,
columns: prediction). ablate() labels a dataset several times, adding
the global attributes one step at a time, and reports the accuracy of
every step with its change over the previous one.
"""

from multiprocessing.pool import ThreadPool
import os

import numpy as np

from gal.core import ( ConsistencyError, DimensionError, GalError,
                       GeometricClass, NCLASSES, readLabelMap )
from gal.log import debug, info, warn
from gal.pipeline import LayoutPipeline
from gal.util import natural, numThreads, stemOf

# Truth rows counted by the five-class accuracy
VERTICAL_ROWS = slice( GeometricClass.PLANAR_LEFT, GeometricClass.SOLID + 1 )


def confusionMatrix( truth, predicted ):
    """Pixel tally of ( truth, predicted ) code pairs
       returns: (7, 7) int64 array"""
    truth, predicted = np.asarray( truth ), np.asarray( predicted )
    if truth.shape != predicted.shape:
        raise DimensionError( 'truth %s and prediction %s differ in size'
                              % ( truth.shape, predicted.shape ) )
    index = ( truth.astype( np.int64 ).ravel() * NCLASSES +
              predicted.astype( np.int64 ).ravel() )
    return np.bincount( index, minlength=NCLASSES * NCLASSES ).reshape(
        NCLASSES, NCLASSES )

def _ratio( num, den ):
    return float( num ) / den if den else float( 'nan' )


class EvalReport( object ):
    """Accumulated evaluation of label maps
       confusion: (7, 7) pixel counts, rows are ground truth
       images: [ ( stem, accuracy ) ]
       skipped: [ ( stem, reason ) ]"""

    def __init__( self ):
        self.confusion = np.zeros( ( NCLASSES, NCLASSES ), dtype=np.int64 )
        self.images = []
        self.skipped = []

    def add( self, stem, truth, predicted ):
        "Tally one image pair"
        counts = confusionMatrix( truth, predicted )
        self.confusion += counts
        self.images.append( ( stem, _ratio( np.trace( counts ), counts.sum() ) ) )
        return self

    def skip( self, stem, reason ):
        warn( '*** skipping %s: %s\n' % ( stem, reason ) )
        self.skipped.append( ( stem, reason ) )
        return self

    def merge( self, other ):
        "Fold another report into this one"
        self.confusion += other.confusion
        self.images.extend( other.images )
        self.skipped.extend( other.skipped )
        return self

    @property
    def total( self ):
        return int( self.confusion.sum() )

    @property
    def overall( self ):
        "Correct pixels over all pixels"
        return _ratio( np.trace( self.confusion ), self.total )

    @property
    def perClass( self ):
        "Diagonal over row sums, nan for classes absent from the truth"
        rows = self.confusion.sum( axis=1 )
        return np.array( [ _ratio( self.confusion[ c, c ], rows[ c ] )
                           for c in range( NCLASSES ) ] )

    @property
    def accuracy5( self ):
        "Accuracy over pixels whose truth is one of the vertical classes"
        block = self.confusion[ VERTICAL_ROWS, VERTICAL_ROWS ]
        return _ratio( np.trace( block ),
                       self.confusion[ VERTICAL_ROWS ].sum() )

    def text( self ):
        "Human-readable report"
        lines = [ 'images %d, skipped %d, pixels %d'
                  % ( len( self.images ), len( self.skipped ), self.total ),
                  'overall accuracy  %7.2f%%' % ( 100 * self.overall ),
                  'vertical (5)      %7.2f%%' % ( 100 * self.accuracy5 ),
                  '' ]
        for c, acc in zip( GeometricClass, self.perClass ):
            lines.append( '%-16s  %7.2f%%' % ( c.label, 100 * acc ) )
        lines.append( '' )
        lines.append( 'confusion (rows: truth)' )
        lines.append( ' '.join( '%9s' % c.label[ :9 ] for c in GeometricClass ) )
        for row in self.confusion:
            lines.append( ' '.join( '%9d' % v for v in row ) )
        for stem, reason in self.skipped:
            lines.append( 'skipped %s: %s' % ( stem, reason ) )
        return '\n'.join( lines ) + '\n'

    def keyvalues( self ):
        "Machine-readable 'key value' lines"
        pairs = [ ( 'images', len( self.images ) ),
                  ( 'skipped', len( self.skipped ) ),
                  ( 'pixels', self.total ),
                  ( 'overall', '%.6f' % self.overall ),
                  ( 'accuracy5', '%.6f' % self.accuracy5 ) ]
        pairs += [ ( 'class.%s' % c.label, '%.6f' % acc )
                   for c, acc in zip( GeometricClass, self.perClass ) ]
        pairs += [ ( 'confusion.%d' % c, ' '.join( map( str, row ) ) )
                   for c, row in enumerate( self.confusion ) ]
        pairs += [ ( 'image.%s' % stem, '%.6f' % acc )
                   for stem, acc in self.images ]
        return ''.join( '%s %s\n' % pair for pair in pairs )

    def __repr__( self ):
        return '<EvalReport %d images overall=%.4f>' % ( len( self.images ),
                                                         self.overall )


def labelFiles( directory, suffixes ):
    """Label map files of a directory by stem
       suffixes: accepted stem suffixes, most preferred first
       returns: { stem: path }"""
    found = {}
    for name in sorted( os.listdir( directory ), key=natural ):
        base, ext = os.path.splitext( name )
        if ext != '.pgm':
            continue
        stem = stemOf( name )
        suffix = base[ len( stem ): ]
        if suffix not in suffixes:
            continue
        rank = suffixes.index( suffix )
        if stem not in found or rank < found[ stem ][ 0 ]:
            found[ stem ] = ( rank, os.path.join( directory, name ) )
    return dict( ( stem, path ) for stem, ( _, path ) in found.items() )

def _evaluatePair( job ):
    "Report of one ( stem, truth path, prediction path ) job"
    stem, truthPath, predPath = job
    report = EvalReport()
    if predPath is None:
        return report.skip( stem, 'no prediction' )
    try:
        truth, pred = readLabelMap( truthPath ), readLabelMap( predPath )
        return report.add( stem, truth.codes, pred.codes )
    except ( GalError, OSError ) as e:
        return report.skip( stem, str( e ) )

def evaluate( predDir, truthDir ):
    """Evaluate every ground-truth map of truthDir against its prediction
       predDir: '<stem>_codes.pgm' (or '<stem>.pgm') predictions
       truthDir: '<stem>_truth.pgm' (or '<stem>_codes.pgm') ground truth
       returns: EvalReport; unmatched or mismatched pairs are skipped"""
    preds = labelFiles( predDir, ( '_codes', '', '_truth' ) )
    truths = labelFiles( truthDir, ( '_truth', '_codes', '' ) )
    jobs = [ ( stem, truths[ stem ], preds.get( stem ) )
             for stem in sorted( truths, key=natural ) ]
    for stem in sorted( set( preds ) - set( truths ), key=natural ):
        debug( '*** %s has no ground truth\n' % stem )
    info( '*** Evaluating %d label maps\n' % len( jobs ) )
    report = EvalReport()
    with ThreadPool( numThreads() ) as pool:
        for part in pool.imap( _evaluatePair, jobs ):
            report.merge( part )
    return report


# Ablation

# Cumulative attribute sets; the first step is the initial labeling alone
ABLATION_STEPS = (
    ( 'IPL only', None ),
    ( '+ porous', ( 'porous', ) ),
    ( '+ solid', ( 'porous', 'solid' ) ),
    ( '+ horizon', ( 'porous', 'solid', 'horizon' ) ),
    ( '+ vertical line', ( 'porous', 'solid', 'horizon', 'verticalLine' ) ),
    ( '+ sky/ground line', ( 'porous', 'solid', 'horizon', 'verticalLine',
                             'skyGroundLine' ) ),
    ( '+ vanishing & planar', ( 'porous', 'solid', 'horizon', 'verticalLine',
                                'skyGroundLine', 'vanishing', 'planar' ) ),
)


class AblationTable( object ):
    "Accuracy of every ablation step over a dataset."

    def __init__( self, steps=ABLATION_STEPS ):
        self.names = [ name for name, _ in steps ]
        self.reports = [ EvalReport() for _ in steps ]

    def merge( self, other ):
        for mine, theirs in zip( self.reports, other.reports ):
            mine.merge( theirs )
        return self

    @property
    def accuracies( self ):
        return [ r.overall for r in self.reports ]

    @property
    def deltas( self ):
        "Change of every step over the previous one, None for the first"
        acc = self.accuracies
        return [ None ] + [ b - a for a, b in zip( acc, acc[ 1: ] ) ]

    def text( self ):
        "Table with one row per step: accuracy and signed gain"
        lines = [ '%-24s %9s %9s' % ( 'Global attribute', 'Accuracy', 'Gain' ) ]
        for name, acc, delta in zip( self.names, self.accuracies, self.deltas ):
            gain = '' if delta is None else '%+8.2f%%' % ( 100 * delta )
            lines.append( '%-24s %8.2f%% %9s' % ( name, 100 * acc, gain ) )
        return '\n'.join( lines ) + '\n'

    def __repr__( self ):
        return '<AblationTable %s>' % ' '.join( '%.4f' % a
                                                for a in self.accuracies )


def ablateImage( pipeline, item, steps=ABLATION_STEPS ):
    """Label one dataset item once per step, reusing its initial
       labeling and evidence
       returns: AblationTable of that item"""
    img, truth, boxes = item.load()
    table = AblationTable( steps )
    ipl = pipeline.initial( img )
    ev = pipeline.evidence( img )
    for report, ( name, enabled ) in zip( table.reports, steps ):
        if enabled is None:
            labels = pipeline.baseline( ipl )
        else:
            result = pipeline.label( img, boxes, enabled=enabled, ipl=ipl,
                                     ev=ev )
            stray = set( result.gav.reads ) - set( enabled )
            if stray:
                raise ConsistencyError( '%s read disabled attributes %s'
                                        % ( name, sorted( stray ) ) )
            labels = result.labels
        report.add( item.stem, truth.codes, labels.codes )
    debug( '*** %s: %s\n' % ( item.stem, table ) )
    return table

def ablate( items, config=None, models=None, params=None,
            steps=ABLATION_STEPS ):
    """Run the ablation steps over dataset items with ground truth
       items: [ DatasetItem ]
       returns: AblationTable"""
    pipeline = LayoutPipeline( config, models, params )
    pipeline.prepare()
    info( '*** Ablating %d images over %d steps\n' % ( len( items ),
                                                      len( steps ) ) )
    table = AblationTable( steps )
    with ThreadPool( numThreads() ) as pool:
        for part in pool.imap( lambda item: ablateImage( pipeline, item, steps ),
                               items ):
            table.merge( part )
    return table
