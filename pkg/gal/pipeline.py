"""
The labeling pipeline: initial labeling, global attribute extraction
and CRF refinement of one image, plus the files a run writes.

    pipeline = LayoutPipeline( config )
    result = pipeline.label( readRaster( 'street.ppm' ) )
    writeResult( result, img, 'out', 'street' )
"""

import os

import numpy as np

from gal.config import Config
from gal.core import ( DimensionError, LabelMap, PALETTE, Raster,
                       readRaster, writeLabelMap, writeProbabilityMap,
                       writeRaster )
from gal.crf import CrfSample, CrfParams, readParams, refine
from gal.gae import ATTRIBUTES, extractAttributes
from gal.grabcut import readBoxes
from gal.ipl import ( builtinModels, fineUnits, initialLabeling, loadModels,
                      readVerticalProbs )
from gal.lineworks import computeEvidence, writeSegments
from gal.log import info, output
from gal.optim import writeEnergyTrace
from gal.segmentation import writeSegmentation
from gal.util import stemOf


def baselineLabels( ipl ):
    "Argmax of the initial distribution, painted on the pixels"
    return LabelMap( ipl.graph.paint( np.argmax( ipl.initial, axis=1 ) ) )


class LayoutResult( object ):
    """Everything a pipeline run produced
       labels: refined LabelMap; initialLabels: P_initial argmax map
       ipl: IplResult; evidence: EvidenceMaps
       gav: GlobalAttributeVector; maps: AttributeMaps
       refinement: crf.Refinement"""

    def __init__( self, ipl, evidence, gav, maps, refinement ):
        self.ipl = ipl
        self.evidence = evidence
        self.gav = gav
        self.maps = maps
        self.refinement = refinement
        self.labels = refinement.labels
        self.initialLabels = baselineLabels( ipl )

    @property
    def trace( self ):
        return self.refinement.trace


class LayoutPipeline( object ):
    "Labels images with fixed configuration, models and energy parameters."

    def __init__( self, config=None, models=None, params=None ):
        """config: Config (default: defaults)
           models: IplModels (default: trained on the built-in corpus)
           params: CrfParams (default: uniform w, configured lambda)"""
        self.config = Config() if config is None else config
        self._models = models
        self.params = ( CrfParams.fromConfig( self.config ) if params is None
                        else params )

    @property
    def models( self ):
        if self._models is None:
            info( '*** Training built-in initial labeling models\n' )
            self._models = builtinModels( self.config )
        return self._models

    def prepare( self ):
        "Train or load the models before the pipeline is shared"
        return self.models

    def baseline( self, ipl ):
        return baselineLabels( ipl )

    def initial( self, img, vertical5=None ):
        "Initial labeling of an image"
        return initialLabeling( img, self.config, self.models, vertical5 )

    def evidence( self, img ):
        info( '*** Computing line, edge and defocus evidence\n' )
        return computeEvidence( img, self.config )

    def label( self, img, boxes=(), vertical5=None, enabled=ATTRIBUTES,
               ipl=None, ev=None ):
        """Run the three stages on one image
           boxes: object Boxes for grab-cut
           vertical5: (n, 5) vertical class rows of the fine units
           enabled: attributes to extract
           ipl, ev: reuse an earlier initial labeling and evidence
           returns: LayoutResult"""
        ipl = self.initial( img, vertical5 ) if ipl is None else ipl
        ev = self.evidence( img ) if ev is None else ev
        gav, maps = extractAttributes( img, ipl, ev, self.config, boxes,
                                       enabled )
        refinement = refine( maps, ipl.graph, self.params,
                             self.config[ 'crf.cycles' ] )
        return LayoutResult( ipl, ev, gav, maps, refinement )


def runPipeline( img, config=None, boxes=(), vertical5=None, params=None,
                 models=None, enabled=ATTRIBUTES ):
    "Label one image with a fresh LayoutPipeline"
    return LayoutPipeline( config, models, params ).label(
        img, boxes, vertical5, enabled )

def renderOverlay( img, labels ):
    """Half-and-half blend of an image and its label colors
       returns: Raster"""
    if tuple( img.shape ) != tuple( labels.shape ):
        raise DimensionError( 'image %s and labels %s differ in size'
                              % ( img.shape, labels.shape ) )
    colors = np.array( PALETTE, dtype=np.float64 )[ labels.codes ] / 255.0
    return Raster( 0.5 * img.rgb() + 0.5 * colors )

def writeResult( result, img, outdir, stem ):
    """Write the codes, colors, overlay, attribute report and energy
       trace of a run
       returns: list of written paths"""
    os.makedirs( outdir, exist_ok=True )
    path = os.path.join( outdir, stem )
    written = [ path + suffix for suffix in
                ( '_codes.pgm', '_colors.ppm', '_overlay.ppm', '_gav.txt',
                  '_energy.txt' ) ]
    writeLabelMap( result.labels, 'codes', written[ 0 ] )
    writeLabelMap( result.labels, 'colors', written[ 1 ] )
    writeRaster( renderOverlay( img, result.labels ), written[ 2 ] )
    with open( written[ 3 ], 'w' ) as f:
        f.write( result.gav.report() )
    writeEnergyTrace( result.trace, written[ 4 ] )
    return written

def writeEvidence( result, outdir, stem ):
    """Write the inspection files of a run: line segments, P_line,
       edge and defocus maps and the fine-unit ids
       returns: list of written paths"""
    os.makedirs( outdir, exist_ok=True )
    path = os.path.join( outdir, stem )
    written = [ path + suffix for suffix in
                ( '_segments.txt', '_pline.pgm', '_edge.pgm', '_defocus.pgm',
                  '_units.pgm' ) ]
    writeSegments( result.evidence.segments, written[ 0 ] )
    writeProbabilityMap( result.maps.line, written[ 1 ] )
    writeProbabilityMap( result.evidence.edge, written[ 2 ] )
    writeProbabilityMap( result.evidence.defocus, written[ 3 ] )
    writeSegmentation( result.ipl.graph, written[ 4 ] )
    return written

def processImage( imagePath, config=None, outdir='.', boxesPath=None,
                  verticalPath=None, paramsPath=None, modelsPath=None,
                  evidence=False ):
    """Label an image file and write the results next to each other
       in outdir, named after the image stem
       evidence: also write the inspection files of writeEvidence
       returns: LayoutResult"""
    config = Config() if config is None else config
    img = readRaster( imagePath )
    boxes = readBoxes( boxesPath ) if boxesPath else []
    params = readParams( paramsPath, config ) if paramsPath else None
    models = loadModels( modelsPath ) if modelsPath else None
    pipeline = LayoutPipeline( config, models, params )
    vertical5 = None
    if verticalPath:
        vertical5 = readVerticalProbs( verticalPath,
                                       len( fineUnits( img, config ) ) )
    result = pipeline.label( img, boxes, vertical5 )
    stem = stemOf( imagePath )
    writeResult( result, img, outdir, stem )
    if evidence:
        writeEvidence( result, outdir, stem )
    output( '%s: %s energy %.4f\n' % ( stem, result.gav,
                                       result.refinement.energy ) )
    return result

def trainingSamples( items, pipeline ):
    """Attribute maps of dataset items with every attribute enabled,
       paired with their ground truth for parameter learning
       items: [ DatasetItem ] with truth
       returns: [ CrfSample ]"""
    samples = []
    for item in items:
        img, truth, boxes = item.load()
        ipl = pipeline.initial( img )
        _, maps = extractAttributes( img, ipl, pipeline.evidence( img ),
                                     pipeline.config, boxes )
        samples.append( CrfSample( maps, ipl.graph, truth.codes ) )
    return samples
