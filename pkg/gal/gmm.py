"""
Diagonal Gaussian mixture color models.

Used by horizon refinement (sky against support colors) and by
grab-cut (object against background colors).
"""

import numpy as np
from sklearn.mixture import GaussianMixture

from gal.core import DegenerateInputError

# lower bound on every component variance
MIN_VARIANCE = 1e-4


class GmmModel( object ):
    """K-component Gaussian mixture with diagonal covariances
       weights: (K,), means: (K, D), variances: (K, D)"""

    def __init__( self, components=3, iterations=50, tol=1e-4, seed=0 ):
        self.components = components
        self.iterations = iterations
        self.tol = tol
        self.seed = seed
        self.mixture = None

    def fit( self, samples ):
        """Fit by EM from a k-means initialization, or continue EM from
           the previous fit when there is one
           samples: (N, D) array
           returns: self"""
        samples = np.asarray( samples, dtype=np.float64 )
        if samples.ndim != 2 or len( samples ) == 0:
            raise DegenerateInputError( 'no samples to fit a color model' )
        k = min( self.components, len( np.unique( samples, axis=0 ) ) )
        if self.mixture is None or self.mixture.n_components != k:
            self.mixture = GaussianMixture( n_components=k,
                                            covariance_type='diag',
                                            max_iter=self.iterations,
                                            tol=self.tol,
                                            reg_covar=MIN_VARIANCE,
                                            init_params='kmeans',
                                            random_state=self.seed,
                                            warm_start=True )
        self.mixture.fit( samples )
        return self

    @property
    def weights( self ):
        return self.mixture.weights_

    @property
    def means( self ):
        return self.mixture.means_

    @property
    def variances( self ):
        return self.mixture.covariances_

    def logLikelihood( self, samples ):
        "Per-sample log density, (N,) array"
        if self.mixture is None:
            raise DegenerateInputError( 'color model has not been fitted' )
        return self.mixture.score_samples( np.asarray( samples, dtype=float ) )

    def __repr__( self ):
        if self.mixture is None:
            return '<GmmModel unfitted>'
        return '<GmmModel K=%d weights=%s>' % (
            len( self.weights ), np.round( self.weights, 3 ) )


def fitColorModel( samples, config ):
    "Fit a GmmModel with the configured component count and EM limits"
    return GmmModel( config[ 'gmm.components' ], config[ 'gmm.iterations' ],
                     config[ 'gmm.tol' ], config[ 'seed' ] ).fit( samples )
