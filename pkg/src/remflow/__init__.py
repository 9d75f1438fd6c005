"""remflow: remnant photographs to CAD-ready contours.

Three phases behind one package: standardize and augment photos
(:mod:`remflow.preprocess`), translate photos to binary contour masks with
an adversarially trained encoder-decoder (:mod:`remflow.gan`), and refine
masks through prompt-guided providers (:mod:`remflow.refine`). Around them:
synthetic paired data (:mod:`remflow.synthgen`), the evaluation protocol
(:mod:`remflow.metrics`), vectorization and CAD export
(:mod:`remflow.vectorize`), a session HTTP service (:mod:`remflow.service`),
a CLI (:mod:`remflow.cli`), and scikit-learn style estimator wrappers
(:mod:`remflow.estimators`).
"""

from . import (errors, estimators, gan, geometry, imageio, metrics, preprocess,
               refine, synthgen, vectorize)
from .estimators import (ContourTranslator, ContourVectorizer, ImageStandardizer,
                         MaskRefiner, PairAugmenter)

__version__ = "0.1.0"

__all__ = [
    "errors", "estimators", "gan", "geometry", "imageio", "metrics",
    "preprocess", "refine", "synthgen", "vectorize",
    "ImageStandardizer", "PairAugmenter", "ContourTranslator", "MaskRefiner",
    "ContourVectorizer", "__version__",
]
