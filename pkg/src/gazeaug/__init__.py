"""gazeaug: synthetic-data-augmented task decoding from eye movements.

Fits tabular synthetic-data generators on fixation data, scores
synthetic quality with a two-sample KS metric, trains five classifier
families on mixes of real and synthetic scanpaths, and reproduces the
augmentation-sweep experiment as tables and figures.
"""

from .rng import RngState

__version__ = "0.1.0"

__all__ = ["RngState", "__version__"]
