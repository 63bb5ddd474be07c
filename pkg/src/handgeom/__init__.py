"""Hand-geometry biometric recognition: silhouette features, output codes and MLP/NN classifiers."""

from .errors import DefectiveAcquisition, HandGeomError

__version__ = "0.1.0"
__all__ = ["DefectiveAcquisition", "HandGeomError", "__version__"]
