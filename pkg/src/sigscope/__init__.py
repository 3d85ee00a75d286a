"""Power-spectrum signatures, classical MDS and potential-outlier characterization
for periodic time series."""

from .classify import OutlierClass, PotentialOutlierClassifier, build_report
from .embedding import ClassicalMDS, classical_mds, dissimilarity
from .regression import PolynomialCurveRegressor, fit_clusters
from .signature import SignatureTransformer, signature_matrix

__version__ = "0.1.0"

__all__ = [
    "ClassicalMDS",
    "OutlierClass",
    "PolynomialCurveRegressor",
    "PotentialOutlierClassifier",
    "SignatureTransformer",
    "build_report",
    "classical_mds",
    "dissimilarity",
    "fit_clusters",
    "signature_matrix",
]
