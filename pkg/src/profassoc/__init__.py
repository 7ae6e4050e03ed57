"""Association measures and independence tests for random objects in metric spaces."""

from .assoc import (
    AssociationReport,
    ProfileAssociation,
    d_n_fast,
    d_n_oracle,
    h_kernel,
    profile_association,
    psi,
)
from .core import (
    DistanceMatrix,
    MetricObject,
    PairedDataset,
    ProfileQuery,
    joint_profile,
    marginal_profile,
    pairwise_matrix,
)
from .metrics import (
    METRIC_NAMES,
    MetricId,
    euclidean,
    resolve_metric,
    spd_airm,
    spd_bures_wasserstein,
    spd_frobenius,
    spd_geodesic_interp,
    spd_log_cholesky,
    spd_power,
    sphere_geodesic,
    wasserstein1d,
)
from .validation import DataError, NumericalError

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AssociationReport",
    "DataError",
    "DistanceMatrix",
    "METRIC_NAMES",
    "MetricId",
    "MetricObject",
    "NumericalError",
    "PairedDataset",
    "ProfileAssociation",
    "ProfileQuery",
    "d_n_fast",
    "d_n_oracle",
    "euclidean",
    "h_kernel",
    "joint_profile",
    "marginal_profile",
    "pairwise_matrix",
    "profile_association",
    "psi",
    "resolve_metric",
    "spd_airm",
    "spd_bures_wasserstein",
    "spd_frobenius",
    "spd_geodesic_interp",
    "spd_log_cholesky",
    "spd_power",
    "sphere_geodesic",
    "wasserstein1d",
]
