"""cimeter: distance- and kernel-based (conditional) independence measures.

The same dependence structure is measured twice throughout: once through
negative-type semimetrics (distance covariance and its conditional
versions) and once through positive definite kernels (HSIC and the
conditional operator norms).  For matched distance/kernel pairs the two
coincide as exact finite-sample identities, and the test and ``verify``
suites assert those identities rather than trusting either side alone.
"""

from .citest import TestConfig, TestReport, local_permutation_test, size_power_experiment
from .conditional import (
    ConditionalWeightMatrix,
    RegularizationSpec,
    SmoothingSpec,
    avg_hscic,
    conditional_weights,
    gcdcov_at,
    gcdcov_avg,
    h_hat,
    hhat_matrix,
    hscic_at,
    hscic_profile,
    hscic_trace,
    hscic_vstat,
    smoothing_weights,
)
from .data import ColumnRoleMap, Dataset, GeneratorSpec, generate, load_csv, save_csv
from .errors import (
    CimeterError,
    EmptyNeighborhoodError,
    InputError,
    NumericalIntegrityError,
)
from .geometry import (
    DiracDiscrete,
    DistanceInduced,
    DistanceMatrix,
    Euclidean,
    EuclideanPower,
    Gaussian,
    GaussianDensity,
    GramMatrix,
    KernelInduced,
    KernelSpec,
    Laplacian,
    Product,
    SemimetricSpec,
    check_negative_type,
    distance_induced_kernel,
    distance_matrix,
    eval_kernel,
    eval_semimetric,
    gram_matrix,
    kernel_induced_semimetric,
    median_bandwidth,
)
from .oracles import (
    QuadratureGrid,
    cf_h_oracle,
    cp_constant,
    operator_hs_oracle,
    weight_identity_check,
)
from .unconditional import MeasureResult, PairedSample, dcov_v, hsic_v, mmd_squared
from .verify import IdentityResult, run_identity_suite

__version__ = "0.1.0"
