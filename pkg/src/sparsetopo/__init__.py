"""Sparse topology identification for networks of FIR-coupled stochastic processes."""
from .correlation import (
    CovarianceModel,
    SpectrumEstimate,
    estimate_covariances,
    estimate_spectra,
    filtered_spectra_check,
    inner_product,
)
from .errors import (
    BudgetError,
    ConfigurationError,
    DimensionError,
    InstabilityError,
    NumericalError,
    SingularityError,
    SparsetopoError,
)
from .graphio import ComparisonReport, Edge, Topology, compare, export_dot, threshold_edges
from .netsim import NetworkSpec, random_spec, simulate
from .sparsifiers import (
    AUTO,
    SelectionResult,
    SparsifierConfig,
    auto_degree_identify,
    cols_identify,
    exhaustive_identify,
    identify_all,
    rwls_identify,
    solve_weighted_projection,
)
from .timeseries import RawSeries, TimeSeriesSet, assemble, center, load_csv, log_returns, spline_fill, standardize
from .wiener import ProjectionRequest, WienerSolution, orthogonality_defect, project

__version__ = "0.1.0"
