"""Polynomial expansion of classification and regression functions from distribution moments."""
from .errors import (
    EmptySampleError,
    InputError,
    InvalidIndexError,
    ModelLoadError,
    MomentPolyError,
    OrderError,
    SingularSystemError,
    SpecError,
)
from .events import EventSet, read_csv, write_csv
from .metrics import auc, evaluate_model, purity_curve, response_histogram
from .model import FitConfig, PolyModel, Preprocessor, fit, fit_report
from .moments import (
    CombinedMoments,
    MomentAccumulator,
    MomentSet,
    accumulate,
    combine_binary,
    combine_regression,
)
from .solver import MomentSystem, SolveReport, assemble, solve, solve_1d
from .synth import MixtureSpec, fig1_spec, optimal_response, sample, sec3_spec
from .tensor_index import (
    Basis,
    basis_size,
    enumerate_indices,
    index_at,
    monomial_of,
    multiplicity,
    num_free_components,
    position_of,
)

__version__ = "0.1.0"
