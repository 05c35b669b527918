"""Besov spaces with dominating mixed smoothness on R x T, numerically.

Sampled fields on a window of R x T, Littlewood-Paley blocks and the
Fourier-side norm, the two difference characterisations, Gaussian and
heat-equation samplers, and the experiment drivers built on them.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .grid import (
    Field,
    GridSpec,
    SpectralField,
    forward_transform,
    inverse_transform,
    make_grid,
    pad_window,
    read_field,
    restrict_field,
    sample_function,
    support_margin_ok,
    write_field,
)
from .mixed_norms import INF, TimeDomain, conjugate, convolve, mixed_lp_norm, mixed_lp_norm_local
from .littlewood_paley import (
    ALL,
    BesovParams,
    BlockDecomposition,
    BlockIndex,
    DyadicPartition,
    besov_norm_lp,
    block_kernel,
    build_partition,
    decompose,
    lp_block,
    spectral_derivative,
)
from .difference_norms import (
    LagGrid,
    WindowSpec,
    besov_norm_diff,
    besov_norm_diff_terms,
    dir_increment,
    local_besov_norm_diff2,
    make_lag_grid,
    multiply_time_window,
    rect_increment,
)
from .random_fields import (
    CovSpec,
    FunctionSampler,
    GaussianSampler,
    KolmogorovVerdict,
    MomentReport,
    SheConfig,
    SheSampler,
    estimate_increment_moments,
    increment_gaussianity,
    kolmogorov_check,
    regularity_fit,
    sample_product_gaussian,
    she_covariance,
    she_variance,
    simulate_she,
)
from .harness import (
    Corpus,
    CorpusMember,
    EquivalenceReport,
    SuiteReport,
    default_corpus,
    run_equivalence_experiment,
    run_inequality_suite,
    she_spacetime_corpus,
)
