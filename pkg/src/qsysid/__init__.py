"""Identification of linear dynamic systems from quantized output data.

The package estimates a finite impulse response from input/output records
whose outputs passed through a known quantizer. The main estimator is a
Gibbs sampler that treats the pre-quantization outputs as latent variables
under a stable-spline prior; kernel-regularized and least-squares baselines
plus a Monte Carlo benchmark harness support head-to-head comparison.
"""

__version__ = "0.1.0"

from .backend import NUMBA_ENABLED
from .baselines import (
    LsFit,
    SsmlFit,
    empirical_noise_variance,
    ls_estimate,
    marginal_likelihood_objective,
    ssml_estimate,
)
from .benchmark import (
    ESTIMATORS,
    Protocol,
    RunRecord,
    derive_run_seed,
    fit_score,
    run_monte_carlo,
    run_single,
    summarize,
)
from .conditionals import (
    GibbsState,
    PosteriorGains,
    compute_posterior_gains,
    sample_g_conditional,
    sample_lambda_conditional,
    sample_sigma2_conditional,
    sample_z_conditional,
)
from .errors import QsysidError
from .gibbs import (
    ChainConfig,
    ChainResult,
    QuantileReport,
    diagnostics,
    estimate_beta,
    initialize,
    run_chain,
)
from .kernel import KernelMatrix, build_kernel, kernel_factor, kernel_quadratic_form
from .quantizer import (
    BinaryQuantizer,
    CeilQuantizer,
    CustomQuantizer,
    IdentityQuantizer,
    format_quantizer,
    level_interval,
    parse_quantizer,
    quantize,
    roundtrip_check,
)
from .samplers import (
    RngHandle,
    sample_gamma,
    sample_mvn,
    sample_truncated_normal,
    truncated_normal_vector,
)
from .simulate import (
    Dataset,
    TransferFunction,
    generate_dataset,
    impulse_response,
    random_system,
    toeplitz_regressor,
)

__all__ = [
    "__version__",
    "NUMBA_ENABLED",
    "QsysidError",
    "KernelMatrix",
    "build_kernel",
    "kernel_factor",
    "kernel_quadratic_form",
    "BinaryQuantizer",
    "CeilQuantizer",
    "CustomQuantizer",
    "IdentityQuantizer",
    "quantize",
    "level_interval",
    "roundtrip_check",
    "parse_quantizer",
    "format_quantizer",
    "RngHandle",
    "sample_truncated_normal",
    "truncated_normal_vector",
    "sample_gamma",
    "sample_mvn",
    "TransferFunction",
    "Dataset",
    "random_system",
    "impulse_response",
    "toeplitz_regressor",
    "generate_dataset",
    "PosteriorGains",
    "GibbsState",
    "compute_posterior_gains",
    "sample_z_conditional",
    "sample_lambda_conditional",
    "sample_sigma2_conditional",
    "sample_g_conditional",
    "LsFit",
    "SsmlFit",
    "ls_estimate",
    "empirical_noise_variance",
    "marginal_likelihood_objective",
    "ssml_estimate",
    "ChainConfig",
    "ChainResult",
    "QuantileReport",
    "estimate_beta",
    "initialize",
    "run_chain",
    "diagnostics",
    "ESTIMATORS",
    "Protocol",
    "RunRecord",
    "fit_score",
    "derive_run_seed",
    "run_single",
    "run_monte_carlo",
    "summarize",
]
