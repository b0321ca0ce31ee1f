"""High-quantile inference for heavy-tailed data observed as per-block
top order statistics, with empirical likelihood confidence intervals and a
reproducible coverage-study engine."""

from .api import HighQuantileEstimator, as_block_data
from .blocks import (
    Block,
    BlockData,
    blockify,
    read_blocks_csv,
    read_raw_sample,
    validate,
    write_blocks_csv,
)
from .distributions import (
    Burr,
    Frechet,
    TopOrderSample,
    parse_model,
    quantile_u,
    sample_top_block,
    sample_top_block_naive,
    second_order_a,
    true_log_quantile,
)
from .estimators import (
    QuantileEstimate,
    a_coeff,
    bias_constant_br,
    gamma_hat,
    gamma_hat_star,
    harmonic_tail,
    quantile_hat,
    quantile_hat_star,
)
from .likelihood import (
    DEFAULT_CORRECTION,
    ConfidenceInterval,
    ZSample,
    ael_statistic,
    el_lambda,
    el_statistic,
    likelihood_ci,
    normal_ci,
    z_sample,
)
from .montecarlo import (
    ReplicateRecord,
    ReportRow,
    SimConfig,
    SimulationReport,
    run_cell,
    run_study,
    scheme_params,
)

__version__ = "0.1.0"

__all__ = [
    "Block",
    "BlockData",
    "Burr",
    "ConfidenceInterval",
    "DEFAULT_CORRECTION",
    "Frechet",
    "HighQuantileEstimator",
    "QuantileEstimate",
    "ReplicateRecord",
    "ReportRow",
    "SimConfig",
    "SimulationReport",
    "TopOrderSample",
    "ZSample",
    "a_coeff",
    "ael_statistic",
    "as_block_data",
    "bias_constant_br",
    "blockify",
    "el_lambda",
    "el_statistic",
    "gamma_hat",
    "gamma_hat_star",
    "harmonic_tail",
    "likelihood_ci",
    "normal_ci",
    "parse_model",
    "quantile_hat",
    "quantile_hat_star",
    "quantile_u",
    "read_blocks_csv",
    "read_raw_sample",
    "run_cell",
    "run_study",
    "sample_top_block",
    "sample_top_block_naive",
    "scheme_params",
    "second_order_a",
    "true_log_quantile",
    "validate",
    "write_blocks_csv",
    "z_sample",
]
