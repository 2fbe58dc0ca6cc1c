"""Empirical and pseudo neural tangent kernels for bias-free fully-connected networks."""

from ._pntk import (  # noqa: F401
    Network,
    PntkError,
    __version__,
    entk_block,
    entk_matrix,
    init_network,
    load_idx,
    pntk,
    pntk_matrix,
    predict_entk,
    predict_pntk,
    rel_frobenius_diff,
    resource_estimate,
    synth_clusters,
)
