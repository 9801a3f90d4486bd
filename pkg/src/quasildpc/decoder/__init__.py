"""Flooding message-passing decoders (min-sum and sum-product families)."""

from .engine import (
    ALGORITHMS,
    FLOAT_CEILING,
    DecodeResult,
    DecoderConfig,
    MessageState,
    approx_log1p_exp,
    boxplus,
    boxplus_approx,
    canonical_algorithm,
    check_node,
    cn_update_ams,
    cn_update_ms,
    cn_update_oms,
    cn_update_spa_approx,
    cn_update_spa_boxplus,
    cn_update_spa_phi,
    cn_update_spa_tanh,
    correction,
    correction_approx,
    decode,
    decode_batch,
    phi,
    phi_naive,
    phi_saturation_point,
    spa_tanh_naive,
    vn_update,
)

__all__ = [name for name in dir() if not name.startswith("_")]
