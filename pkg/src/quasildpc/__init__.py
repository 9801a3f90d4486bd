"""Quantized LDPC message-passing decoders with quasi-uniform quantization."""

__version__ = "0.1.0"

from ._accel import DEFAULT_BACKEND, HAVE_NUMBA
from .quantizer import QuantizerSpec
from .tanner import TannerGraph, make_regular_code, parse_alist, emit_alist
from .decoder import DecoderConfig, decode

__all__ = [
    "DEFAULT_BACKEND",
    "HAVE_NUMBA",
    "QuantizerSpec",
    "TannerGraph",
    "make_regular_code",
    "parse_alist",
    "emit_alist",
    "DecoderConfig",
    "decode",
]
