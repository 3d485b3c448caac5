"""Forward error correction: LDPC for the NOMA link, convolutional for JRC."""

from .convolutional import BlockInterleaver, conv_encode, viterbi_decode
from .ldpc import (
    LLR_CLIP,
    LdpcCode,
    SoftDecoderOutput,
    default_code,
    read_alist,
    soft_symbols,
    write_alist,
)

__all__ = [
    "BlockInterleaver",
    "LLR_CLIP",
    "LdpcCode",
    "SoftDecoderOutput",
    "conv_encode",
    "default_code",
    "read_alist",
    "soft_symbols",
    "viterbi_decode",
    "write_alist",
]
