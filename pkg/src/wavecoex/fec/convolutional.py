"""Rate-1/2 convolutional code with soft Viterbi decoding, plus interleaving.

Constraint length 7, generators (171, 133) octal, tail terminated with six
zero bits.  The decoder is batched over independent blocks so a whole frame
of codewords runs through the trellis in one vectorized pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError

G1 = 0o171
G2 = 0o133
CONSTRAINT = 7
N_STATES = 1 << (CONSTRAINT - 1)
TAIL = CONSTRAINT - 1

__all__ = ["BlockInterleaver", "conv_encode", "viterbi_decode"]


def _parity(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> 4)
    x = x ^ (x >> 2)
    x = x ^ (x >> 1)
    return x & 1


# transition tables: register r = (u << 6) | state, state holds the six previous
# bits with the most recent in the MSB; next state puts u in the MSB.
_U, _S = np.meshgrid(np.arange(2), np.arange(N_STATES), indexing="ij")
_REG = (_U << (CONSTRAINT - 1)) | _S
_OUT1 = _parity(_REG & G1)  # (2, 64)
_OUT2 = _parity(_REG & G2)
_NEXT = (_U << (CONSTRAINT - 2)) | (_S >> 1)
# predecessors of each state: the shifted-out bit j gives pred = ((ns<<1)&63)|j
_PRED = ((np.arange(N_STATES)[:, None] << 1) & (N_STATES - 1)) | np.arange(2)[None, :]
_IN_BIT = np.arange(N_STATES) >> (CONSTRAINT - 2)  # input that produced each state
# the input on every branch into ns is ns's own MSB, whichever predecessor
_BRANCH_IN = np.broadcast_to(_IN_BIT[:, None], _PRED.shape)


def conv_encode(bits: np.ndarray) -> np.ndarray:
    """Encode info bits; output length 2 * (len(bits) + 6) with tail flush."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    padded = np.concatenate([bits, np.zeros(TAIL, dtype=np.uint8)])
    g1_taps = np.array([(G1 >> (CONSTRAINT - 1 - i)) & 1 for i in range(CONSTRAINT)], np.uint8)
    g2_taps = np.array([(G2 >> (CONSTRAINT - 1 - i)) & 1 for i in range(CONSTRAINT)], np.uint8)
    c1 = np.convolve(padded, g1_taps)[: padded.size] % 2
    c2 = np.convolve(padded, g2_taps)[: padded.size] % 2
    out = np.empty(2 * padded.size, dtype=np.uint8)
    out[0::2] = c1
    out[1::2] = c2
    return out


def viterbi_decode(llr: np.ndarray, n_info: int) -> np.ndarray:
    """Soft-input Viterbi decode of tail-terminated blocks.

    ``llr`` is (2*(n_info+6),) or (batch, 2*(n_info+6)) with the usual
    positive-means-zero convention; returns the ML info bits.
    """
    single = np.asarray(llr).ndim == 1
    llr = np.atleast_2d(np.asarray(llr, dtype=np.float64))
    n_steps = n_info + TAIL
    if llr.shape[1] != 2 * n_steps:
        raise ConfigurationError(f"expected {2 * n_steps} LLRs, got {llr.shape[1]}")
    batch = llr.shape[0]

    # correlation metric: each coded bit c contributes (1 - 2c) * llr / 2
    bm_sign1 = (1.0 - 2.0 * _OUT1)[None, :, :]  # (1, 2, 64)
    bm_sign2 = (1.0 - 2.0 * _OUT2)[None, :, :]

    pm = np.full((batch, N_STATES), -np.inf)
    pm[:, 0] = 0.0
    decisions = np.empty((n_steps, batch, N_STATES), dtype=np.uint8)
    for t in range(n_steps):
        l1 = llr[:, 2 * t, None, None]
        l2 = llr[:, 2 * t + 1, None, None]
        bm = 0.5 * (bm_sign1 * l1 + bm_sign2 * l2)  # (batch, 2, 64)
        cand = pm[:, _PRED] + bm[:, _BRANCH_IN, _PRED]  # (batch, 64, 2)
        choice = np.argmax(cand, axis=2).astype(np.uint8)
        pm = np.take_along_axis(cand, choice[:, :, None].astype(np.int64), axis=2)[:, :, 0]
        decisions[t] = choice

    info = np.empty((batch, n_steps), dtype=np.uint8)
    cur = np.zeros(batch, dtype=np.int64)  # tail termination ends in state 0
    rows = np.arange(batch)
    for t in range(n_steps - 1, -1, -1):
        info[:, t] = _IN_BIT[cur]
        cur = _PRED[cur, decisions[t][rows, cur]]
    out = info[:, :n_info]
    return out[0] if single else out


@dataclass(frozen=True)
class BlockInterleaver:
    """Rectangular interleaver: write row-wise into n_rows rows, read columns."""

    n_rows: int

    def _check(self, n: int) -> None:
        if self.n_rows < 1 or n % self.n_rows != 0:
            raise ConfigurationError(f"length {n} not divisible by {self.n_rows} rows")

    def interleave(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        self._check(x.shape[-1])
        return x.reshape(*x.shape[:-1], self.n_rows, -1).swapaxes(-1, -2).reshape(x.shape)

    def deinterleave(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y)
        self._check(y.shape[-1])
        cols = y.shape[-1] // self.n_rows
        return y.reshape(*y.shape[:-1], cols, self.n_rows).swapaxes(-1, -2).reshape(y.shape)
