"""Regular LDPC code: alist storage, systematic encoder, normalized min-sum.

The shipped code is a (3,6)-regular length-256 rate-1/2 matrix grown by
progressive edge growth (see scripts/make_ldpc_matrix.py); its columns are
permuted once at construction time so the last m columns are invertible over
GF(2) and codewords are systematic with information bits first.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError

LLR_CLIP = 30.0
DEFAULT_ALIST = "ldpc_n256_r50_reg36.alist"

__all__ = [
    "LLR_CLIP",
    "LdpcCode",
    "SoftDecoderOutput",
    "default_code",
    "read_alist",
    "soft_symbols",
    "write_alist",
]


def read_alist(path: str | Path) -> np.ndarray:
    """Parse an alist file into a dense binary parity-check matrix."""
    tokens = Path(path).read_text().split()
    it = iter(tokens)
    n, m = int(next(it)), int(next(it))
    next(it), next(it)  # max degrees, implied by the lists below
    col_deg = [int(next(it)) for _ in range(n)]
    row_deg = [int(next(it)) for _ in range(m)]
    h = np.zeros((m, n), dtype=np.uint8)
    for v in range(n):
        for _ in range(col_deg[v]):
            c = int(next(it))
            if c > 0:
                h[c - 1, v] = 1
    for c in range(m):
        for _ in range(row_deg[c]):
            v = int(next(it))
            if v > 0 and not h[c, v - 1]:
                raise ConfigurationError(f"alist row/column lists disagree at ({c}, {v - 1})")
    return h


def write_alist(path: str | Path, h: np.ndarray) -> None:
    """Write a dense binary parity-check matrix in alist format."""
    h = np.asarray(h, dtype=np.uint8)
    m, n = h.shape
    col_deg = h.sum(axis=0)
    row_deg = h.sum(axis=1)
    lines = [f"{n} {m}", f"{col_deg.max()} {row_deg.max()}"]
    lines.append(" ".join(str(d) for d in col_deg))
    lines.append(" ".join(str(d) for d in row_deg))
    for v in range(n):
        lines.append(" ".join(str(c + 1) for c in np.nonzero(h[:, v])[0]))
    for c in range(m):
        lines.append(" ".join(str(v + 1) for v in np.nonzero(h[c, :])[0]))
    Path(path).write_text("\n".join(lines) + "\n")


def _gf2_inv(a: np.ndarray) -> np.ndarray:
    """Invert a square binary matrix over GF(2); raises if singular."""
    a = a.copy().astype(np.uint8)
    n = a.shape[0]
    inv = np.eye(n, dtype=np.uint8)
    for col in range(n):
        pivots = np.nonzero(a[col:, col])[0]
        if pivots.size == 0:
            raise ConfigurationError("matrix is singular over GF(2)")
        p = col + pivots[0]
        if p != col:
            a[[col, p]] = a[[p, col]]
            inv[[col, p]] = inv[[p, col]]
        rows = np.nonzero(a[:, col])[0]
        rows = rows[rows != col]
        a[rows] ^= a[col]
        inv[rows] ^= inv[col]
    return inv


@dataclass
class SoftDecoderOutput:
    """Per-bit posterior LLRs plus hard decisions and convergence bookkeeping."""

    app_llr: np.ndarray
    hard: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray


class LdpcCode:
    """Binary LDPC code with systematic GF(2) encoding and min-sum decoding.

    LLR convention throughout: positive means bit 0 is more likely,
    llr = log(P(b=0) / P(b=1)).
    """

    def __init__(self, h: np.ndarray):
        h = np.asarray(h, dtype=np.uint8)
        self.h = h
        self.m, self.n = h.shape
        self.k = self.n - self.m
        col_deg = h.sum(axis=0)
        row_deg = h.sum(axis=1)
        if col_deg.min() != col_deg.max() or row_deg.min() != row_deg.max():
            raise ConfigurationError("only regular parity-check matrices are supported")
        self.dv = int(col_deg[0])
        self.dc = int(row_deg[0])
        # adjacency: check c touches variables chk_adj[c, :]
        self.chk_adj = np.nonzero(h)[1].reshape(self.m, self.dc)
        # inverse map: variable v's dv edges as (check, slot) pairs
        var_c = np.empty((self.n, self.dv), dtype=np.int64)
        var_j = np.empty((self.n, self.dv), dtype=np.int64)
        fill = np.zeros(self.n, dtype=np.int64)
        for c in range(self.m):
            for j in range(self.dc):
                v = self.chk_adj[c, j]
                var_c[v, fill[v]] = c
                var_j[v, fill[v]] = j
                fill[v] += 1
        if not np.all(fill == self.dv):
            raise ConfigurationError("adjacency is not regular")
        self.var_c, self.var_j = var_c, var_j
        # systematic encoder: last m columns must form an invertible block
        h2_inv = _gf2_inv(h[:, self.k :])
        self.encode_mat = (h2_inv @ h[:, : self.k]) % 2  # parity = E @ info

    @classmethod
    def from_alist(cls, path: str | Path) -> "LdpcCode":
        return cls(read_alist(path))

    @property
    def rate(self) -> float:
        return self.k / self.n

    def encode(self, info: np.ndarray) -> np.ndarray:
        """Systematic encode; accepts (k,) or (batch, k), info bits lead."""
        single = np.asarray(info).ndim == 1
        info = np.atleast_2d(np.asarray(info, dtype=np.uint8))
        if info.shape[1] != self.k:
            raise ConfigurationError(f"expected {self.k} info bits, got {info.shape[1]}")
        parity = (info @ self.encode_mat.T) % 2
        out = np.concatenate([info, parity], axis=1).astype(np.uint8)
        return out[0] if single else out

    def check(self, codewords: np.ndarray) -> np.ndarray:
        """True per row when all parity checks are satisfied."""
        cw = np.atleast_2d(np.asarray(codewords, dtype=np.uint8))
        synd = cw[:, self.chk_adj].sum(axis=2) % 2
        return ~np.any(synd, axis=1)

    def decode(
        self,
        llr: np.ndarray,
        max_iter: int = 25,
        normalization: float = 0.75,
        clip: float = LLR_CLIP,
    ) -> SoftDecoderOutput:
        """Normalized min-sum decoding with early exit on parity satisfaction.

        ``llr`` is (n,) or (batch, n).  Rows are frozen at their first
        parity-satisfying iterate; unconverged rows return the final state
        with converged=False so callers can proceed on soft values.
        """
        single = np.asarray(llr).ndim == 1
        llr = np.atleast_2d(np.asarray(llr, dtype=np.float64))
        if llr.shape[1] != self.n:
            raise ConfigurationError(f"expected {self.n} LLRs, got {llr.shape[1]}")
        llr = np.clip(llr, -clip, clip)
        batch = llr.shape[0]

        v2c = llr[:, self.chk_adj]  # (batch, m, dc)
        app = llr.copy()
        out_app = llr.copy()
        converged = np.zeros(batch, dtype=bool)
        iterations = np.full(batch, max_iter, dtype=np.int64)

        hard = app < 0
        ok = ~np.any(hard[:, self.chk_adj].sum(axis=2) % 2, axis=1)
        out_app[ok] = app[ok]
        iterations[ok] = 0
        converged |= ok

        for it in range(1, max_iter + 1):
            if converged.all():
                break
            signs = np.where(v2c < 0, -1.0, 1.0)
            total_sign = signs.prod(axis=2, keepdims=True)
            mags = np.abs(v2c)
            part = np.partition(mags, 1, axis=2)
            min1 = part[:, :, 0:1]
            min2 = part[:, :, 1:2]
            is_min = mags == min1
            # exclude the edge itself: the minimum seen by the argmin edge is min2
            first_min = np.cumsum(is_min, axis=2) == 1
            use_min2 = is_min & first_min
            excl_min = np.where(use_min2, min2, min1)
            c2v = normalization * total_sign * signs * excl_min

            incoming = c2v[:, self.var_c, self.var_j].sum(axis=2)  # (batch, n)
            app = llr + incoming
            v2c = app[:, self.chk_adj] - c2v

            hard = app < 0
            ok = ~np.any(hard[:, self.chk_adj].sum(axis=2) % 2, axis=1)
            newly = ok & ~converged
            out_app[newly] = app[newly]
            iterations[newly] = it
            converged |= newly

        out_app[~converged] = app[~converged]
        result = SoftDecoderOutput(
            app_llr=out_app[0] if single else out_app,
            hard=(out_app < 0).astype(np.uint8)[0] if single else (out_app < 0).astype(np.uint8),
            converged=converged[0] if single else converged,
            iterations=iterations[0] if single else iterations,
        )
        return result


def default_code() -> LdpcCode:
    """Load the packaged length-256 rate-1/2 (3,6) code."""
    with resources.as_file(resources.files("wavecoex.fec").joinpath("data", DEFAULT_ALIST)) as p:
        return LdpcCode.from_alist(p)


def soft_symbols(app_llr: np.ndarray, constellation) -> np.ndarray:
    """Posterior mean symbols E[s] from per-bit LLRs.

    Bits are grouped MSB first per symbol; P(bit=0) = sigmoid(llr).  For QPSK
    this reduces to (tanh(l_re/2) + j*tanh(l_im/2)) / sqrt(2) with l_re the
    second bit of the pair and l_im the first.
    """
    b = constellation.bits_per_symbol
    llr = np.asarray(app_llr, dtype=np.float64)
    if llr.shape[-1] % b != 0:
        raise ConfigurationError(f"LLR count {llr.shape[-1]} not divisible by {b}")
    grouped = llr.reshape(*llr.shape[:-1], -1, b)
    p0 = 1.0 / (1.0 + np.exp(-grouped))  # (..., n_sym, b)
    labels = np.arange(constellation.order)
    shifts = np.arange(b - 1, -1, -1)
    label_bits = ((labels[:, None] >> shifts[None, :]) & 1).astype(bool)  # (order, b)
    # P(label) = prod over bits of (p0 if bit==0 else 1-p0)
    probs = np.where(label_bits[None, :, :], 1.0 - p0[..., None, :], p0[..., None, :])
    p_label = probs.prod(axis=-1)  # (..., n_sym, order)
    return p_label @ constellation.points
