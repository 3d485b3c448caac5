#!/usr/bin/env python
"""Generate the packaged (3,6)-regular LDPC parity-check matrix.

Progressive edge growth: each new edge attaches its variable to the check
that is farthest from it in the current graph (preferring unreachable
checks), breaking ties toward low degree.  A check-degree cap keeps the code
exactly regular.  Columns are then permuted so the trailing square block is
invertible over GF(2), which makes systematic encoding a precomputed matrix
multiply.  The result is committed; rerunning with the same seed reproduces
it bit for bit.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from wavecoex.fec.ldpc import LdpcCode, write_alist  # noqa: E402


def peg_construct(n: int, m: int, dv: int, dc: int, rng: np.random.Generator) -> np.ndarray:
    if n * dv != m * dc:
        raise ValueError("degree budget mismatch: n*dv must equal m*dc")
    chk_of_var = [[] for _ in range(n)]
    var_of_chk = [[] for _ in range(m)]
    chk_deg = np.zeros(m, dtype=np.int64)

    def bfs_checks(v: int) -> tuple[set[int], set[int]]:
        """Reached check set and the final BFS frontier of checks."""
        reached = set(chk_of_var[v])
        frontier = set(chk_of_var[v])
        seen_vars = {v}
        last_frontier = set(frontier)
        while frontier:
            next_vars = set()
            for c in frontier:
                for u in var_of_chk[c]:
                    if u not in seen_vars:
                        next_vars.add(u)
                        seen_vars.add(u)
            new_checks = set()
            for u in next_vars:
                for c in chk_of_var[u]:
                    if c not in reached:
                        new_checks.add(c)
            if not new_checks:
                break
            reached |= new_checks
            frontier = new_checks
            last_frontier = new_checks
        return reached, last_frontier

    def pick(candidates: list[int]) -> int:
        degs = chk_deg[candidates]
        lowest = [c for c, d in zip(candidates, degs) if d == degs.min()]
        return int(lowest[rng.integers(len(lowest))])

    for v in range(n):
        for e in range(dv):
            open_checks = [c for c in range(m) if chk_deg[c] < dc and c not in chk_of_var[v]]
            if not open_checks:
                raise RuntimeError(f"no check with spare degree for variable {v}")
            if e == 0:
                c = pick(open_checks)
            else:
                reached, frontier = bfs_checks(v)
                unreached = [c for c in open_checks if c not in reached]
                if unreached:
                    c = pick(unreached)
                else:
                    far = [c for c in open_checks if c in frontier]
                    c = pick(far if far else open_checks)
            chk_of_var[v].append(c)
            var_of_chk[c].append(v)
            chk_deg[c] += 1

    h = np.zeros((m, n), dtype=np.uint8)
    for v, checks in enumerate(chk_of_var):
        h[checks, v] = 1
    return h


def pivot_columns(h: np.ndarray) -> np.ndarray:
    """Column indices forming an invertible m x m block (GF(2) row echelon)."""
    a = h.copy().astype(np.uint8)
    m, n = a.shape
    pivots = []
    row = 0
    for col in range(n):
        hits = np.nonzero(a[row:, col])[0]
        if hits.size == 0:
            continue
        p = row + hits[0]
        if p != row:
            a[[row, p]] = a[[p, row]]
        others = np.nonzero(a[:, col])[0]
        others = others[others != row]
        a[others] ^= a[row]
        pivots.append(col)
        row += 1
        if row == m:
            break
    if row < m:
        raise RuntimeError(f"parity-check matrix has rank {row} < {m}")
    return np.array(pivots, dtype=np.int64)


def girth(h: np.ndarray) -> int:
    """Shortest cycle length in the Tanner graph (BFS per variable)."""
    m, n = h.shape
    chk_of_var = [list(np.nonzero(h[:, v])[0]) for v in range(n)]
    var_of_chk = [list(np.nonzero(h[c, :])[0]) for c in range(m)]
    best = np.inf
    for v0 in range(n):
        dist = {("v", v0): 0}
        queue = [("v", v0)]
        while queue:
            kind, idx = queue.pop(0)
            d = dist[(kind, idx)]
            if d * 1 >= best / 2:
                continue
            neighbors = (
                [("c", c) for c in chk_of_var[idx]]
                if kind == "v"
                else [("v", u) for u in var_of_chk[idx]]
            )
            for node in neighbors:
                if node not in dist:
                    dist[node] = d + 1
                    queue.append(node)
                elif dist[node] >= d:
                    # found a cycle back near the root
                    best = min(best, d + 1 + dist[node])
    return int(best)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=256)
    parser.add_argument("--rate", type=float, default=0.5)
    parser.add_argument("--dv", type=int, default=3)
    parser.add_argument("--seed", type=int, default=20240601)
    parser.add_argument(
        "--out",
        type=Path,
        default=Path(__file__).resolve().parents[1]
        / "src/wavecoex/fec/data/ldpc_n256_r50_reg36.alist",
    )
    args = parser.parse_args()

    m = round(args.n * (1 - args.rate))
    dc = args.dv * args.n // m
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    h = peg_construct(args.n, m, args.dv, dc, rng)

    piv = pivot_columns(h)
    info_cols = np.setdiff1d(np.arange(args.n), piv)
    h_perm = h[:, np.concatenate([info_cols, piv])]

    code = LdpcCode(h_perm)  # validates regularity and invertibility
    g = girth(h_perm)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_alist(args.out, h_perm)
    print(f"wrote {args.out}")
    print(f"n={code.n} k={code.k} dv={code.dv} dc={code.dc} girth={g}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
