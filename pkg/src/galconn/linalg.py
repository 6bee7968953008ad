"""Determinants and inverses of small symbolic matrices via cofactors."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .expr import ONE, Expr, add, div, is_zero, mul
from .tensor import obj_array


def det_and_adjugate(m: np.ndarray) -> tuple[Expr, np.ndarray]:
    """Return ``(det(m), adj(m))`` for a square object array of expressions.

    Minors are memoised by (rows, cols) so the Laplace expansion reuses
    every sub-determinant; fine for the chart dimensions used here.
    """
    m = np.asarray(m, dtype=object)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError("matrix must be square")

    @lru_cache(maxsize=None)
    def minor(rows: tuple[int, ...], cols: tuple[int, ...]) -> Expr:
        if not rows:
            return ONE
        r0, rest = rows[0], rows[1:]
        terms = []
        for k, c in enumerate(cols):
            e = m[r0, c]
            if is_zero(e):
                continue
            sub = minor(rest, cols[:k] + cols[k + 1 :])
            terms.append(mul(-1.0 if k % 2 else 1.0, e, sub))
        return add(*terms)

    everything = tuple(range(n))
    det = minor(everything, everything)
    adj = obj_array((n, n))
    for i in range(n):
        for j in range(n):
            rows = everything[:j] + everything[j + 1 :]
            cols = everything[:i] + everything[i + 1 :]
            cof = minor(rows, cols)
            adj[i, j] = mul(-1.0, cof) if (i + j) % 2 else cof
    return det, adj


def inverse(m: np.ndarray) -> np.ndarray:
    """Symbolic inverse ``adj(m) / det(m)``; entries share one determinant node."""
    det, adj = det_and_adjugate(m)
    n = adj.shape[0]
    out = obj_array((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = div(adj[i, j], det)
    return out
