"""Small dense linear algebra: Gaussian elimination with partial pivoting.

Matrices here are n x n with n rarely above 6, so a plain row-reduction is
both fast enough and keeps the singularity threshold under our control.
"""
from __future__ import annotations

import numpy as np

from .errors import SingularMatrix

PIVOT_RTOL = 1e-12


def lu_factor(a):
    """Row-reduce a copy of ``a``.

    Returns ``(lu, perm, sign, ok)``; ``ok`` is False when some pivot falls
    below ``PIVOT_RTOL`` times the largest entry of its original row.
    """
    lu = np.array(a, dtype=float)
    n = lu.shape[0]
    if lu.shape != (n, n):
        raise ValueError(f"square matrix expected, got shape {lu.shape}")
    scale = np.max(np.abs(lu), axis=1)
    perm = np.arange(n)
    sign = 1.0
    ok = True
    for col in range(n):
        piv = col + int(np.argmax(np.abs(lu[col:, col])))
        if piv != col:
            lu[[col, piv]] = lu[[piv, col]]
            perm[[col, piv]] = perm[[piv, col]]
            sign = -sign
        p = lu[col, col]
        if abs(p) <= PIVOT_RTOL * scale[perm[col]] or p == 0.0:
            ok = False
            continue
        below = lu[col + 1:, col] / p
        lu[col + 1:, col] = below
        lu[col + 1:, col + 1:] -= np.outer(below, lu[col, col + 1:])
    return lu, perm, sign, ok


def det(a) -> float:
    lu, _, sign, _ = lu_factor(a)
    return float(sign * np.prod(np.diag(lu)))


def solve(a, b):
    """Solve ``a @ x = b`` for a vector or a matrix of right-hand sides."""
    lu, perm, _, ok = lu_factor(a)
    if not ok:
        raise SingularMatrix("matrix is singular to working precision")
    rhs = np.array(b, dtype=float)[perm]
    n = lu.shape[0]
    for i in range(1, n):
        rhs[i] -= lu[i, :i] @ rhs[:i]
    for i in range(n - 1, -1, -1):
        rhs[i] = (rhs[i] - lu[i, i + 1:] @ rhs[i + 1:]) / lu[i, i]
    return rhs


def inv(a):
    n = np.shape(a)[0]
    return solve(a, np.eye(n))


def is_regular(g, eps_reg: float = 1e-10) -> bool:
    """Regularity gate: |det g| must exceed eps_reg * max|g|^n."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    big = float(np.max(np.abs(g)))
    if big == 0.0:
        return False
    return abs(det(g)) >= eps_reg * big ** n
