"""Shared test helpers (not collected)."""
import itertools

import numpy as np

from sprayforge.expr import parse_expr


def random_polynomial(rng, layout, degree=3, terms=5):
    """Random polynomial in all layout variables, as a parsed expression."""
    names = layout.names
    out = []
    for _ in range(terms):
        powers = rng.integers(0, 2, size=len(names))
        while powers.sum() > degree:
            powers[rng.integers(len(names))] = 0
        mono = "*".join(f"{nm}^{pw}" for nm, pw in zip(names, powers) if pw) or "1"
        out.append(f"({rng.uniform(-2, 2):.6f})*{mono}")
    return parse_expr(" + ".join(out), layout)


def grid_points(lo, hi, n, per_axis):
    axis = np.linspace(lo, hi, per_axis)
    return [np.array(p) for p in itertools.product(axis, repeat=n)]
