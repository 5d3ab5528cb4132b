"""Bracketed root search used by the dispersion relations."""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from ..errors import OracleError


def scan_roots(f, count: int, start: float, step: float, stop: float, chunk: int = 256):
    """First ``count`` roots of ``f`` on (start, stop].

    ``f`` is evaluated on an array grid of spacing ``step`` to bracket sign
    changes, each bracket is then polished with Brent's method to full
    double precision. ``step`` must be below the smallest root spacing.
    """
    roots = []
    lo = start
    f_lo = float(f(np.array([lo]))[0])
    last = (lo, lo)
    while len(roots) < count:
        if lo >= stop:
            raise OracleError(
                f"bracket search exhausted at [{last[0]:.6g}, {last[1]:.6g}] "
                f"with {len(roots)} of {count} roots"
            )
        grid = lo + step * np.arange(1, chunk + 1)
        grid = grid[grid <= stop] if grid[0] <= stop else np.array([stop])
        vals = np.asarray(f(grid), dtype=float)
        xs = np.concatenate([[lo], grid])
        fs = np.concatenate([[f_lo], vals])
        for i in range(xs.size - 1):
            a, b = xs[i], xs[i + 1]
            fa, fb = fs[i], fs[i + 1]
            last = (a, b)
            if fa == 0.0:
                if not roots or roots[-1] != a:
                    roots.append(a)
            elif fa * fb < 0:
                g = lambda x: float(f(np.array([x]))[0])  # noqa: E731
                roots.append(brentq(g, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200))
            if len(roots) >= count:
                break
        lo, f_lo = xs[-1], fs[-1]
    return np.asarray(roots[:count])
