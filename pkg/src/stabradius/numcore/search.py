"""Global maximisation of a continuous function on the real line."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LineMax:
    argmax: float
    value: float
    window: float
    step: float
    grid: np.ndarray
    samples: np.ndarray


def golden_section_max(g, a: float, b: float, xtol: float = 1e-11, max_iter: int = 200):
    """Maximise a scalar function on ``[a, b]`` assuming unimodality there."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(max_iter):
        if abs(b - a) <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + GOLDEN * (b - a)
            gd = g(d)
    return (c, gc) if gc >= gd else (d, gd)


def maximize_on_line(g, window: float, envelope, tol: float = 1e-9, lipschitz: float = 1.0,
                     max_points: int = 400_001, max_expansions: int = 40) -> LineMax:
    """Supremum over the real line of a continuous ``g``.

    ``g`` is vectorised over frequency arrays.  ``envelope(S)`` bounds ``g(s)``
    for all ``|s| >= S`` and must be non-increasing in ``S``; the window is
    doubled until the envelope falls below the best grid value.  The grid step
    is chosen so that ``lipschitz * step / 2`` is small relative to the
    maximum; every discrete local maximum that could still hide the global one
    under that Lipschitz bound is refined by golden-section search on its
    bracketing cells.
    """
    S = float(window)
    for _ in range(max_expansions):
        n_coarse = 2001
        coarse = np.linspace(-S, S, n_coarse)
        coarse_vals = np.asarray(g(coarse), dtype=float)
        best = float(coarse_vals.max())
        if envelope(S) <= best + tol:
            break
        S *= 2.0
    else:
        raise ConvergenceError("envelope never dominated by the running maximum; cannot truncate")

    margin = max(tol, 1e-3 * best)
    step = 2.0 * margin / max(lipschitz, 1e-300)
    step = min(step, 2.0 * S / (n_coarse - 1))
    n = int(min(max_points, math.ceil(2.0 * S / step) + 1))
    grid = np.linspace(-S, S, n)
    vals = np.asarray(g(grid), dtype=float)
    step = grid[1] - grid[0]
    slack = 0.5 * lipschitz * step
    i_best = int(np.argmax(vals))
    best_s, best_v = float(grid[i_best]), float(vals[i_best])

    padded = np.concatenate([[-np.inf], vals, [-np.inf]])
    is_peak = (padded[1:-1] >= padded[:-2]) & (padded[1:-1] >= padded[2:])
    peaks = np.nonzero(is_peak & (vals + slack >= best_v))[0]
    peaks = peaks[np.argsort(-vals[peaks], kind="stable")][:64]

    def scalar(s):
        return float(np.asarray(g(np.array([s])), dtype=float)[0])

    for i in sorted(peaks):
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, n - 1)]
        s, v = golden_section_max(scalar, float(lo), float(hi))
        if v > best_v:
            best_s, best_v = float(s), float(v)
    return LineMax(best_s, best_v, S, float(step), grid, vals)
