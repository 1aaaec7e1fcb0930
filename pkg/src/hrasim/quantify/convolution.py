"""Probability that the time required exceeds the time available.

    Pt = P(T_reqd > T_avail) = integral of (1 - F_reqd(t)) f_avail(t) dt

Substituting ``u = F_avail(t)`` turns this into the integral over ``[0, 1]``
of ``S_reqd(Q_avail(u))``, a bounded, monotone integrand with no infinite
range to truncate. It is integrated with a globally adaptive 7/15-point
Gauss-Kronrod rule; breakpoints are placed where the quantiles of
``T_reqd`` fall so the rule never straddles the sharp part of the step.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .distributions import FittedDistribution

__all__ = ["QuadratureConfig", "QuadratureError", "gauss_kronrod", "adaptive_quad", "p_t",
           "combine_hep"]

# Kronrod abscissae on [-1, 1] (non-negative half, descending) and weights;
# the odd-indexed abscissae are the 7-point Gauss nodes.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
K_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
G_WEIGHTS = np.zeros(15)
G_WEIGHTS[1:7:2] = _WG[:3]
G_WEIGHTS[7] = _WG[3]
G_WEIGHTS[8:15] = G_WEIGHTS[6::-1]


class QuadratureError(RuntimeError):
    def __init__(self, achieved: float, target: float, intervals: int):
        super().__init__(f"quadrature did not converge: error estimate {achieved:.3g} > "
                         f"{target:.3g} after {intervals} intervals")
        self.achieved, self.target, self.intervals = achieved, target, intervals


@dataclass(frozen=True)
class QuadratureConfig:
    atol: float = 1e-7
    max_intervals: int = 2000


def gauss_kronrod(f, a: float, b: float):
    """Kronrod estimate on ``[a, b]`` and ``|K15 - G7|`` as its error."""
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    y = f(c + h * NODES)
    k = h * float(np.dot(K_WEIGHTS, y))
    g = h * float(np.dot(G_WEIGHTS, y))
    return k, abs(k - g)


def adaptive_quad(f, breaks, atol: float = 1e-7, max_intervals: int = 2000):
    """Integrate vectorised ``f`` over ``[breaks[0], breaks[-1]]``.

    The interval with the largest error estimate is bisected until the summed
    estimate drops below ``atol``. Returns ``(value, error_estimate)``.
    """
    heap = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            v, e = gauss_kronrod(f, a, b)
            heapq.heappush(heap, (-e, a, b, v))
    total_err = sum(-x[0] for x in heap)
    while total_err > atol:
        if len(heap) >= max_intervals:
            raise QuadratureError(total_err, atol, len(heap))
        ne, a, b, _ = heapq.heappop(heap)
        m = 0.5 * (a + b)
        if not a < m < b:  # interval exhausted at float resolution
            heapq.heappush(heap, (ne, a, b, _))
            raise QuadratureError(total_err, atol, len(heap))
        total_err += ne
        for lo, hi in ((a, m), (m, b)):
            v, e = gauss_kronrod(f, lo, hi)
            heapq.heappush(heap, (-e, lo, hi, v))
            total_err += e
    # sum smallest first for a stable total
    vals = sorted((x[3] for x in heap), key=abs)
    return math.fsum(vals), total_err


_BREAK_P = (1e-12, 1e-9, 1e-6, 1e-4, 1e-3, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99,
            0.999, 1 - 1e-4, 1 - 1e-6, 1 - 1e-9, 1 - 1e-12)


def p_t(treqd: FittedDistribution, tavail: FittedDistribution,
        config: QuadratureConfig | None = None) -> float:
    """P(T_reqd > T_avail) for independent times, clamped to ``[0, 1]``."""
    cfg = config or QuadratureConfig()
    if treqd.is_point and tavail.is_point:
        return 1.0 if treqd.loc > tavail.loc else 0.0
    if tavail.is_point:
        return _clamp(float(treqd.sf(tavail.loc)))
    if treqd.is_point:
        # P(T_avail < r); T_avail is continuous so < and <= agree
        return _clamp(float(tavail.cdf(treqd.loc)))
    fa, fr = tavail.frozen(), treqd.frozen()
    u = fa.cdf(fr.ppf(np.array(_BREAK_P)))
    breaks = np.unique(np.concatenate([[0.0, 1.0], u[(u > 0) & (u < 1)]]))
    val, _ = adaptive_quad(lambda x: fr.sf(fa.ppf(x)), breaks, cfg.atol, cfg.max_intervals)
    return _clamp(val)


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def combine_hep(pc: float, pt: float) -> float:
    """Event failure probability from independent cognitive and time failures."""
    for name, v in (("Pc", pc), ("Pt", pt)):
        if not (isinstance(v, (int, float, np.floating)) and 0.0 <= v <= 1.0):
            raise ValueError(f"{name} must be a probability in [0, 1], got {v!r}")
    return 1.0 - (1.0 - pc) * (1.0 - pt)
