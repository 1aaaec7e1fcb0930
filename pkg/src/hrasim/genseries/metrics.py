"""Agreement metrics between source and synthetic duration samples."""

from __future__ import annotations

import csv
import io

import numpy as np

from ..dataset import fmt_float

__all__ = ["mse", "mae", "cv", "kde", "silverman_bandwidth", "quantile_profile", "compare_segments",
           "kde_csv", "QUANTILE_LEVELS"]

# midpoints of 100 equal-probability bins
QUANTILE_LEVELS = np.linspace(0.005, 0.995, 100)


def _pair(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("empty input")
    return a, b


def mse(a, b) -> float:
    """Mean squared difference."""
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def mae(a, b) -> float:
    """Mean absolute difference."""
    a, b = _pair(a, b)
    return float(np.mean(np.abs(a - b)))


def cv(x) -> float:
    """Coefficient of variation with the population standard deviation."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty input")
    m = x.mean()
    if m == 0:
        raise ValueError("coefficient of variation undefined for zero mean")
    return float(x.std() / m)


def kde(samples, bandwidth: float, grid) -> np.ndarray:
    """Gaussian kernel density estimate of ``samples`` evaluated on ``grid``."""
    s = np.asarray(samples, dtype=float).ravel()
    if s.size == 0:
        raise ValueError("samples must be non-empty")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be > 0")
    g = np.asarray(grid, dtype=float)
    z = (g[..., None] - s) / bandwidth
    return np.exp(-0.5 * z * z).sum(-1) / (s.size * bandwidth * np.sqrt(2 * np.pi))


def silverman_bandwidth(x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    iqr = np.subtract(*np.quantile(x, [0.75, 0.25]))
    sig = min(x.std(ddof=1), iqr / 1.349) if x.size > 1 else 0.0
    if sig <= 0:
        sig = max(abs(x.mean()) * 1e-3, 1e-9)
    return float(0.9 * sig * x.size ** -0.2)


def quantile_profile(x, levels=QUANTILE_LEVELS) -> np.ndarray:
    return np.quantile(np.asarray(x, dtype=float).ravel(), levels)


def compare_segments(source: np.ndarray, synthetic: np.ndarray, labels) -> dict:
    """Per-segment MSE/MAE between matched quantile profiles, plus CV and mean
    of each profile and their absolute differences.

    ``source`` and ``synthetic`` are ``(n, n_segments)`` arrays; row counts may
    differ because both are reduced to the same quantile levels first.
    """
    out = {}
    for j, lab in enumerate(labels):
        qs = quantile_profile(source[:, j])
        qy = quantile_profile(synthetic[:, j])
        out[lab] = {
            "mae": mae(qs, qy),
            "mse": mse(qs, qy),
            "cv_source": cv(qs),
            "cv_synthetic": cv(qy),
            "cv_abs_diff": abs(cv(qs) - cv(qy)),
            "mean_source": float(qs.mean()),
            "mean_synthetic": float(qy.mean()),
            "mean_abs_diff": abs(float(qs.mean() - qy.mean())),
        }
    return out


def kde_csv(source: np.ndarray, synthetic: np.ndarray, labels, points: int = 200) -> str:
    """Long-format CSV ``segment,grid,density_source,density_synthetic``.

    Each segment's grid spans both samples padded by four source bandwidths;
    the source bandwidth (Silverman's rule) is used for both curves.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["segment", "grid", "density_source", "density_synthetic"])
    for j, lab in enumerate(labels):
        s, y = source[:, j], synthetic[:, j]
        bw = silverman_bandwidth(s)
        lo = min(s.min(), y.min()) - 4 * bw
        hi = max(s.max(), y.max()) + 4 * bw
        grid = np.linspace(lo, hi, points)
        ds, dy = kde(s, bw, grid), kde(y, bw, grid)
        for g, a, b in zip(grid, ds, dy):
            w.writerow([lab, fmt_float(g), fmt_float(a), fmt_float(b)])
    return buf.getvalue()
