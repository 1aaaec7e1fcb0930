"""Duration distributions: parameter container, likelihood and percentile fits.

Conventions (scipy's shape/loc/scale layout):

* ``normal``: ``loc`` = mean, ``scale`` = standard deviation, no shape.
* ``lognormal``: ``shape`` = sigma of the log, ``scale`` = exp(mu of the log),
  ``loc`` = shift. ``FittedDistribution.lognormal(mu_log, sigma_log)`` builds
  one from the log-space parameters.
* ``gamma``: ``shape`` = k; ``weibull``: ``shape`` = c (both with shift ``loc``).
* ``point``: a degenerate duration at ``loc`` (``scale`` 0); used when data
  have no spread or a time is treated as exactly known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

__all__ = ["FAMILIES", "FittedDistribution", "DegenerateDataError", "NoSolutionError", "fit_mle",
           "fit_percentiles", "distribution_from_spec"]

FAMILIES = ("gamma", "weibull", "lognormal", "normal")
_SHAPED = ("gamma", "weibull", "lognormal")

# bracket for the fixed-loc shape solvers; fits pinned at either end signal
# the family cannot describe the data
SHAPE_RANGE = (1e-4, 1e8)


class DegenerateDataError(ValueError):
    pass


class NoSolutionError(ValueError):
    pass


@dataclass(frozen=True)
class FittedDistribution:
    family: str
    shape: float | None
    loc: float
    scale: float
    method: str = "given"
    loglik: float | None = None
    n: int | None = None

    def __post_init__(self):
        for name in ("loc", "scale") + (("shape",) if self.shape is not None else ()):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.family == "point":
            if not math.isfinite(self.loc):
                raise ValueError("point mass location must be finite")
            return
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"{self.family}: scale must be positive and finite")
        if not math.isfinite(self.loc):
            raise ValueError(f"{self.family}: loc must be finite")
        if self.family in _SHAPED:
            if self.shape is None or not (self.shape > 0 and math.isfinite(self.shape)):
                raise ValueError(f"{self.family}: shape must be positive and finite")
        elif self.shape is not None:
            raise ValueError("normal distribution takes no shape")

    # -- constructors
    @classmethod
    def normal(cls, mean, sd, method="given"):
        return cls("normal", None, float(mean), float(sd), method)

    @classmethod
    def lognormal(cls, mu_log, sigma_log, loc=0.0, method="given"):
        return cls("lognormal", float(sigma_log), float(loc), math.exp(mu_log), method)

    @classmethod
    def point(cls, value):
        return cls("point", None, float(value), 0.0, "point")

    @property
    def is_point(self) -> bool:
        return self.family == "point"

    @property
    def mu_log(self) -> float:
        if self.family != "lognormal":
            raise AttributeError("mu_log only defined for lognormal")
        return math.log(self.scale)

    def frozen(self):
        f = self.family
        if f == "normal":
            return stats.norm(self.loc, self.scale)
        if f == "lognormal":
            return stats.lognorm(self.shape, self.loc, self.scale)
        if f == "gamma":
            return stats.gamma(self.shape, self.loc, self.scale)
        if f == "weibull":
            return stats.weibull_min(self.shape, self.loc, self.scale)
        raise ValueError("point mass has no continuous representation")

    def cdf(self, x):
        if self.is_point:
            return np.where(np.asarray(x) >= self.loc, 1.0, 0.0)
        return self.frozen().cdf(x)

    def sf(self, x):
        if self.is_point:
            return np.where(np.asarray(x) >= self.loc, 0.0, 1.0)
        return self.frozen().sf(x)

    def pdf(self, x):
        return self.frozen().pdf(x)

    def ppf(self, q):
        if self.is_point:
            return np.full_like(np.asarray(q, dtype=float), self.loc)
        return self.frozen().ppf(q)

    def rvs(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.is_point:
            return np.full(n, self.loc)
        return self.frozen().rvs(size=n, random_state=rng)

    def mean(self) -> float:
        return self.loc if self.is_point else float(self.frozen().mean())

    def params(self) -> dict:
        d = {"family": self.family, "loc": self.loc, "scale": self.scale}
        if self.shape is not None:
            d["shape"] = self.shape
        if self.family == "lognormal":
            d["mu_log"] = self.mu_log
            d["sigma_log"] = self.shape
        return d

    def to_dict(self) -> dict:
        d = self.params()
        d["method"] = self.method
        if self.loglik is not None:
            d["loglik"] = self.loglik
        return d

    def to_spec(self) -> dict:
        """Mapping that ``distribution_from_spec`` turns back into ``self``."""
        if self.is_point:
            return {"family": "point", "value": self.loc}
        d = {"family": self.family, "loc": self.loc, "scale": self.scale}
        if self.shape is not None:
            d["shape"] = self.shape
        return d

    def describe(self) -> str:
        if self.family == "normal":
            return f"Normal ({self.loc:.3f},{self.scale:.3f}^2)"
        if self.is_point:
            return f"Point ({self.loc:.3f})"
        return f"{self.family.capitalize()} (shape={self.shape:.3f}, loc={self.loc:.3f}, scale={self.scale:.3f})"


# ------------------------------------------------------------------ MLE fits

def _check_sample(data) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 3:
        raise ValueError("need at least 3 observations")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("durations must be finite and positive")
    if np.ptp(x) == 0:
        raise DegenerateDataError(
            "data have zero variance; represent them with FittedDistribution.point(value)")
    return x


def _lognormal_fixed(y):
    ly = np.log(y)
    return float(ly.std()), float(np.exp(ly.mean()))


def _gamma_fixed(y):
    # profile equation ln k - digamma(k) = ln(mean y) - mean(ln y)
    s = math.log(y.mean()) - float(np.log(y).mean())
    lo, hi = SHAPE_RANGE
    f = lambda lk: lk - special.digamma(math.exp(lk)) - s
    if s <= 0 or f(math.log(hi)) > 0:
        k = hi
    elif f(math.log(lo)) < 0:
        k = lo
    else:
        k = math.exp(optimize.brentq(f, math.log(lo), math.log(hi), xtol=1e-13))
    return k, float(y.mean() / k)


def _weibull_fixed(y):
    # profile equation sum(y^c ln y)/sum(y^c) - 1/c - mean(ln y) = 0, increasing in c
    ly = np.log(y)
    mly = ly.mean()

    def f(lc):
        c = math.exp(lc)
        w = c * ly
        w = np.exp(w - w.max())
        return float(np.dot(w, ly) / w.sum()) - 1.0 / c - mly

    lo, hi = math.log(SHAPE_RANGE[0]), math.log(SHAPE_RANGE[1])
    if f(hi) < 0:
        c = SHAPE_RANGE[1]
    elif f(lo) > 0:
        c = SHAPE_RANGE[0]
    else:
        c = math.exp(optimize.brentq(f, lo, hi, xtol=1e-13))
    # scale = (mean y^c)^(1/c), evaluated in logs
    lam = math.exp((special.logsumexp(c * ly) - math.log(y.size)) / c)
    return c, lam


_FIXED = {"lognormal": _lognormal_fixed, "gamma": _gamma_fixed, "weibull": _weibull_fixed}


def _fit_fixed_loc(x, family, loc):
    shape, scale = _FIXED[family](x - loc)
    d = FittedDistribution(family, shape, float(loc), scale, "mle")
    return d, float(np.sum(d.frozen().logpdf(x)))


def fit_mle(data, family: str, *, gap_range=(1e-4, 1e4), grid: int = 49) -> FittedDistribution:
    """Maximum-likelihood fit of one family to positive durations.

    ``normal`` uses the closed form (sample mean, population standard
    deviation). Shifted families maximise the profile likelihood over the
    location ``loc = min(x) - g`` with the gap ``g`` searched on a log grid
    spanning ``gap_range`` times the data range, then refined with a bounded
    scalar search. For a fixed loc, shape and scale come from the exact
    one-dimensional score equations.
    """
    x = _check_sample(data)
    if family == "normal":
        mu, sd = float(x.mean()), float(x.std())
        d = FittedDistribution("normal", None, mu, sd, "mle")
        return FittedDistribution("normal", None, mu, sd, "mle",
                                  float(np.sum(d.frozen().logpdf(x))), x.size)
    if family not in _SHAPED:
        raise ValueError(f"unknown family {family!r}")
    xmin, span = float(x.min()), float(np.ptp(x))
    lg = np.linspace(math.log(gap_range[0] * span), math.log(gap_range[1] * span), grid)

    def negll(lgap):
        try:
            return -_fit_fixed_loc(x, family, xmin - math.exp(lgap))[1]
        except (ValueError, FloatingPointError):
            return math.inf

    vals = np.array([negll(v) for v in lg])
    i = int(np.argmin(vals))
    a, b = lg[max(i - 1, 0)], lg[min(i + 1, grid - 1)]
    best = lg[i]
    if a < b:
        r = optimize.minimize_scalar(negll, bounds=(a, b), method="bounded",
                                     options={"xatol": 1e-10})
        if r.fun < vals[i]:
            best = float(r.x)
    d, ll = _fit_fixed_loc(x, family, xmin - math.exp(best))
    return FittedDistribution(family, d.shape, d.loc, d.scale, "mle", ll, x.size)


# ----------------------------------------------------------- percentile fits

def fit_percentiles(family: str, lower, upper) -> FittedDistribution:
    """Two-parameter member of ``family`` through two quantiles.

    ``lower = (p_lo, q_lo)`` and ``upper = (p_hi, q_hi)``. Shifted families
    use ``loc = 0``. Normal, lognormal and Weibull have closed forms; gamma
    solves for the shape whose quantile ratio matches ``q_hi / q_lo``.
    """
    (p1, q1), (p2, q2) = lower, upper
    if not (0 < p1 < p2 < 1):
        raise ValueError("need 0 < p_lo < p_hi < 1")
    if not q1 < q2:
        raise ValueError("need q_lo < q_hi")
    if family == "normal":
        z1, z2 = special.ndtri(p1), special.ndtri(p2)
        sd = (q2 - q1) / (z2 - z1)
        return FittedDistribution("normal", None, q1 - sd * z1, sd, "percentile")
    if q1 <= 0:
        raise NoSolutionError(f"{family} with loc=0 needs positive quantiles")
    if family == "lognormal":
        z1, z2 = special.ndtri(p1), special.ndtri(p2)
        s = (math.log(q2) - math.log(q1)) / (z2 - z1)
        return FittedDistribution("lognormal", s, 0.0, math.exp(math.log(q1) - s * z1), "percentile")
    if family == "weibull":
        # ln(-ln(1-p)) = c (ln q - ln lam)
        w1, w2 = math.log(-math.log1p(-p1)), math.log(-math.log1p(-p2))
        c = (w2 - w1) / (math.log(q2) - math.log(q1))
        return FittedDistribution("weibull", c, 0.0, math.exp(math.log(q1) - w1 / c), "percentile")
    if family == "gamma":
        target = math.log(q2) - math.log(q1)

        def g(la):
            a = math.exp(la)
            return math.log(special.gammaincinv(a, p2)) - math.log(special.gammaincinv(a, p1)) - target

        lo, hi = math.log(1e-2), math.log(1e10)
        try:
            glo, ghi = g(lo), g(hi)
        except (ValueError, OverflowError):
            raise NoSolutionError("gamma quantile ratio not computable") from None
        if not (glo > 0 > ghi):
            raise NoSolutionError(f"quantile ratio {q2 / q1:g} outside the gamma family's range")
        a = math.exp(optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        return FittedDistribution("gamma", a, 0.0, q1 / special.gammaincinv(a, p1), "percentile")
    raise ValueError(f"unknown family {family!r}")


def distribution_from_spec(spec: dict) -> FittedDistribution:
    """Build a distribution from a config mapping.

    Accepted forms (``family`` always required)::

        {family: lognormal, mu_log: 3.5, sigma_log: 0.5[, loc: 0]}
        {family: lognormal, shape: 1.05, loc: 5.458, scale: 0.017}
        {family: normal, mean: 5.484, sd: 0.019}
        {family: gamma|weibull|normal, shape:, loc:, scale:}
        {family: <any>, percentiles: [[p_lo, q_lo], [p_hi, q_hi]]}
        {family: point, value: 10.0}
    """
    fam = spec.get("family")
    if fam is None:
        raise ValueError("distribution spec needs a 'family'")
    keys = set(spec) - {"family"}
    if fam == "point":
        return FittedDistribution.point(spec["value"])
    if "percentiles" in spec:
        lo, hi = spec["percentiles"]
        return fit_percentiles(fam, tuple(lo), tuple(hi))
    if fam == "lognormal" and {"mu_log", "sigma_log"} <= keys:
        return FittedDistribution.lognormal(spec["mu_log"], spec["sigma_log"], spec.get("loc", 0.0))
    if fam == "normal" and {"mean", "sd"} <= keys:
        return FittedDistribution.normal(spec["mean"], spec["sd"])
    if {"loc", "scale"} <= keys:
        return FittedDistribution(fam, spec.get("shape"), float(spec["loc"]), float(spec["scale"]))
    raise ValueError(f"cannot build a {fam} distribution from keys {sorted(keys)}")
