"""Random variates from the Pearson system, given mean, std, skewness and kurtosis.

The type is chosen on the (skewness^2, kurtosis) plane.  Each type is sampled
in standardized form (mean 0, variance 1) and then rescaled.  Kurtosis is
the non-excess fourth standardized moment, so a normal has kurtosis 3.

  * below the gamma line (I, II): scaled beta
  * on the gamma line (III): shifted gamma
  * symmetric with kurtosis 3: normal; above 3 (VII): Student t
  * otherwise the root structure of the Pearson quadratic decides between
    IV (complex roots), V (double root) and VI (two real roots).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleMoments

_SYM_TOL = 1e-12
_LINE_TOL = 1e-12
_TYPE4_GRID = 4097
_TYPE4_SPAN = 60.0


@dataclass(frozen=True)
class MomentSpec:
    mean: float
    std: float
    skewness: float
    kurtosis: float

    def __post_init__(self):
        if not (self.std > 0 and math.isfinite(self.std)):
            raise InfeasibleMoments(f"std must be positive, got {self.std}")
        if not self.kurtosis > 1.0 + self.skewness**2:
            raise InfeasibleMoments(
                f"kurtosis {self.kurtosis} must exceed 1 + skewness^2 = {1.0 + self.skewness ** 2}"
            )

    @property
    def beta1(self) -> float:
        return self.skewness**2

    @property
    def beta2(self) -> float:
        return self.kurtosis


def pearson_type(spec: MomentSpec) -> str:
    """Roman numeral of the Pearson type for ``spec`` ("0" for the normal)."""
    return _plan(spec.skewness, spec.kurtosis)[0]


def pearson_kappa(skewness: float, kurtosis: float) -> float:
    b1, b2 = skewness**2, kurtosis
    den = 4.0 * (4 * b2 - 3 * b1) * (2 * b2 - 3 * b1 - 6)
    if den == 0:
        return math.inf if b1 > 0 else 0.0
    return b1 * (b2 + 3) ** 2 / den


def _plan(g: float, b2: float):
    b1 = g * g
    line = 2 * b2 - 3 * b1 - 6
    if abs(g) < _SYM_TOL:
        if abs(b2 - 3.0) < _LINE_TOL:
            return ("0", None)
        if b2 < 3.0:
            return ("II", _beta_params(0.0, b2))
        nu = 4.0 + 6.0 / (b2 - 3.0)
        return ("VII", nu)
    if line < -_LINE_TOL:
        return ("I", _beta_params(g, b2))
    if abs(line) <= _LINE_TOL:
        return ("III", 4.0 / b1)
    d = 10 * b2 - 12 * b1 - 18
    c0 = (4 * b2 - 3 * b1) / d
    c1 = g * (b2 + 3) / d
    c2 = line / d
    disc = c1 * c1 - 4 * c0 * c2
    scale = c1 * c1 + abs(4 * c0 * c2)
    if abs(disc) <= 1e-14 * scale:
        return ("V", (c0, c1, c2))
    if disc < 0:
        return ("IV", (c0, c1, c2))
    return ("VI", (c0, c1, c2))


def _beta_params(g: float, b2: float) -> tuple[float, float]:
    b1 = g * g
    r = 6.0 * (b2 - b1 - 1.0) / (6.0 + 3.0 * b1 - 2.0 * b2)
    root = (r + 2.0) * g / math.sqrt((r + 2.0) ** 2 * b1 + 16.0 * (r + 1.0))
    return 0.5 * r * (1.0 - root), 0.5 * r * (1.0 + root)


def _sample_beta(params, n, rng):
    a, b = params
    s = a + b
    var = a * b / (s * s * (s + 1.0))
    x = rng.beta(a, b, size=n)
    return (x - a / s) / math.sqrt(var)


def _sample_gamma_line(shape, g, n, rng):
    x = (rng.gamma(shape, size=n) - shape) / math.sqrt(shape)
    return x if g > 0 else -x


def _sample_type6(coef, n, rng):
    c0, c1, c2 = coef
    sq = math.sqrt(c1 * c1 - 4 * c0 * c2)
    r1 = (-c1 + sq) / (2 * c2)
    r2 = (-c1 - sq) / (2 * c2)
    # both roots share a sign; the support starts at the one nearer the mean (0)
    near, far = (r1, r2) if abs(r1) < abs(r2) else (r2, r1)
    # density ~ |z - near|^e_near |z - far|^e_far from partial fractions
    e_near = -(near + c1) / (c2 * (near - far))
    e_far = -(far + c1) / (c2 * (far - near))
    alpha = e_near + 1.0
    beta = -e_far - alpha
    w = rng.gamma(alpha, size=n) / rng.gamma(beta, size=n)
    return near + (near - far) * w


def _sample_type5(coef, n, rng):
    c0, c1, c2 = coef
    root = -c1 / (2 * c2)
    shape = 1.0 / c2 - 1.0
    scale = abs((root + c1) / c2)
    v = scale / rng.gamma(shape, size=n)
    return root + v if c1 > 0 else root - v


def _type4_phi_sampler(m2: float, nu: float):
    """Inverse-CDF table for phi in (0, pi) with log density m2*log(sin phi) - nu*phi.

    Requires nu >= 0, so the mode sits in (0, pi/2].  ``m2`` is 2m - 2 > 0.
    """
    mode = math.atan2(m2, nu)

    def h(phi):
        return m2 * np.log(np.sin(phi)) - nu * phi

    top = float(h(mode))
    target = top - _TYPE4_SPAN
    # left end: bisection on log(phi) inside (0, mode)
    lo, hi = math.log(mode) - 50.0, math.log(mode)
    if h(math.exp(lo)) > target:
        left = math.exp(lo)
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if h(math.exp(mid)) > target:
                hi = mid
            else:
                lo = mid
        left = math.exp(lo)
    lo, hi = mode, math.pi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) > target:
            lo = mid
        else:
            hi = mid
    right = hi
    grid = np.linspace(left, right, _TYPE4_GRID)
    dens = np.exp(h(grid) - top)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    cdf /= cdf[-1]
    return grid, cdf


def _sample_type4(coef, n, rng):
    c0, c1, c2 = coef
    m = 1.0 / (2.0 * c2)
    lam = -c1 / (2.0 * c2)
    cc = math.sqrt(c0 / c2 - lam * lam)
    e = c1 - c1 / (2.0 * c2)
    nu = e / (c2 * cc)
    sign = 1.0
    if nu < 0:
        nu, sign = -nu, -1.0
    grid, cdf = _type4_phi_sampler(2.0 * m - 2.0, nu)
    phi = np.interp(rng.random(n), cdf, grid)
    # theta = phi - pi/2, so tan(theta) = -1/tan(phi)
    u = -cc / np.tan(phi)
    return lam + sign * u


def standardized_sample(skewness: float, kurtosis: float, n: int, rng: np.random.Generator) -> np.ndarray:
    kind, params = _plan(skewness, kurtosis)
    if kind == "0":
        return rng.standard_normal(n)
    if kind in ("I", "II"):
        return _sample_beta(params, n, rng)
    if kind == "III":
        return _sample_gamma_line(params, skewness, n, rng)
    if kind == "VII":
        nu = params
        return rng.standard_t(nu, size=n) * math.sqrt((nu - 2.0) / nu)
    if kind == "IV":
        return _sample_type4(params, n, rng)
    if kind == "V":
        return _sample_type5(params, n, rng)
    return _sample_type6(params, n, rng)


def pearson_sample(spec: MomentSpec, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """``n`` draws from the Pearson distribution matching ``spec``'s four moments."""
    if rng is None:
        rng = np.random.default_rng()
    if n < 0:
        raise ValueError("n must be non-negative")
    z = standardized_sample(spec.skewness, spec.kurtosis, n, rng)
    return spec.mean + spec.std * z


def sample_moments(x: np.ndarray) -> tuple[float, float, float, float]:
    """Mean, std, skewness and (non-excess) kurtosis, all population-style."""
    x = np.asarray(x, dtype=float)
    mu = x.mean()
    d = x - mu
    m2 = np.mean(d * d)
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    return float(mu), float(math.sqrt(m2)), float(m3 / m2**1.5), float(m4 / m2**2)
