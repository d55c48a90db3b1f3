"""The Marchenko-Pastur law and empirical spectral distributions."""

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
import scipy.integrate
import scipy.optimize
from loguru import logger

from mubspectra.eigen import Spectrum

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
KS_GRID_POINTS = 2000


@dataclass(frozen=True)
class MPParams:
    """Marchenko-Pastur law with ratio y, supported on [a, b]."""

    y: float

    def __post_init__(self):
        if not 0 < self.y < 1:
            raise ValueError(f"Ratio y must lie in (0, 1), got {self.y}")

    @property
    def a(self) -> float:
        return (1 - math.sqrt(self.y)) ** 2

    @property
    def b(self) -> float:
        return (1 + math.sqrt(self.y)) ** 2


def mp_pdf(params: MPParams, x: float) -> float:
    a, b = params.a, params.b
    if x <= a or x >= b:
        return 0.0
    return math.sqrt((b - x) * (x - a)) / (2 * math.pi * x * params.y)


def _theta_integrand(params: MPParams, power: int):
    # x = a + (b - a)·sin²θ turns pdf(x)dx into a smooth function of θ
    a, b, y = params.a, params.b, params.y
    width = b - a

    def integrand(theta: float) -> float:
        s2 = math.sin(theta) ** 2
        x = a + width * s2
        return x**power * width**2 * s2 * (1 - s2) / (math.pi * x * y)

    return integrand


def _theta_of(params: MPParams, x: float) -> float:
    ratio = (x - params.a) / (params.b - params.a)
    return math.asin(math.sqrt(min(1.0, max(0.0, ratio))))


def _quad(func, lo: float, hi: float) -> float:
    value, _ = scipy.integrate.quad(
        func, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200
    )
    return value


def mp_cdf(params: MPParams, x: float) -> float:
    if x <= params.a:
        return 0.0
    if x >= params.b:
        return 1.0
    return _quad(_theta_integrand(params, 0), 0.0, _theta_of(params, x))


def mp_quadrature_moment(ell: int, y: float) -> float:
    """∫ x^ell dF_MP by quadrature; the oracle for `mp_moment`."""
    return _quad(_theta_integrand(MPParams(y), ell), 0.0, math.pi / 2)


def narayana(ell: int, v: int) -> int:
    """(1/v)·C(ell, v-1)·C(ell-1, v-1)."""
    if not 1 <= v <= ell:
        return 0
    return math.comb(ell, v - 1) * math.comb(ell - 1, v - 1) // v


def mp_moment(ell: int, y: float) -> float:
    """ell-th moment of the law: Narayana polynomial in y."""
    if ell < 1:
        raise ValueError(f"Moment order must be positive, got {ell}")
    return sum(narayana(ell, v) * y ** (v - 1) for v in range(1, ell + 1))


def mp_quantile(params: MPParams, level: float) -> float:
    """x with F_MP(x) = level, by bracketing root-find on the quadrature CDF."""
    if not 0 <= level <= 1:
        raise ValueError(f"Quantile level must lie in [0, 1], got {level}")
    if level == 0:
        return params.a
    if level == 1:
        return params.b
    return scipy.optimize.brentq(
        lambda x: mp_cdf(params, x) - level, params.a, params.b, xtol=1e-14
    )


@dataclass(frozen=True, eq=False)
class ESD:
    """Step CDF putting mass 1/N on each of N (pooled) eigenvalues."""

    values: np.ndarray

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=np.float64))
        if values.size == 0:
            raise ValueError("An ESD needs at least one eigenvalue")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def pooled(cls, spectra: Iterable[Spectrum]) -> "ESD":
        """Trial-averaged ESD; equal-size spectra get equal weight."""
        return cls(np.concatenate([s.values for s in spectra]))

    def __call__(self, x: float | np.ndarray) -> float | np.ndarray:
        return np.searchsorted(self.values, x, side="right") / len(self.values)

    def left_limit(self, x: float | np.ndarray) -> float | np.ndarray:
        return np.searchsorted(self.values, x, side="left") / len(self.values)


def ks_distance(esd: ESD, params: MPParams, grid_points: int = KS_GRID_POINTS) -> float:
    """sup |F - F_MP| over both sides of every jump and a grid on [a-.5, b+.5]."""
    jumps = np.unique(esd.values)
    reference = np.array([mp_cdf(params, float(x)) for x in jumps])
    distance = max(
        float(np.abs(esd(jumps) - reference).max()),
        float(np.abs(esd.left_limit(jumps) - reference).max()),
    )

    grid = np.linspace(params.a - 0.5, params.b + 0.5, grid_points)
    reference = np.array([mp_cdf(params, float(x)) for x in grid])
    return max(distance, float(np.abs(esd(grid) - reference).max()))


class HistogramRow(NamedTuple):
    bin_left: float
    bin_right: float
    empirical_density: float
    mp_density: float


def esd_histogram(esd: ESD, params: MPParams, bins: int) -> list[HistogramRow]:
    """Equal-width bins over [0, b + 0.5]; MP column is the bin-averaged density."""
    if bins < 1:
        raise ValueError(f"Need at least one bin, got {bins}")
    edges = np.linspace(0.0, params.b + 0.5, bins + 1)
    # round-off can push zero eigenvalues just below 0
    counts, _ = np.histogram(np.clip(esd.values, 0.0, None), bins=edges)
    total = len(esd.values)
    dropped = total - int(counts.sum())
    if dropped:
        logger.warning(
            "{} of {} eigenvalues lie above {:.4f} and are left out of the histogram",
            dropped,
            total,
            edges[-1],
        )
    rows = []
    for i, count in enumerate(counts):
        left, right = float(edges[i]), float(edges[i + 1])
        width = right - left
        mass = mp_cdf(params, right) - mp_cdf(params, left)
        rows.append(HistogramRow(left, right, count / (total * width), mass / width))
    return rows
