"""Uniform sampling of pool vectors and the resulting Gram matrices."""

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from loguru import logger

from mubspectra.mubs import MubFamily
from mubspectra.utils import mix_seed

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class SampleSpec:
    """Dimensions of one experiment: p rows drawn from m bases of C^n."""

    n: int
    m: int
    p: int
    y: float
    seed: int
    trials: int

    def __post_init__(self):
        if not 1 <= self.p < self.n:
            raise ValueError(f"Need 1 <= p < n, got p={self.p}, n={self.n}")
        if self.trials < 1:
            raise ValueError(f"Need at least one trial, got {self.trials}")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError(f"Seed must fit in 64 unsigned bits, got {self.seed}")
        if self.below_sqrt_bound:
            logger.warning(
                "m={} < sqrt(n)={:.3f}: outside the m >= sqrt(n) hypothesis",
                self.m,
                math.sqrt(self.n),
            )

    @classmethod
    def from_ratio(
        cls, n: int, m: int, y: float, seed: int = 0, trials: int = 1
    ) -> "SampleSpec":
        if not 0 < y < 1:
            raise ValueError(f"Aspect ratio y must lie in (0, 1), got {y}")
        return cls(n=n, m=m, p=round(y * n), y=y, seed=seed, trials=trials)

    @property
    def below_sqrt_bound(self) -> bool:
        return self.m * self.m < self.n


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """The p×n matrix whose rows are the drawn pool vectors."""

    rows: np.ndarray
    provenance: tuple[tuple[int, int], ...]  # (basis index, vector index) per row
    seed: int | None = None

    @property
    def p(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    def metadata(self, m: int, y: float | None = None) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "n": self.n,
            "m": m,
            "p": self.p,
            "y": self.p / self.n if y is None else y,
            "provenance": [list(pair) for pair in self.provenance],
        }


@dataclass(frozen=True, eq=False)
class GramMatrix:
    matrix: np.ndarray

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    def hermitian_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())


def keyed_stream(key: int) -> np.random.Generator:
    """Counter-based Philox4x64 generator keyed by a 64-bit word."""
    return np.random.Generator(np.random.Philox(key=key))


def substream(seed: int, index: int) -> np.random.Generator:
    return keyed_stream(mix_seed(seed, index))


def replay_trial(fam: MubFamily, p: int, trial_seed: int) -> SampleMatrix:
    """Redraw a trial from the per-trial seed recorded in a run report."""
    return draw_sample(fam, p, keyed_stream(trial_seed), seed=trial_seed)


def draw_sample(
    fam: MubFamily, p: int, rng: np.random.Generator, seed: int | None = None
) -> SampleMatrix:
    """Pick p pool vectors independently and uniformly, with replacement."""
    if p < 1:
        raise ValueError(f"Need at least one row, got p={p}")
    indices = rng.integers(0, fam.pool_size, size=p)
    rows = fam.pool[indices].copy()
    rows.setflags(write=False)
    provenance = tuple(fam.locate(int(i)) for i in indices)
    return SampleMatrix(rows=rows, provenance=provenance, seed=seed)


def draw_trial(fam: MubFamily, p: int, seed: int, trial: int) -> SampleMatrix:
    """Trial `trial` of a run, replayable on its own from (seed, trial)."""
    return draw_sample(fam, p, substream(seed, trial), seed=mix_seed(seed, trial))


def gram(phi: SampleMatrix) -> GramMatrix:
    return GramMatrix(phi.rows @ phi.rows.conj().T)


def _real_trace(power: np.ndarray, p: int) -> float:
    value = complex(np.trace(power)) / p
    if abs(value.imag) > HERMITIAN_TOL * max(1.0, abs(value.real)):
        raise ValueError(f"Trace has imaginary part {value.imag:.3g}; not Hermitian")
    return value.real


def trace_moments(g: GramMatrix, lmax: int) -> list[float]:
    """[A_1, ..., A_lmax] with A_l = Tr(G^l) / p."""
    if lmax < 1:
        raise ValueError(f"Moment order must be positive, got {lmax}")
    if g.hermitian_defect() > HERMITIAN_TOL:
        raise ValueError("Gram matrix is not Hermitian")
    moments = []
    power = g.matrix
    for ell in range(1, lmax + 1):
        if ell > 1:
            power = power @ g.matrix
        moments.append(_real_trace(power, g.p))
    return moments


def trace_moment(g: GramMatrix, ell: int) -> float:
    return trace_moments(g, ell)[-1]
