"""Exact small-instance oracles for path products and trace moments.

W_γ averages the path product ω_γ(s) over every assignment of pool vectors
to the vertices of γ. Summing over assignments is an einsum over the pool
Gram matrix with one index per vertex and one factor per step.
"""

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from mubspectra.mubs import MubFamily, inner
from mubspectra.paths import (
    ClosedPath,
    enumerate_path_pairs,
    enumerate_paths,
    in_gamma,
)

W_COST_CAP = 10**7
EXHAUSTIVE_COST_CAP = 10**6
MAX_EXACT_MOMENT = 6
MAX_EXACT_VARIANCE = 3
IMAG_TOL = 1e-10
AGREEMENT_TOL = 1e-10
CHUNK = 1 << 15


class CostGuardError(ValueError):
    """A brute-force oracle would exceed its assignment cap."""


def _guard(pool_size: int, vertices: int, cap: int) -> None:
    cost = pool_size**vertices
    if cost > cap:
        raise CostGuardError(
            f"(mn)^v = {pool_size}^{vertices} = {cost} exceeds the cap {cap}"
        )


@dataclass(frozen=True)
class PathAssignment:
    """Vertex label -> (basis index, vector index) of the pool vector it gets."""

    vectors: Mapping[int, tuple[int, int]]

    def __getitem__(self, label: int) -> tuple[int, int]:
        try:
            return self.vectors[label]
        except KeyError:
            raise ValueError(f"Vertex {label} has no assigned vector") from None


def random_assignment(
    path: ClosedPath, m: int, n: int, rng: np.random.Generator
) -> PathAssignment:
    labels = sorted(path.vertices)
    picks = rng.integers(0, m * n, size=len(labels))
    return PathAssignment(
        {label: divmod(int(i), n) for label, i in zip(labels, picks)}
    )


def omega(path: ClosedPath, s: PathAssignment, fam: MubFamily) -> complex:
    """Product of <s(γ(i)), s(γ(i+1))> along the path."""
    product = 1.0 + 0.0j
    for a, b in path.steps():
        (ka, ja), (kb, jb) = s[a], s[b]
        product *= inner(fam.bases[ka, ja], fam.bases[kb, jb])
    return product


def assignment_stats(path: ClosedPath, s: PathAssignment) -> tuple[int, int]:
    """(N, C): distinct vectors used, and steps whose endpoints differ."""
    distinct = len({s[label] for label in path.vertices})
    crossings = sum(s[a] != s[b] for a, b in path.steps())
    return distinct, crossings


class PathClass(Enum):
    GAMMA_MEMBER = "gamma"
    NON_MEMBER = "non_member"


@dataclass(frozen=True)
class WValue:
    """W_γ with the value predicted (Γ members) or the bound (others)."""

    value: complex
    path_class: PathClass
    n: int
    m: int
    vertex_count: int

    @property
    def scale(self) -> float:
        return float(self.n) ** (1 - self.vertex_count)

    @property
    def predicted(self) -> float | None:
        return self.scale if self.path_class is PathClass.GAMMA_MEMBER else None

    @property
    def bound(self) -> float | None:
        if self.path_class is PathClass.GAMMA_MEMBER:
            return None
        return self.scale * (1 / self.m + 1 / self.n)

    @property
    def observed_constant(self) -> float | None:
        """|W| / (n^{1-v}(1/m + 1/n)) for non-members."""
        bound = self.bound
        return None if bound is None else abs(self.value) / bound

    def within(self, constant: float = 4.0, tol: float = 1e-10) -> bool:
        if self.path_class is PathClass.GAMMA_MEMBER:
            return abs(self.value - self.scale) <= tol
        return abs(self.value) <= constant * self.bound


def _assignment_average(
    factors: Sequence[tuple[int, int]], gram: np.ndarray, cap: int = W_COST_CAP
) -> complex:
    """Mean over all vertex assignments of Π gram[s(a), s(b)] over factors."""
    labels = sorted({label for pair in factors for label in pair})
    _guard(gram.shape[0], len(labels), cap)
    letters = {label: chr(ord("a") + i) for i, label in enumerate(labels)}
    diagonal = np.ascontiguousarray(gram.diagonal())

    terms, operands = [], []
    for a, b in factors:
        if a == b:
            terms.append(letters[a])
            operands.append(diagonal)
        else:
            terms.append(letters[a] + letters[b])
            operands.append(gram)
    total = np.einsum(",".join(terms) + "->", *operands, optimize="greedy")
    return complex(total) / float(gram.shape[0]) ** len(labels)


def w_exact(path: ClosedPath, fam: MubFamily) -> WValue:
    value = _assignment_average(path.steps(), fam.pool_gram)
    member = in_gamma(path.canonical())
    return WValue(
        value=value,
        path_class=PathClass.GAMMA_MEMBER if member else PathClass.NON_MEMBER,
        n=fam.n,
        m=fam.m,
        vertex_count=path.vertex_count,
    )


def w_pair_exact(path1: ClosedPath, path2: ClosedPath, fam: MubFamily) -> complex:
    """E[ω_γ1(s)·conj(ω_γ2(s))] over assignments of the union of vertices.

    conj(<u, v>) = <v, u>, so the conjugated path contributes reversed steps.
    """
    factors = path1.steps() + [(b, a) for a, b in path2.steps()]
    return _assignment_average(factors, fam.pool_gram)


def exhaustive_moments(
    ell: int, p: int, fam: MubFamily, cap: int = EXHAUSTIVE_COST_CAP
) -> tuple[float, float]:
    """Mean and variance of A_ell over every one of the (mn)^p sample maps."""
    if ell < 1 or p < 1:
        raise ValueError(f"Need ell >= 1 and p >= 1, got ell={ell}, p={p}")
    _guard(fam.pool_size, p, cap)
    pool_gram = fam.pool_gram
    maps = itertools.product(range(fam.pool_size), repeat=p)
    total = 0.0
    total_sq = 0.0
    count = 0
    while chunk := list(itertools.islice(maps, CHUNK)):
        idx = np.array(chunk)
        g = pool_gram[idx[:, :, None], idx[:, None, :]]
        power = g
        for _ in range(ell - 1):
            power = power @ g
        traces = np.trace(power, axis1=1, axis2=2) / p
        if np.abs(traces.imag).max() > IMAG_TOL:
            raise ValueError("Trace moments picked up an imaginary part")
        total += float(traces.real.sum())
        total_sq += float((traces.real**2).sum())
        count += len(chunk)
    mean = total / count
    return mean, max(0.0, total_sq / count - mean * mean)


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > IMAG_TOL:
        raise ValueError(f"{what} has imaginary part {value.imag:.3g}")
    return value.real


def expectation_exact(ell: int, p: int, fam: MubFamily) -> float:
    """E(A_ell) as the orbit-weighted sum of W over canonical paths."""
    if not 1 <= ell <= MAX_EXACT_MOMENT:
        raise ValueError(f"Exact moments need 1 <= ell <= {MAX_EXACT_MOMENT}")
    total = 0.0j
    for path in enumerate_paths(ell):
        multiplicity = math.perm(p, path.vertex_count)
        if multiplicity:
            total += multiplicity * w_exact(path, fam).value
    return _real(total / p, "E(A_ell)")


def variance_exact(ell: int, p: int, fam: MubFamily) -> float:
    """Var(A_ell) from the pair-class sum, cross-checked by exhaustion."""
    if not 1 <= ell <= MAX_EXACT_VARIANCE:
        raise ValueError(f"Exact variance needs 1 <= ell <= {MAX_EXACT_VARIANCE}")
    _guard(fam.pool_size, p, EXHAUSTIVE_COST_CAP)

    single: dict[ClosedPath, complex] = {}

    def w_single(path: ClosedPath) -> complex:
        if path not in single:
            single[path] = _assignment_average(path.steps(), fam.pool_gram)
        return single[path]

    total = 0.0j
    for path1, path2 in enumerate_path_pairs(ell, ell):
        multiplicity = math.perm(p, len(path1.vertices | path2.vertices))
        if not multiplicity:
            continue
        covariance = w_pair_exact(path1, path2, fam) - w_single(path1) * np.conj(
            w_single(path2)
        )
        total += multiplicity * covariance
    paired = _real(total / (p * p), "Var(A_ell)")

    _, direct = exhaustive_moments(ell, p, fam)
    if abs(paired - direct) > AGREEMENT_TOL:
        raise ValueError(
            f"Pair-class variance {paired!r} disagrees with exhaustion {direct!r}"
        )
    return paired
