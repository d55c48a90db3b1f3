"""Closed paths: canonical enumeration, reduction and the double-tree class.

A closed path of length ell is a word (γ(0), ..., γ(ell)) with γ(0) = γ(ell).
Paths are considered up to relabelling; the canonical representative labels
vertices 1, 2, ... in order of first appearance (a restricted growth string).

Reduction works on the cyclic word (γ(0), ..., γ(ell-1)):
  a REPEAT step deletes one of two cyclically consecutive equal labels;
  a SINGLE_VISIT step splices out a vertex visited exactly once.
A path is reduced when it is the single loop (ell = 1), or when every vertex
is visited at least twice and no two cyclic neighbours coincide.
"""

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import cache
from typing import Iterator, Sequence

from mubspectra.marchenko_pastur import narayana

MAX_PATH_LENGTH = 8


def canonicalize(labels: Sequence[int]) -> tuple[int, ...]:
    """Relabel so that new vertices get 1, 2, ... in order of first appearance."""
    mapping: dict[int, int] = {}
    for label in labels:
        if label not in mapping:
            mapping[label] = len(mapping) + 1
    return tuple(mapping[label] for label in labels)


@dataclass(frozen=True, order=True)
class ClosedPath:
    word: tuple[int, ...]

    def __post_init__(self):
        if len(self.word) < 2:
            raise ValueError(f"A closed path needs length >= 1, got {self.word}")
        if self.word[0] != self.word[-1]:
            raise ValueError(f"Path {self.word} does not return to its start")
        if any(label < 1 for label in self.word):
            raise ValueError(f"Labels must be positive integers, got {self.word}")

    @classmethod
    def from_cycle(cls, cycle: Sequence[int]) -> "ClosedPath":
        return cls(tuple(cycle) + (cycle[0],))

    @property
    def length(self) -> int:
        return len(self.word) - 1

    @property
    def cycle(self) -> tuple[int, ...]:
        return self.word[:-1]

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(self.word)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def is_canonical(self) -> bool:
        return canonicalize(self.cycle) == self.cycle

    def canonical(self) -> "ClosedPath":
        return ClosedPath.from_cycle(canonicalize(self.cycle))

    def steps(self) -> list[tuple[int, int]]:
        return list(zip(self.word, self.word[1:]))

    def visits(self) -> Counter:
        """Number of cyclic positions at which each vertex appears."""
        return Counter(self.cycle)

    def rotate(self, shift: int) -> "ClosedPath":
        shift %= self.length
        return ClosedPath.from_cycle(self.cycle[shift:] + self.cycle[:shift])

    def delete(self, position: int) -> "ClosedPath":
        """Drop cyclic position `position`; the result may be non-canonical."""
        if self.length == 1:
            raise ValueError("Cannot shorten the single loop")
        cycle = self.cycle
        return ClosedPath.from_cycle(cycle[:position] + cycle[position + 1 :])

    def is_reduced(self) -> bool:
        if self.length == 1:
            return True
        if self.vertex_count < 2:
            return False
        cycle = self.cycle
        no_repeats = all(
            cycle[i] != cycle[(i + 1) % self.length] for i in range(self.length)
        )
        return no_repeats and min(self.visits().values()) >= 2

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.word)) + ")"


def _check_length(ell: int, cap: int = MAX_PATH_LENGTH) -> None:
    if not 1 <= ell <= cap:
        raise ValueError(f"Path length must lie in 1..{cap}, got {ell}")


def restricted_growth_strings(length: int) -> Iterator[tuple[int, ...]]:
    """All restricted growth strings of a given length, lexicographically."""

    def extend(prefix: list[int], top: int) -> Iterator[tuple[int, ...]]:
        if len(prefix) == length:
            yield tuple(prefix)
            return
        for label in range(1, top + 2):
            prefix.append(label)
            yield from extend(prefix, max(top, label))
            prefix.pop()

    yield from extend([1], 1)


@cache
def enumerate_paths(ell: int) -> tuple[ClosedPath, ...]:
    """One canonical representative per relabelling class (assumes p >= ell)."""
    _check_length(ell)
    return tuple(ClosedPath.from_cycle(s) for s in restricted_growth_strings(ell))


def enumerate_path_pairs(
    ell1: int, ell2: int
) -> Iterator[tuple[ClosedPath, ClosedPath]]:
    """Pairs of paths over a shared label set, up to simultaneous relabelling."""
    _check_length(ell1)
    _check_length(ell2)
    _check_length(ell1 + ell2)
    for s in restricted_growth_strings(ell1 + ell2):
        yield ClosedPath.from_cycle(s[:ell1]), ClosedPath.from_cycle(s[ell1:])


class Case(Enum):
    REPEAT = 1  # consecutive equal labels
    SINGLE_VISIT = 2  # vertex visited once


@dataclass(frozen=True)
class ReductionStep:
    case: Case
    position: int
    result: ClosedPath


@dataclass(frozen=True)
class ReductionTrace:
    path: ClosedPath
    steps: tuple[ReductionStep, ...]
    final: ClosedPath = field(compare=False)

    @property
    def u(self) -> int:
        return sum(step.case is Case.REPEAT for step in self.steps)

    @property
    def w(self) -> int:
        return sum(step.case is Case.SINGLE_VISIT for step in self.steps)

    @property
    def single_loop(self) -> bool:
        return self.final.length == 1


def _next_step(path: ClosedPath, from_end: bool) -> tuple[Case, int] | None:
    cycle = path.cycle
    visits = path.visits()
    positions = range(path.length)
    for u in reversed(positions) if from_end else positions:
        if cycle[u] == cycle[(u + 1) % path.length]:
            return Case.REPEAT, u
        if visits[cycle[u]] == 1:
            return Case.SINGLE_VISIT, u
    return None


def reduce(path: ClosedPath, from_end: bool = False) -> ReductionTrace:
    """Apply REPEAT and SINGLE_VISIT steps until the path is reduced.

    Steps are taken at the smallest applicable position (largest with
    `from_end`).
    """
    steps = []
    current = path
    while current.length > 1:
        step = _next_step(current, from_end)
        if step is None:
            break
        case, position = step
        current = current.delete(position)
        steps.append(ReductionStep(case, position, current))
    assert current.is_reduced(), current
    return ReductionTrace(path=path, steps=tuple(steps), final=current.canonical())


@cache
def in_gamma(path: ClosedPath) -> bool:
    """True iff the path reduces to the single loop (a double tree)."""
    return reduce(path).single_loop


def gamma_count(ell: int, v: int) -> int:
    """Number of double trees of length ell with v vertices."""
    return sum(
        1 for path in enumerate_paths(ell) if path.vertex_count == v and in_gamma(path)
    )


def gamma_table(ell: int) -> list[tuple[int, int, int]]:
    """(v, gamma_count, narayana) for v = 1..ell."""
    return [(v, gamma_count(ell, v), narayana(ell, v)) for v in range(1, ell + 1)]


def catalan(ell: int) -> int:
    return math.comb(2 * ell, ell) // (ell + 1)


@cache
def path_count(ell: int, v: int) -> int:
    """Canonical paths of length ell with v vertices (Stirling numbers, 2nd kind)."""
    if ell == 0:
        return 1 if v == 0 else 0
    if v == 0:
        return 0
    return v * path_count(ell - 1, v) + path_count(ell - 1, v - 1)


def orbit_size(path: ClosedPath, p: int) -> int:
    """Number of labellings of the path with labels from 1..p: p!/(p-v)!."""
    return math.perm(p, path.vertex_count)


def orbit_enumeration(ell: int, p: int) -> Counter:
    """Count every closed path [0..ell] -> [1..p] by its canonical class."""
    _check_length(ell)
    counts: Counter = Counter()
    for cycle in itertools.product(range(1, p + 1), repeat=ell):
        counts[ClosedPath.from_cycle(canonicalize(cycle))] += 1
    return counts


def join(path1: ClosedPath, path2: ClosedPath) -> ClosedPath:
    """Concatenate path1 with path2 reversed, both rotated to a shared vertex.

    path1 and path2 share one label space; the result has length ell1 + ell2
    and visits the union of their vertices.
    """
    common = path1.vertices & path2.vertices
    if not common:
        raise ValueError(f"Paths {path1} and {path2} share no vertex")
    start = min(common)
    first = path1.rotate(path1.cycle.index(start))
    second = path2.rotate(path2.cycle.index(start))
    joined = first.word + tuple(reversed(second.word))[1:]
    return ClosedPath(joined).canonical()
