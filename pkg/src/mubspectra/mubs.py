"""Complete families of mutually unbiased bases for prime-power dimensions."""

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from loguru import logger

from mubspectra.fields import DEFAULT_MAX_ORDER, field_make
from mubspectra.utils import prime_power

DEFAULT_TOL = 1e-10


def inner(u: np.ndarray, v: np.ndarray) -> complex:
    """Hermitian inner product, linear in the first argument."""
    return complex(np.vdot(v, u))


@dataclass(frozen=True, eq=False)
class MubFamily:
    """m orthonormal bases of C^n; `bases[k, j]` is vector j of basis k."""

    bases: np.ndarray

    def __post_init__(self):
        bases = np.array(self.bases, dtype=np.complex128)
        if bases.ndim != 3 or bases.shape[1] != bases.shape[2]:
            raise ValueError(
                f"Expected an (m, n, n) array of basis vectors, got {bases.shape}"
            )
        bases.setflags(write=False)
        object.__setattr__(self, "bases", bases)
        if self.m < 1:
            raise ValueError("A family needs at least one basis")
        if self.m > self.n + 1:
            raise ValueError(
                f"{self.m} bases exceed the n+1 = {self.n + 1} possible in C^{self.n}"
            )

    @property
    def m(self) -> int:
        return self.bases.shape[0]

    @property
    def n(self) -> int:
        return self.bases.shape[1]

    @property
    def pool_size(self) -> int:
        return self.m * self.n

    def subfamily(self, m: int) -> "MubFamily":
        if not 1 <= m <= self.m:
            raise ValueError(f"Cannot take {m} bases from a family of {self.m}")
        return MubFamily(self.bases[:m])

    @cached_property
    def pool(self) -> np.ndarray:
        """All mn pool vectors as rows, basis-major."""
        pool = self.bases.reshape(self.pool_size, self.n)
        pool.setflags(write=False)
        return pool

    @cached_property
    def pool_gram(self) -> np.ndarray:
        """mn×mn matrix of inner products between pool vectors."""
        gram = self.pool @ self.pool.conj().T
        gram.setflags(write=False)
        return gram

    def locate(self, index: int) -> tuple[int, int]:
        """Pool index -> (basis index, vector index)."""
        return divmod(index, self.n)


@dataclass(frozen=True)
class UnbiasedReport:
    within_defect: float
    cross_defect: float
    passed: bool


def construct_complete_mubs(n: int, max_order: int = DEFAULT_MAX_ORDER) -> MubFamily:
    """The n+1 bases of the quadratic-phase construction over GF(n).

    Besides the standard basis, basis a holds the vectors
    v_{a,b}(x) = exp(2πi·tr(a·x² + b·x)/p) / √n for b, x in GF(n).
    n = 2 uses the Pauli eigenbases instead.
    """
    if n == 2:
        r = 1 / math.sqrt(2)
        bases = np.array(
            [
                [[1, 0], [0, 1]],
                [[r, r], [r, -r]],
                [[r, 1j * r], [r, -1j * r]],
            ],
            dtype=np.complex128,
        )
        return MubFamily(bases)

    pk = prime_power(n)
    if pk is None:
        raise ValueError(f"Dimension {n} is not a prime power")
    p, k = pk
    if p == 2:
        raise ValueError(f"Dimension {n} needs characteristic-2 phases (unsupported)")

    ctx = field_make(p, k, max_order=max_order)
    mul, tr = ctx.mul_table, ctx.trace_table
    squares = mul[np.arange(n), np.arange(n)]
    # tr(a·x²) for all (a, x) and tr(b·x) for all (b, x); tr is additive
    quadratic = tr[mul[:, squares]]
    linear = tr[mul]
    phases = (quadratic[:, None, :] + linear[None, :, :]) % p
    vectors = np.exp(2j * np.pi * phases / p) / math.sqrt(n)

    bases = np.concatenate([np.eye(n, dtype=np.complex128)[None], vectors])
    logger.debug("Constructed {} bases of C^{} over GF({}^{})", n + 1, n, p, k)
    return MubFamily(bases)


def verify_unbiased(fam: MubFamily, tol: float = DEFAULT_TOL) -> UnbiasedReport:
    """Check orthonormality within bases and |<u, v>| = 1/√n across bases."""
    target = 1 / math.sqrt(fam.n)
    identity = np.eye(fam.n)
    within = 0.0
    cross = 0.0
    for i in range(fam.m):
        bi = fam.bases[i]
        within = max(within, float(np.abs(bi @ bi.conj().T - identity).max()))
        for j in range(i + 1, fam.m):
            overlaps = np.abs(bi @ fam.bases[j].conj().T)
            cross = max(cross, float(np.abs(overlaps - target).max()))
    return UnbiasedReport(
        within_defect=within,
        cross_defect=cross,
        passed=within <= tol and cross <= tol,
    )


def coherence(fam: MubFamily) -> float:
    """Largest cross-basis overlap; 0 for a single basis."""
    best = 0.0
    for i in range(fam.m):
        for j in range(i + 1, fam.m):
            overlaps = np.abs(fam.bases[i] @ fam.bases[j].conj().T)
            best = max(best, float(overlaps.max()))
    return best


def save_family(fam: MubFamily, path: Path) -> Path:
    payload = {
        "n": fam.n,
        "m": fam.m,
        "bases": [
            [[[float(z.real), float(z.imag)] for z in vec] for vec in basis]
            for basis in fam.bases
        ],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload))
    logger.info("Wrote {} bases of C^{} to {}", fam.m, fam.n, path)
    return path


def load_family(path: Path) -> MubFamily:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ValueError(f"Cannot read basis file {path}: {e}") from e
    try:
        n, m, raw = payload["n"], payload["m"], payload["bases"]
    except (KeyError, TypeError) as e:
        raise ValueError(f"Malformed basis file {path}: missing {e}") from e

    if len(raw) != m:
        raise ValueError(f"Basis file declares m={m} but holds {len(raw)} bases")
    for k, basis in enumerate(raw):
        if len(basis) != n or any(len(vec) != n for vec in basis):
            raise ValueError(f"Basis {k} in {path} does not hold {n} vectors of C^{n}")

    try:
        bases = np.array(
            [[[complex(re, im) for re, im in vec] for vec in basis] for basis in raw],
            dtype=np.complex128,
        )
    except (TypeError, ValueError) as e:
        raise ValueError(f"Basis file {path} holds a non-numeric entry: {e}") from e
    return MubFamily(bases)
