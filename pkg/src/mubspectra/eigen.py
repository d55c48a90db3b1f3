"""Self-contained Hermitian eigensolver.

Householder reflections reduce the matrix to tridiagonal form, a diagonal
phase change makes that tridiagonal matrix real symmetric, and implicit QL
iterations with Wilkinson-type shifts diagonalize it.
"""

import math
from dataclasses import dataclass

import numpy as np

from mubspectra.sampling import GramMatrix

EPS = float(np.finfo(np.float64).eps)
HERMITIAN_TOL = 1e-10
MAX_SWEEPS = 50


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues in ascending order."""

    values: np.ndarray

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=np.float64))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def moment(self, ell: int) -> float:
        return float(np.mean(self.values**ell))


def _as_array(g: GramMatrix | np.ndarray) -> np.ndarray:
    matrix = g.matrix if isinstance(g, GramMatrix) else np.asarray(g)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {matrix.shape}")
    defect = float(np.abs(matrix - matrix.conj().T).max()) if matrix.size else 0.0
    if defect > HERMITIAN_TOL:
        raise ValueError(f"Matrix is not Hermitian (defect {defect:.3g})")
    return matrix


def tridiagonalize(
    matrix: np.ndarray, with_vectors: bool = False
) -> tuple[list[float], list[float], np.ndarray | None]:
    """Reduce a Hermitian matrix to real symmetric tridiagonal form.

    Returns the diagonal d, the off-diagonal e (e[i] couples i and i+1, with a
    trailing zero) and, if requested, the unitary U with A = U T U*.
    """
    a = np.array(matrix, dtype=np.complex128)
    size = a.shape[0]
    u = np.eye(size, dtype=np.complex128) if with_vectors else None

    for k in range(size - 2):
        x = a[k + 1 :, k]
        norm = float(np.linalg.norm(x))
        if norm == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * norm
        v /= np.linalg.norm(v)
        # H = I - 2vv* on rows/columns k+1.., from both sides
        a[k + 1 :, :] -= 2.0 * np.outer(v, v.conj() @ a[k + 1 :, :])
        a[:, k + 1 :] -= 2.0 * np.outer(a[:, k + 1 :] @ v, v.conj())
        if u is not None:
            u[:, k + 1 :] -= 2.0 * np.outer(u[:, k + 1 :] @ v, v.conj())

    d = [float(z.real) for z in a.diagonal()]
    sub = a.diagonal(-1)

    # Rotate each basis vector's phase so the off-diagonal becomes |e_i|
    phases = np.ones(size, dtype=np.complex128)
    for i, z in enumerate(sub):
        r = abs(z)
        phases[i + 1] = phases[i] * (z / r) if r > 0 else phases[i]
    e = [float(abs(z)) for z in sub] + [0.0]
    if u is not None:
        u = u * phases[None, :]
    return d, e, u


def tql(
    d: list[float], e: list[float], z: np.ndarray | None = None, tol: float = EPS
) -> list[float]:
    """Implicit QL on a real symmetric tridiagonal matrix, in place.

    Rotations are accumulated into the columns of z when given.
    """
    size = len(d)
    for lo in range(size):
        sweeps = 0
        while True:
            m = lo
            while m < size - 1:
                if abs(e[m]) <= tol * (abs(d[m]) + abs(d[m + 1])):
                    break
                m += 1
            if m == lo:
                break
            sweeps += 1
            if sweeps > MAX_SWEEPS:
                raise RuntimeError(f"QL iteration did not converge at index {lo}")

            g = (d[lo + 1] - d[lo]) / (2.0 * e[lo])
            r = math.hypot(g, 1.0)
            g = d[m] - d[lo] + e[lo] / (g + math.copysign(r, g))
            s = c = 1.0
            shift = 0.0
            underflow = False
            for i in range(m - 1, lo - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= shift
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - shift
                r = (d[i] - g) * s + 2.0 * c * b
                shift = s * r
                d[i + 1] = g + shift
                g = c * r - b
                if z is not None:
                    col = z[:, i + 1].copy()
                    z[:, i + 1] = s * z[:, i] + c * col
                    z[:, i] = c * z[:, i] - s * col
            if underflow:
                continue
            d[lo] -= shift
            e[lo] = g
            e[m] = 0.0
    return d


def eigh_hermitian(
    g: GramMatrix | np.ndarray, tol: float = EPS
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and matching unit eigenvectors as columns."""
    matrix = _as_array(g)
    d, e, u = tridiagonalize(matrix, with_vectors=True)
    values = np.array(tql(d, e, u, tol=tol))
    order = np.argsort(values, kind="stable")
    return values[order], u[:, order]


def eigenvalues_hermitian(g: GramMatrix | np.ndarray, tol: float = EPS) -> Spectrum:
    """All eigenvalues of a Hermitian matrix.

    `tol` is the relative threshold below which an off-diagonal entry counts as
    zero; eigenpair residuals ||Gv - λv|| stay within a small multiple of
    tol·||G||.
    """
    matrix = _as_array(g)
    d, e, _ = tridiagonalize(matrix)
    return Spectrum(np.array(tql(d, e, tol=tol)))
