"""Dense symmetric-matrix primitives.

Everything here is a pure function of its inputs; random constructors
take an explicit seed and never touch global RNG state.  Matrices are
small (n <= 16 in practice) and dense.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _accel
from .errors import DomainError, InvariantError, NumericalError

UNIT_NORM_TOL = 1e-12
FRAME_TOL = 1e-10
STRUCTURE_TOL = 1e-12
CLUSTER_TOL = 1e-8

DEFAULT_FD_STEP = 1e-4


def symmetrize(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def as_matrix(a) -> np.ndarray:
    """Unwrap a SymMatrix or coerce an array-like to a symmetric ndarray."""
    if isinstance(a, SymMatrix):
        return a.a
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvariantError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def fro(a) -> float:
    return float(np.linalg.norm(as_matrix(a)))


class SymMatrix:
    """n-by-n real symmetric matrix with cached ascending spectrum.

    Entries are symmetrized at construction so ``a[i, j] == a[j, i]``
    holds exactly.  Instances are treated as immutable.
    """

    __slots__ = ("a", "_vals", "_vecs")

    def __init__(self, entries):
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvariantError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("matrix entries must be finite")
        self.a = 0.5 * (a + a.T)
        self.a.flags.writeable = False
        self._vals = None
        self._vecs = None

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def eigenvalues(self) -> np.ndarray:
        if self._vals is None:
            self._vals = _accel.eigvals_ascending(self.a)
            self._vals.flags.writeable = False
        return self._vals

    def eigen_system(self):
        if self._vecs is None:
            vals, vecs = _accel.eigh_ascending(self.a)
            self._vals = vals
            self._vals.flags.writeable = False
            self._vecs = vecs
        return self._vals, self._vecs

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


def ordered_eigenvalues(a) -> np.ndarray:
    """Ascending eigenvalues lambda_1 <= ... <= lambda_n."""
    if isinstance(a, SymMatrix):
        return a.eigenvalues()
    return _accel.eigvals_ascending(as_matrix(a))


# ---------------------------------------------------------------------------
# directions, projectors, frames
# ---------------------------------------------------------------------------


def unit_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise InvariantError(f"|norm - 1| = {abs(norm - 1.0):.3e} exceeds {UNIT_NORM_TOL}")
    return v


def coordinate_direction(n: int, axis: int = 0) -> np.ndarray:
    e = np.zeros(n)
    e[axis] = 1.0
    return e


def projector_onto(e) -> np.ndarray:
    """Rank-one orthogonal projector e (x) e onto the line through e."""
    e = unit_vector(e)
    return np.outer(e, e)


def projector_perp(e) -> np.ndarray:
    """Projector onto the hyperplane orthogonal to e."""
    e = unit_vector(e)
    return np.eye(e.size) - np.outer(e, e)


def radial_hessian(lam: float, a: float, x) -> np.ndarray:
    """Hessian of a radial function with one-variable jet (lam, a) at x != 0.

    Returns (lam/|x|) P_perp + a P_line, whose spectrum is lam/|x| with
    multiplicity n-1 and a with multiplicity 1.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise DomainError("radial Hessian is undefined at the origin")
    u = x / r
    p_line = np.outer(u, u)
    return (lam / r) * (np.eye(x.size) - p_line) + a * p_line


@dataclass(frozen=True)
class Frame:
    """n x p matrix with orthonormal columns spanning a p-plane."""

    columns: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=float)
        if cols.ndim != 2:
            raise InvariantError("frame columns must form a 2-d array")
        gram = cols.T @ cols
        defect = float(np.abs(gram - np.eye(cols.shape[1])).max())
        if defect > FRAME_TOL:
            raise InvariantError(f"columns not orthonormal: defect {defect:.3e}")
        object.__setattr__(self, "columns", cols)

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def p(self) -> int:
        return self.columns.shape[1]


def trace_over_subspace(a, w) -> float:
    """Trace of A restricted to the plane spanned by the frame W."""
    a = as_matrix(a)
    cols = w.columns if isinstance(w, Frame) else Frame(w).columns
    if cols.shape[0] != a.shape[0]:
        raise InvariantError("frame and matrix dimensions differ")
    return float(np.einsum("ip,ij,jp->", cols, a, cols))


# ---------------------------------------------------------------------------
# complex / quaternionic structures and hermitian parts
# ---------------------------------------------------------------------------


def _check_orthogonal_square_minus_id(j: np.ndarray, label: str):
    n = j.shape[0]
    if float(np.abs(j @ j + np.eye(n)).max()) > STRUCTURE_TOL:
        raise InvariantError(f"{label}^2 != -Id")
    if float(np.abs(j.T @ j - np.eye(n)).max()) > STRUCTURE_TOL:
        raise InvariantError(f"{label} is not orthogonal")


@dataclass(frozen=True)
class ComplexStructure:
    """Orthogonal J on R^{2n} with J^2 = -Id; J(x, y) = (-y, x) in block form."""

    j: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.j, dtype=float)
        if j.ndim != 2 or j.shape[0] != j.shape[1] or j.shape[0] % 2:
            raise InvariantError("complex structure must be square of even dimension")
        _check_orthogonal_square_minus_id(j, "J")
        object.__setattr__(self, "j", j)

    @property
    def dim(self) -> int:
        return self.j.shape[0]

    @staticmethod
    def standard(n: int) -> "ComplexStructure":
        z = np.zeros((n, n))
        eye = np.eye(n)
        return ComplexStructure(np.block([[z, -eye], [eye, z]]))


def _quaternion_left_blocks(n: int):
    """Left multiplication by i, j, k on H^n in stacked (a, b, c, d) coordinates."""
    z = np.zeros((n, n))
    e = np.eye(n)
    li = np.block([[z, -e, z, z], [e, z, z, z], [z, z, z, -e], [z, z, e, z]])
    lj = np.block([[z, z, -e, z], [z, z, z, e], [e, z, z, z], [z, -e, z, z]])
    lk = np.block([[z, z, z, -e], [z, z, -e, z], [z, e, z, z], [e, z, z, z]])
    return li, lj, lk


@dataclass(frozen=True)
class QuaternionStructure:
    """Orthogonal I, J, K on R^{4n} with I^2 = J^2 = K^2 = -Id and IJ = K."""

    i: np.ndarray
    j: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        mats = {}
        for label in ("i", "j", "k"):
            m = np.asarray(getattr(self, label), dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 4:
                raise InvariantError("quaternion structure needs dimension divisible by 4")
            _check_orthogonal_square_minus_id(m, label.upper())
            mats[label] = m
        if float(np.abs(mats["i"] @ mats["j"] - mats["k"]).max()) > STRUCTURE_TOL:
            raise InvariantError("IJ != K")
        for label, m in mats.items():
            object.__setattr__(self, label, m)

    @property
    def dim(self) -> int:
        return self.i.shape[0]

    @staticmethod
    def standard(n: int) -> "QuaternionStructure":
        li, lj, lk = _quaternion_left_blocks(n)
        return QuaternionStructure(li, lj, lk)


def hermitian_part(a, structure) -> np.ndarray:
    """Hermitian symmetric part of A with respect to a complex or
    quaternionic structure: (A - JAJ)/2, resp. (A - IAI - JAJ - KAK)/4."""
    a = as_matrix(a)
    if isinstance(structure, ComplexStructure):
        if structure.dim != a.shape[0]:
            raise DomainError("matrix and structure dimensions differ")
        j = structure.j
        return 0.5 * (a - j @ a @ j)
    if isinstance(structure, QuaternionStructure):
        if structure.dim != a.shape[0]:
            raise DomainError("matrix and structure dimensions differ")
        li, lj, lk = structure.i, structure.j, structure.k
        return 0.25 * (a - li @ a @ li - lj @ a @ lj - lk @ a @ lk)
    raise DomainError(f"unsupported structure {type(structure).__name__}")


def cluster_reduce(vals: np.ndarray, multiplicity: int) -> np.ndarray:
    """Collapse an ascending spectrum into clusters of the given size.

    Cluster widths beyond 1e-8 * (1 + spectral radius) mean the spectrum
    does not have the expected degeneracy; that is a numerical error.
    """
    vals = np.asarray(vals, dtype=float)
    if vals.size % multiplicity:
        raise DomainError("spectrum length not divisible by the multiplicity")
    tol = CLUSTER_TOL * (1.0 + float(np.abs(vals).max(initial=0.0)))
    groups = vals.reshape(-1, multiplicity)
    worst = float((groups.max(axis=1) - groups.min(axis=1)).max(initial=0.0))
    if worst > tol:
        raise NumericalError(
            f"spectrum not {multiplicity}-fold degenerate: cluster width {worst:.3e}"
        )
    return groups.mean(axis=1)


def reduced_eigenvalues(a, structure) -> np.ndarray:
    """Deduplicated ascending spectrum of the hermitian part.

    The hermitian part of a 2n x 2n (resp. 4n x 4n) matrix has each
    eigenvalue with multiplicity 2 (resp. 4); the reduced list keeps one
    representative per cluster.
    """
    h = hermitian_part(a, structure)
    mult = 2 if isinstance(structure, ComplexStructure) else 4
    return cluster_reduce(ordered_eigenvalues(h), mult)


# ---------------------------------------------------------------------------
# elementary symmetric functions
# ---------------------------------------------------------------------------


def elementary_symmetric(lams: Sequence[float], k: int) -> float:
    """k-th elementary symmetric function, exact for integer inputs."""
    lams = np.asarray(lams, dtype=float).reshape(-1)
    n = lams.size
    if not 1 <= k <= n:
        raise DomainError(f"k must satisfy 1 <= k <= {n}, got {k}")
    e = np.zeros(k + 1)
    e[0] = 1.0
    for i, lam in enumerate(lams):
        top = min(i + 1, k)
        for j in range(top, 0, -1):
            e[j] += lam * e[j - 1]
    return float(e[k])


def elementary_symmetric_all(lams: Sequence[float], k: int) -> np.ndarray:
    """sigma_1, ..., sigma_k in one pass."""
    lams = np.asarray(lams, dtype=float).reshape(-1)
    n = lams.size
    if not 1 <= k <= n:
        raise DomainError(f"k must satisfy 1 <= k <= {n}, got {k}")
    e = np.zeros(k + 1)
    e[0] = 1.0
    for i, lam in enumerate(lams):
        top = min(i + 1, k)
        for j in range(top, 0, -1):
            e[j] += lam * e[j - 1]
    return e[1:]


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------


def _evaluate_field(field, pts: np.ndarray) -> np.ndarray:
    if hasattr(field, "values"):
        return np.asarray(field.values(pts), dtype=float)
    return np.asarray([float(field(p)) for p in pts], dtype=float)


def finite_diff_hessian(field: Callable, x, h: float | None = None) -> np.ndarray:
    """Second-order central-difference Hessian, symmetrized.

    `field` is either a callable on a single point or an object with a
    vectorized ``values`` method.  Evaluation at (or too near) a
    singular point of the field surfaces as a DomainError.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    n = x.size
    if h is None:
        h = DEFAULT_FD_STEP * (1.0 + float(np.linalg.norm(x)))
    pts = [x]
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        pts.extend((x + ei, x - ei))
    for i in range(n):
        for j in range(i + 1, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            pts.extend((x + ei + ej, x + ei - ej, x - ei + ej, x - ei - ej))
    vals = _evaluate_field(field, np.array(pts))
    if not np.all(np.isfinite(vals)):
        raise DomainError("finite-difference stencil touches a singular point")
    u0 = vals[0]
    hess = np.zeros((n, n))
    for i in range(n):
        up, dn = vals[1 + 2 * i], vals[2 + 2 * i]
        hess[i, i] = (up - 2.0 * u0 + dn) / h**2
    idx = 1 + 2 * n
    for i in range(n):
        for j in range(i + 1, n):
            pp, pm, mp, mm = vals[idx : idx + 4]
            idx += 4
            hess[i, j] = hess[j, i] = (pp - pm - mp + mm) / (4.0 * h**2)
    return symmetrize(hess)


# ---------------------------------------------------------------------------
# seeded random constructors
# ---------------------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_orthonormal_frame(n: int, p: int, seed=0) -> Frame:
    """Frame via QR of a Gaussian sample; deterministic given the seed."""
    if not 1 <= p <= n:
        raise DomainError(f"need 1 <= p <= n, got p={p}, n={n}")
    g = _rng(seed).standard_normal((n, p))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    return Frame(q)


def random_psd(n: int, seed=0) -> np.ndarray:
    g = _rng(seed).standard_normal((n, n))
    return g @ g.T / n


def random_rotation(n: int, seed=0) -> np.ndarray:
    """Haar-ish rotation via sign-fixed QR; det fixed to +1."""
    g = _rng(seed).standard_normal((n, n))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q


def random_symmetric(n: int, seed=0) -> np.ndarray:
    g = _rng(seed).standard_normal((n, n))
    return 0.5 * (g + g.T)


def random_unit_vector(n: int, seed=0) -> np.ndarray:
    v = _rng(seed).standard_normal(n)
    return v / np.linalg.norm(v)
