"""Subequation algebra: built-in families, duals, lifts, geometric and
Garding constructions, and structural property checks.

A subequation is represented through a continuous margin function m with
member(A) <=> m(A) >= 0, interior {m > 0} and boundary {m = 0}.  All the
built-in families are functions of the ordered eigenvalues, so their
margins are rotation invariant up to eigensolver rounding.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from . import _accel
from .errors import DomainError, InvariantError, SolverError
from .linalg import (
    ComplexStructure,
    Frame,
    QuaternionStructure,
    as_matrix,
    coordinate_direction,
    elementary_symmetric_all,
    fro,
    ordered_eigenvalues,
    random_psd,
    random_rotation,
    random_symmetric,
    reduced_eigenvalues,
)

MEMBER_TOL = 1e-9
BOUNDARY_BAND = 1e-7


@dataclass(frozen=True)
class Subequation:
    """Named margin function plus metadata.

    ``margin`` maps a symmetric matrix to a real number; ``eig_margin``
    is the same constraint expressed on an ascending eigenvalue list and
    is present exactly for the orthogonally-invariant families (it is
    what the complex/quaternionic lifts reuse).
    """

    name: str
    n: int
    margin: Callable
    convex: bool
    invariance: str  # one of "O(n)", "U(n)", "Sp(n)", "sampled-ST", "none"
    eig_margin: Callable | None = None
    preferred_direction: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    def member(self, a) -> bool:
        return self.margin(a) >= -MEMBER_TOL * (1.0 + fro(a))

    def on_boundary(self, a) -> bool:
        return abs(self.margin(a)) <= BOUNDARY_BAND * (1.0 + fro(a))

    def direction(self) -> np.ndarray:
        if self.preferred_direction is not None:
            return self.preferred_direction
        return coordinate_direction(self.n)


def _from_eigs(name, n, eig_margin, convex, params, invariance="O(n)"):
    def margin(a) -> float:
        return float(eig_margin(ordered_eigenvalues(a)))

    return Subequation(
        name=name,
        n=n,
        margin=margin,
        convex=convex,
        invariance=invariance,
        eig_margin=eig_margin,
        params=dict(params),
    )


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------


def _psd_eig_margin(n):
    return lambda lams: float(lams[0])


def _p_convex_eig_margin(n, p):
    if not 1.0 <= p <= n:
        raise DomainError(f"p-convex needs 1 <= p <= n, got p={p}")
    k = int(math.floor(p))
    frac = p - k

    def m(lams):
        s = float(lams[:k].sum())
        if frac > 0.0:
            s += frac * float(lams[k])
        return s

    return m


def _sigma_k_eig_margin(n, k):
    k = int(k)
    if not 1 <= k <= n:
        raise DomainError(f"sigma-k needs 1 <= k <= n, got k={k}")

    def m(lams):
        return float(elementary_symmetric_all(lams, k).min())

    return m


def _pdelta_eig_margin(n, delta):
    if delta <= 0:
        raise DomainError(f"pdelta needs delta > 0, got {delta}")
    c = delta / n
    return lambda lams: float(lams[0] + c * lams.sum())


def _min_max_eig_margin(n, p):
    if p < 1:
        raise DomainError(f"min-max needs p >= 1, got {p}")
    return lambda lams: float(lams[0] + (p - 1.0) * lams[-1])


def _min_2_eig_margin(n, p):
    if p < 1:
        raise DomainError(f"min-2 needs p >= 1, got {p}")
    if n < 2:
        raise DomainError("min-2 needs n >= 2")
    return lambda lams: float(lams[0] + (p - 1.0) * lams[1])


def _dual_min_max_eig_margin(n, p):
    if p < 1:
        raise DomainError(f"dual-min-max needs p >= 1, got {p}")
    return lambda lams: float(lams[-1] + (p - 1.0) * lams[0])


def _dual_min_2_eig_margin(n, p):
    if p < 1:
        raise DomainError(f"dual-min-2 needs p >= 1, got {p}")
    if n < 2:
        raise DomainError("dual-min-2 needs n >= 2")
    return lambda lams: float(lams[-1] + (p - 1.0) * lams[-2])


def _signed_power(t: np.ndarray, q: float) -> np.ndarray:
    return np.sign(t) * np.abs(t) ** q


def _trace_power_eig_margin(n, k, q):
    if not 1.0 <= k <= n:
        raise DomainError(f"trace-power needs 1 <= k <= n, got k={k}")
    if q <= 0:
        raise DomainError(f"trace-power needs q > 0, got q={q}")
    kk = int(math.floor(k))
    frac = k - kk

    def m(lams):
        powers = _signed_power(lams, q)
        s = float(powers[:kk].sum())
        if frac > 0.0:
            s += frac * float(powers[kk])
        return s

    return m


def _subaffine_eig_margin(n):
    return lambda lams: float(lams[-1])


def _largest_convex_eig_margin(n, p):
    if not 1.0 <= p < n:
        raise DomainError(f"largest-convex needs 1 <= p < n, got p={p}")
    c = (p - 1.0) / (n - p)
    return lambda lams: float(lams[0] + c * lams.sum())


def _full_space_eig_margin(n):
    return lambda lams: 1.0


_FAMILIES = {
    # name: (builder(n, **params), convex flag, required params)
    "p": (_psd_eig_margin, True, ()),
    "p-convex": (_p_convex_eig_margin, True, ("p",)),
    "sigma-k": (_sigma_k_eig_margin, True, ("k",)),
    "pdelta": (_pdelta_eig_margin, True, ("delta",)),
    "min-max": (_min_max_eig_margin, False, ("p",)),
    "min-2": (_min_2_eig_margin, False, ("p",)),
    "dual-min-max": (_dual_min_max_eig_margin, False, ("p",)),
    "dual-min-2": (_dual_min_2_eig_margin, False, ("p",)),
    "trace-power": (_trace_power_eig_margin, False, ("k", "q")),
    "subaffine": (_subaffine_eig_margin, False, ()),
    "largest-convex": (_largest_convex_eig_margin, True, ("p",)),
    "full-space": (_full_space_eig_margin, True, ()),
}

_ALIASES = {"laplacian": "p-convex", "psd": "p", "P": "p"}


def family_names() -> list[str]:
    return sorted(_FAMILIES)


def builtin(family: str, n: int, **params) -> Subequation:
    """Construct a built-in family by name.

    ``laplacian`` is an alias for p-convex with p = n.
    """
    key = _ALIASES.get(family, family)
    if family == "laplacian":
        params = dict(params)
        params.setdefault("p", float(n))
    if key not in _FAMILIES:
        raise DomainError(f"unknown family {family!r}; known: {family_names()}")
    builder, convex, required = _FAMILIES[key]
    missing = [r for r in required if r not in params]
    if missing:
        raise DomainError(f"family {family!r} needs parameters {missing}")
    extra = [p for p in params if p not in required]
    if extra:
        raise DomainError(f"family {family!r} got unknown parameters {extra}")
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n}")
    eig_margin = builder(n, **params)
    label = key if not params else key + "(" + ",".join(f"{k}={v:g}" for k, v in sorted(params.items())) + ")"
    return _from_eigs(label, n, eig_margin, convex, params)


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def dual(f: Subequation) -> Subequation:
    """Dual subequation: margin_dual(A) = -margin(-A); an exact involution."""

    def margin(a) -> float:
        return -f.margin(-as_matrix(a))

    eig_margin = None
    if f.eig_margin is not None:
        base = f.eig_margin

        def eig_margin(lams):
            return -base(-lams[::-1])

    return Subequation(
        name=f"dual({f.name})",
        n=f.n,
        margin=margin,
        convex=False,
        invariance=f.invariance,
        eig_margin=eig_margin,
        preferred_direction=f.preferred_direction,
        params=dict(f.params),
    )


def complex_lift(family: str, n: int, **params) -> Subequation:
    """Complex analogue on R^{2n}: the base eigenvalue constraint applied
    to the spectrum of the hermitian part (A - JAJ)/2."""
    base = builtin(family, n, **params)
    if base.eig_margin is None:
        raise DomainError("complex lift needs an eigenvalue-defined base family")
    structure = ComplexStructure.standard(n)
    base_eig = base.eig_margin

    def margin(a) -> float:
        return float(base_eig(reduced_eigenvalues(a, structure)))

    return Subequation(
        name=f"complex({base.name})",
        n=2 * n,
        margin=margin,
        convex=base.convex,
        invariance="U(n)",
        params=dict(base.params),
    )


def quaternionic_lift(family: str, n: int, **params) -> Subequation:
    """Quaternionic analogue on R^{4n} via (A - IAI - JAJ - KAK)/4."""
    base = builtin(family, n, **params)
    if base.eig_margin is None:
        raise DomainError("quaternionic lift needs an eigenvalue-defined base family")
    structure = QuaternionStructure.standard(n)
    base_eig = base.eig_margin

    def margin(a) -> float:
        return float(base_eig(reduced_eigenvalues(a, structure)))

    return Subequation(
        name=f"quaternionic({base.name})",
        n=4 * n,
        margin=margin,
        convex=base.convex,
        invariance="Sp(n)",
        params=dict(base.params),
    )


@dataclass
class GrassmannSample:
    """Finite sample of p-planes in R^n standing in for a compact set of
    the Grassmannian; `angle_tol` drives intersection and containment
    tests."""

    planes: list
    angle_tol: float = 1e-3

    def __post_init__(self):
        if not self.planes:
            raise DomainError("Grassmann sample must be non-empty")
        frames = [w if isinstance(w, Frame) else Frame(w) for w in self.planes]
        n, p = frames[0].n, frames[0].p
        for w in frames:
            if (w.n, w.p) != (n, p):
                raise InvariantError("all planes must share the same (n, p)")
        self.planes = frames

    @property
    def n(self) -> int:
        return self.planes[0].n

    @property
    def p(self) -> int:
        return self.planes[0].p

    def stacked(self) -> np.ndarray:
        return np.stack([w.columns for w in self.planes])


def default_plane_count(n: int) -> int:
    return 512 if n <= 4 else 2048


def sample_grassmannian(n: int, p: int, count: int | None = None, seed=0,
                        angle_tol: float = 1e-3) -> GrassmannSample:
    if count is None:
        count = default_plane_count(n)
    rng = np.random.default_rng(seed)
    planes = []
    for _ in range(count):
        g = rng.standard_normal((n, p))
        q, r = np.linalg.qr(g)
        planes.append(Frame(q * np.sign(np.diag(r))))
    return GrassmannSample(planes, angle_tol=angle_tol)


def geometric(sample: GrassmannSample) -> Subequation:
    """Outer approximation of the geometric subequation of a plane
    sample: margin(A) = min over sampled W of tr_W(A).  Finitely many
    constraints mean the margin can only overestimate membership;
    adding planes never increases it."""
    stack = sample.stacked()  # (k, n, p)

    def margin(a) -> float:
        a = as_matrix(a)
        traces = np.einsum("kip,ij,kjp->k", stack, a, stack)
        return float(traces.min())

    e = sample.planes[0].columns[:, 0].copy()
    return Subequation(
        name=f"geometric(G({sample.p},R^{sample.n}))#{len(sample.planes)}",
        n=sample.n,
        margin=margin,
        convex=True,
        invariance="sampled-ST",
        preferred_direction=e,
        params={"p": sample.p, "planes": len(sample.planes)},
    )


def garding_branch(operator: str, k: int, n: int, p: int | None = None,
                   delta: float | None = None) -> Subequation:
    """k-th ascending branch of a hyperbolic polynomial operator.

    Operators: ``det`` (branches lambda_k >= 0), ``p-fold-sum`` (k-th
    smallest sum of p eigenvalues), ``pdelta`` (lambda_k +
    (delta/n) tr >= 0; branch 1 recovers the pdelta family).
    """
    k = int(k)
    if operator == "det":
        if not 1 <= k <= n:
            raise DomainError(f"det branch index must be in [1, {n}], got {k}")

        def eig_margin(lams, _k=k):
            return float(lams[_k - 1])

        label = f"garding(det,k={k})"
    elif operator == "p-fold-sum":
        if p is None or int(p) != p or not 1 <= p <= n:
            raise DomainError("p-fold-sum needs an integer p in [1, n]")
        p = int(p)
        count = math.comb(n, p)
        if not 1 <= k <= count:
            raise DomainError(f"branch index must be in [1, {count}], got {k}")
        subsets = np.array(list(itertools.combinations(range(n), p)))

        def eig_margin(lams, _k=k, _subsets=subsets):
            sums = lams[_subsets].sum(axis=1)
            sums.sort()
            return float(sums[_k - 1])

        label = f"garding(p-fold-sum,p={p},k={k})"
    elif operator == "pdelta":
        if delta is None or delta <= 0:
            raise DomainError("pdelta operator needs delta > 0")
        if not 1 <= k <= n:
            raise DomainError(f"branch index must be in [1, {n}], got {k}")
        c = delta / n

        def eig_margin(lams, _k=k, _c=c):
            return float(lams[_k - 1] + _c * lams.sum())

        label = f"garding(pdelta,delta={delta:g},k={k})"
    else:
        raise DomainError(f"unknown Garding operator {operator!r}")
    return _from_eigs(label, n, eig_margin, convex=(k == 1), params={"k": k})


def uniform_elliptic_regularization(f: Subequation, delta: float) -> Subequation:
    """Shifted family A -> A + (delta/n) tr(A) Id fed through F's margin."""
    if delta <= 0:
        raise DomainError(f"regularization needs delta > 0, got {delta}")
    c = delta / f.n

    def margin(a) -> float:
        a = as_matrix(a)
        return f.margin(a + c * np.trace(a) * np.eye(f.n))

    eig_margin = None
    if f.eig_margin is not None:
        base = f.eig_margin

        def eig_margin(lams):
            return base(lams + c * lams.sum())

    return Subequation(
        name=f"regularized({f.name},delta={delta:g})",
        n=f.n,
        margin=margin,
        convex=f.convex,
        invariance=f.invariance,
        eig_margin=eig_margin,
        preferred_direction=f.preferred_direction,
        params={**f.params, "delta": delta},
    )


def intersection(f: Subequation, g: Subequation) -> Subequation:
    """F cap G via min of margins (invariance inherited when tags agree)."""
    if f.n != g.n:
        raise DomainError("dimension mismatch")
    inv = f.invariance if f.invariance == g.invariance else "none"
    return Subequation(
        name=f"intersect({f.name},{g.name})",
        n=f.n,
        margin=lambda a: min(f.margin(a), g.margin(a)),
        convex=f.convex and g.convex,
        invariance=inv,
    )


def union(f: Subequation, g: Subequation) -> Subequation:
    """F cup G via max of margins."""
    if f.n != g.n:
        raise DomainError("dimension mismatch")
    inv = f.invariance if f.invariance == g.invariance else "none"
    return Subequation(
        name=f"union({f.name},{g.name})",
        n=f.n,
        margin=lambda a: max(f.margin(a), g.margin(a)),
        convex=False,
        invariance=inv,
    )


# ---------------------------------------------------------------------------
# property checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropertyReport:
    name: str
    sample_count: int
    worst_violation: float
    tolerance: float
    passed: bool
    skipped: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "property": self.name,
            "samples": self.sample_count,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
            "skipped": bool(self.skipped),
            "note": self.note,
        }


def _report(name, count, worst, tol, skipped=False, note="") -> PropertyReport:
    return PropertyReport(
        name=name,
        sample_count=count,
        worst_violation=float(worst),
        tolerance=float(tol),
        passed=bool(worst <= tol),
        skipped=skipped,
        note=note,
    )


def shift_into(f: Subequation, a: np.ndarray, budget: int = 64) -> np.ndarray:
    """Return A + t Id with margin >= 0, moving along the identity ray."""
    a = as_matrix(a)
    if f.margin(a) >= 0.0:
        return a
    t = 1.0
    eye = np.eye(f.n)
    for _ in range(budget):
        shifted = a + t * eye
        if f.margin(shifted) >= 0.0:
            return shifted
        t *= 2.0
    raise SolverError(f"could not shift a sample into {f.name}")


def _map_samples(fn, count):
    workers = _accel.worker_count()
    if workers <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def check_positivity(f: Subequation, sample_count: int = 200, seed=0) -> PropertyReport:
    """Members stay members after adding a PSD matrix."""
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63 - 1, size=(sample_count, 2))

    def one(i):
        a = shift_into(f, random_symmetric(f.n, int(seeds[i, 0])))
        psd = random_psd(f.n, int(seeds[i, 1]))
        return max(0.0, -f.margin(a + psd))

    worst = max(_map_samples(one, sample_count))
    return _report("positivity", sample_count, worst, MEMBER_TOL)


def check_cone(f: Subequation, sample_count: int = 200, seed=0) -> PropertyReport:
    """Members stay members under scaling by t >= 0."""
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63 - 1, size=sample_count)
    scales = (0.0, 0.5, 2.0, 10.0)

    def one(i):
        a = shift_into(f, random_symmetric(f.n, int(seeds[i])))
        return max(max(0.0, -f.margin(t * a)) for t in scales)

    worst = max(_map_samples(one, sample_count))
    return _report("cone", sample_count, worst, MEMBER_TOL)


def _unitary_rotation(n_complex: int, seed=0) -> np.ndarray:
    """Rotation of R^{2n} commuting with the standard J (image of U(n))."""
    rng = np.random.default_rng(seed)
    dim = 2 * n_complex
    j = ComplexStructure.standard(n_complex).j
    omega = rng.standard_normal((dim, dim))
    omega = 0.5 * (omega - omega.T)
    omega = 0.5 * (omega - j @ omega @ j)  # project onto the J-commutant
    return scipy.linalg.expm(omega)


def _symplectic_rotation(n_quaternion: int, seed=0) -> np.ndarray:
    """Rotation of R^{4n} commuting with I, J, K (image of Sp(n))."""
    rng = np.random.default_rng(seed)
    dim = 4 * n_quaternion
    s = QuaternionStructure.standard(n_quaternion)
    omega = rng.standard_normal((dim, dim))
    omega = 0.5 * (omega - omega.T)
    omega = 0.25 * (omega - s.i @ omega @ s.i - s.j @ omega @ s.j - s.k @ omega @ s.k)
    return scipy.linalg.expm(omega)


def invariance_rotation(f: Subequation, seed=0) -> np.ndarray:
    if f.invariance == "O(n)":
        return random_rotation(f.n, seed)
    if f.invariance == "U(n)":
        return _unitary_rotation(f.n // 2, seed)
    if f.invariance == "Sp(n)":
        return _symplectic_rotation(f.n // 4, seed)
    raise DomainError(f"no rotation sampler for invariance tag {f.invariance!r}")


def check_st_invariance(f: Subequation, sample_count: int = 100, seed=0) -> PropertyReport:
    """|margin(g A g^T) - margin(A)| over random rotations of the declared group.

    For sampled-Grassmannian subequations a finite plane sample breaks
    exact invariance, so the check is skipped with a warning.
    """
    if f.invariance in ("sampled-ST", "none"):
        return _report(
            "st-invariance", 0, 0.0, 0.0, skipped=True,
            note=f"invariance tag {f.invariance!r}: finite sample breaks exact invariance",
        )
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63 - 1, size=(sample_count, 2))

    def one(i):
        a = random_symmetric(f.n, int(seeds[i, 0]))
        g = invariance_rotation(f, int(seeds[i, 1]))
        rel = abs(f.margin(g @ a @ g.T) - f.margin(a)) / (1.0 + fro(a))
        return rel

    worst = max(_map_samples(one, sample_count))
    return _report("st-invariance", sample_count, worst, 1e-8)


def check_maximum_principle(f: Subequation) -> PropertyReport:
    """0 must not be interior: margin(0) <= 0."""
    m0 = f.margin(np.zeros((f.n, f.n)))
    return _report("maximum-principle", 1, max(0.0, m0), 1e-12)


def check_uniform_ellipticity(delta: float, n: int, sample_count: int = 1000,
                              seed=0) -> PropertyReport:
    """Two-sided ellipticity bounds for the operator lam_min + (delta/n) tr.

    Checks (delta/n) tr(P) <= F(A+P) - F(A) <= (1 + delta/n) tr(P) on
    seeded samples with P PSD.
    """
    if delta <= 0:
        raise DomainError("delta must be > 0")
    d = delta / n
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63 - 1, size=(sample_count, 2))

    def op(a):
        lams = ordered_eigenvalues(a)
        return float(lams[0] + d * lams.sum())

    def one(i):
        a = random_symmetric(n, int(seeds[i, 0]))
        psd = random_psd(n, int(seeds[i, 1]))
        diff = op(a + psd) - op(a)
        tr = float(np.trace(psd))
        return max(0.0, d * tr - diff, diff - (1.0 + d) * tr)

    worst = max(_map_samples(one, sample_count))
    return _report("uniform-ellipticity", sample_count, worst, 1e-9,
                   note=f"delta={delta:g}, n={n}")


def margin_monotonicity_check(f: Subequation, sample_count: int = 100, seed=0,
                              t_grid: Sequence[float] = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)) -> PropertyReport:
    """margin(A + t Id) must be nondecreasing along the identity ray from
    members; this is what makes the characteristic bisection well posed."""
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63 - 1, size=sample_count)
    eye = np.eye(f.n)

    def one(i):
        a = shift_into(f, random_symmetric(f.n, int(seeds[i])))
        values = [f.margin(a + t * eye) for t in t_grid]
        return max(
            max(0.0, values[j] - values[j + 1]) for j in range(len(values) - 1)
        )

    worst = max(_map_samples(one, sample_count))
    return _report("margin-monotonicity", sample_count, worst, 1e-9)


# ---------------------------------------------------------------------------
# transitivity on plane samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransitivityResult:
    found: bool
    chain: tuple
    reason: str = ""

    def to_dict(self) -> dict:
        return {"found": self.found, "chain": list(self.chain), "reason": self.reason}


def _containing_planes(sample: GrassmannSample, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    norm = np.linalg.norm(x)
    if norm == 0.0:
        raise DomainError("transitivity endpoints must be nonzero")
    xh = x / norm
    stack = sample.stacked()
    proj = np.einsum("knp,n->kp", stack, xh)
    residual = np.linalg.norm(xh[None, :] - np.einsum("knp,kp->kn", stack, proj), axis=1)
    return np.flatnonzero(residual <= sample.angle_tol)


def smallest_principal_angle(w1: Frame, w2: Frame) -> float:
    s = np.linalg.svd(w1.columns.T @ w2.columns, compute_uv=False)
    return float(np.arccos(np.clip(s.max(), -1.0, 1.0)))


def transitivity_check(sample: GrassmannSample, x, y) -> TransitivityResult:
    """BFS for a chain of sampled planes from one containing x to one
    containing y, stepping only between planes whose smallest principal
    angle is below the sample tolerance."""
    starts = _containing_planes(sample, x)
    goals = _containing_planes(sample, y)
    if starts.size == 0:
        return TransitivityResult(False, (), "no sampled plane contains x")
    if goals.size == 0:
        return TransitivityResult(False, (), "no sampled plane contains y")
    goal_set = set(goals.tolist())

    # adjacency via pairwise largest singular value of W_i^T W_j
    stack = sample.stacked()
    k = stack.shape[0]
    cos_tol = math.cos(sample.angle_tol)
    grams = np.einsum("inp,jnq->ijpq", stack, stack)
    svals = np.linalg.svd(grams.reshape(k * k, sample.p, sample.p), compute_uv=False)
    adjacent = (svals.max(axis=1) >= cos_tol).reshape(k, k)
    np.fill_diagonal(adjacent, False)

    parent = {int(s): -1 for s in starts}
    frontier = [int(s) for s in starts]
    while frontier:
        nxt = []
        for node in frontier:
            if node in goal_set:
                chain = [node]
                while parent[chain[-1]] != -1:
                    chain.append(parent[chain[-1]])
                return TransitivityResult(True, tuple(reversed(chain)))
            for nbr in np.flatnonzero(adjacent[node]):
                nbr = int(nbr)
                if nbr not in parent:
                    parent[nbr] = node
                    nxt.append(nbr)
        frontier = nxt
    return TransitivityResult(False, (), "plane graph disconnected between x and y")
