"""One-variable radial theory: membership on jets, kernel-convexity,
monotone quotients, densities and the increasing/decreasing dichotomy.

Quotients and densities use the standard kernel normalization, so the
profile theta * K_p reports density theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, InvariantError
from .riesz import INF, KernelSpec, kernel
from .subeq import PropertyReport

JET_TOL = 1e-12
SECANT_TOL = 1e-9


@dataclass(frozen=True)
class OneVarJet:
    """Jet coordinates (radius t, first derivative lam, second derivative a)."""

    t: float
    lam: float
    a: float

    def __post_init__(self):
        if self.t <= 0.0:
            raise DomainError(f"jet radius must be positive, got {self.t}")


@dataclass
class RadialProfile:
    """Scalar profile psi on (0, r_max), optionally with analytic derivatives."""

    fn: Callable
    r_max: float = INF
    d1: Callable | None = None
    d2: Callable | None = None
    name: str = ""

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0.0) or np.any(r >= self.r_max):
            raise DomainError(f"radius outside (0, {self.r_max})")
        out = np.asarray(self.fn(r), dtype=float)
        return out if out.ndim else float(out)

    def jet(self, t: float) -> OneVarJet:
        if self.d1 is None or self.d2 is None:
            raise DomainError("profile has no analytic derivatives")
        return OneVarJet(t=t, lam=float(self.d1(t)), a=float(self.d2(t)))

    def derivative_defect(self, grid) -> float:
        """Worst relative mismatch between analytic derivatives and
        central differences on the grid (construction invariant)."""
        if self.d1 is None and self.d2 is None:
            return 0.0
        worst = 0.0
        for t in np.asarray(grid, dtype=float):
            h = 1e-5 * (1.0 + t)
            up, dn, mid = self(t + h), self(t - h), self(t)
            if self.d1 is not None:
                fd1 = (up - dn) / (2.0 * h)
                worst = max(worst, abs(fd1 - self.d1(t)) / (1.0 + abs(fd1)))
            if self.d2 is not None:
                fd2 = (up - 2.0 * mid + dn) / h**2
                worst = max(worst, abs(fd2 - self.d2(t)) / (1.0 + abs(fd2)))
        return worst


def validate_profile(profile: RadialProfile, grid, tol: float = 1e-6) -> None:
    defect = profile.derivative_defect(grid)
    if defect > tol:
        raise InvariantError(f"declared derivatives mismatch: defect {defect:.3e}")


# ---------------------------------------------------------------------------
# membership on jets
# ---------------------------------------------------------------------------


def _jet_tol(jet: OneVarJet) -> float:
    return JET_TOL * (1.0 + abs(jet.a) + abs(jet.lam) / jet.t)


def rp_up_membership(p: float, jet: OneVarJet) -> bool:
    """Increasing one-variable constraint: a + (p-1) lam / t >= 0, lam >= 0.

    At p = inf only the first-order half lam >= 0 remains.
    """
    tol = _jet_tol(jet)
    if math.isinf(p):
        return jet.lam >= -tol
    if p < 1.0:
        raise DomainError(f"p must be in [1, inf], got {p}")
    return jet.lam >= -tol and jet.a + (p - 1.0) * jet.lam / jet.t >= -tol


def rq_down_membership(q: float, jet: OneVarJet) -> bool:
    """Decreasing constraint: a + (q-1) lam / t >= 0, lam <= 0."""
    tol = _jet_tol(jet)
    if math.isinf(q):
        return jet.lam <= tol
    if q < 1.0:
        raise DomainError(f"q must be in [1, inf], got {q}")
    return jet.lam <= tol and jet.a + (q - 1.0) * jet.lam / jet.t >= -tol


def rf_membership(p: float, q: float, jet: OneVarJet) -> bool:
    """Full radial constraint: union of increasing and decreasing halves."""
    return rp_up_membership(p, jet) or rq_down_membership(q, jet)


# ---------------------------------------------------------------------------
# kernel convexity and quotients
# ---------------------------------------------------------------------------


def kp_convexity_test(profile: RadialProfile, p: float, grid,
                      normalization: str = "standard") -> PropertyReport:
    """Secant-slope monotonicity of psi as a function of s = K_p(r).

    Convexity in the pulled-back variable is what makes the monotone
    quotients (and hence densities) exist.
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size < 3:
        raise DomainError("need at least three grid radii")
    spec = KernelSpec(p=p, normalization=normalization)
    s = np.asarray(kernel(spec, grid), dtype=float)
    v = np.asarray(profile(grid), dtype=float)
    slopes = np.diff(v) / np.diff(s)
    worst = float(np.max(np.maximum(0.0, slopes[:-1] - slopes[1:]), initial=0.0))
    return PropertyReport(
        name="kp-convexity",
        sample_count=int(grid.size),
        worst_violation=worst,
        tolerance=SECANT_TOL,
        passed=worst <= SECANT_TOL,
        note=f"p={p:g}",
    )


def monotone_quotient(profile: RadialProfile, p: float, r: float, t: float,
                      normalization: str = "standard") -> float:
    """(psi(r) - psi(t)) / (K(r) - K(t)); jointly nondecreasing in (r, t)."""
    if math.isinf(p):
        raise DomainError("quotients are undefined at p = inf")
    if r == t:
        raise DomainError("quotient needs distinct radii")
    spec = KernelSpec(p=p, normalization=normalization)
    dk = kernel(spec, r) - kernel(spec, t)
    return float((profile(r) - profile(t)) / dk)


def one_var_density(profile: RadialProfile, p: float, radii) -> tuple[float, float]:
    """Density estimate from the deepest quotient pair plus a monotone bracket.

    `radii` must be strictly decreasing; the bracket is the gap to the
    quotient one scale up (quotients decrease as both radii shrink, so
    no extrapolation is attempted).
    """
    if math.isinf(p):
        raise DomainError("no density at p = inf")
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3:
        raise DomainError("need at least three radii")
    if np.any(np.diff(radii) >= 0.0):
        raise DomainError("radii must be strictly decreasing")
    q_deep = monotone_quotient(profile, p, radii[-2], radii[-1])
    q_up = monotone_quotient(profile, p, radii[-3], radii[-2])
    return q_deep, max(q_up - q_deep, 0.0)


def quotient_curve(profile: RadialProfile, p: float, radii) -> np.ndarray:
    radii = np.asarray(radii, dtype=float)
    return np.array(
        [monotone_quotient(profile, p, radii[j], radii[j + 1]) for j in range(radii.size - 1)]
    )


def geometric_radii(r0: float, levels: int, ratio: float = 0.5) -> np.ndarray:
    """Default strictly-decreasing radius schedule r0 * ratio^j."""
    if not 0.0 < ratio < 1.0:
        raise DomainError("ratio must be in (0, 1)")
    return r0 * ratio ** np.arange(levels)


# ---------------------------------------------------------------------------
# increasing / decreasing dichotomy
# ---------------------------------------------------------------------------

INCREASING = "increasing"
DECREASING_CONVEX = "decreasing-convex"
DECREASING_THEN_INCREASING = "decreasing-then-increasing"
NOT_SUBAFFINE_RADIAL = "not-subaffine-radial"


@dataclass(frozen=True)
class ProfileClass:
    kind: str
    breakpoint: float | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "breakpoint": self.breakpoint}


def _secant_convex(values: np.ndarray, xs: np.ndarray, tol: float) -> bool:
    if values.size < 3:
        return True
    slopes = np.diff(values) / np.diff(xs)
    return bool(np.all(slopes[:-1] <= slopes[1:] + tol))


def classify_profile(profile: RadialProfile, grid) -> ProfileClass:
    """Sampled dichotomy: increasing, decreasing-and-convex, or
    decreasing-then-increasing with the grid breakpoint.

    Profiles matching none of the three patterns are reported as not
    subaffine-radial (a diagnostic, not an error).
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size < 4:
        raise DomainError("need at least four grid radii")
    v = np.asarray(profile(grid), dtype=float)
    tol = SECANT_TOL * (1.0 + float(np.abs(v).max()))
    diffs = np.diff(v)
    if np.all(diffs >= -tol):
        return ProfileClass(INCREASING)
    if np.all(diffs <= tol):
        if _secant_convex(v, grid, tol):
            return ProfileClass(DECREASING_CONVEX)
        return ProfileClass(NOT_SUBAFFINE_RADIAL)
    # candidate breakpoint at the sampled minimum
    i_min = int(np.argmin(v))
    dec, inc = diffs[:i_min], diffs[i_min:]
    if np.all(dec <= tol) and np.all(inc >= -tol):
        if _secant_convex(v[: i_min + 1], grid[: i_min + 1], tol):
            return ProfileClass(DECREASING_THEN_INCREASING, breakpoint=float(grid[i_min]))
        return ProfileClass(NOT_SUBAFFINE_RADIAL)
    return ProfileClass(NOT_SUBAFFINE_RADIAL)


# ---------------------------------------------------------------------------
# stock profiles
# ---------------------------------------------------------------------------


def kernel_profile(p: float, theta: float = 1.0, normalization: str = "standard") -> RadialProfile:
    from .riesz import kernel_deriv1, kernel_deriv2

    spec = KernelSpec(p=p, normalization=normalization)
    return RadialProfile(
        fn=lambda r: theta * np.asarray(kernel(spec, r)),
        d1=lambda t: theta * kernel_deriv1(spec, t),
        d2=lambda t: theta * kernel_deriv2(spec, t),
        name=f"{theta:g}*K_{p:g}",
    )


def profile_from_callable(fn: Callable, name: str = "", r_max: float = INF) -> RadialProfile:
    return RadialProfile(fn=fn, r_max=r_max, name=name)
