"""Scalar fields, spherical/volume averages, tangential flows, densities
and their cross-relations, plus the built-in example fields.

Averages use a seeded low-discrepancy sphere point set shared across all
radii of a run.  Sharing the point set makes quotients of exactly
scale-homogeneous fields exact (the quadrature error cancels), and the
reported noise bound comes from comparing against the first half of the
sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma, ndtri
from scipy.stats import qmc

from .errors import DomainError, NumericalError
from .riesz import INF, KernelSpec, kernel
from .subeq import PropertyReport

CLIP_FLOOR = -1e12
MAX_CLIPPED_FRACTION = 1e-3
GL_NODES = 32


def unit_ball_volume(k: float) -> float:
    """Volume of the unit ball in dimension k (real k >= 0 allowed)."""
    if k < 0:
        raise DomainError("dimension must be >= 0")
    return math.pi ** (k / 2.0) / gamma(k / 2.0 + 1.0)


def sphere_surface_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


def harnack_constant(n: int) -> float:
    """1 / phi(1/e) with phi(lam) = (1 - lam) / (1 + lam)^(n-1)."""
    lam = 1.0 / math.e
    return (1.0 + lam) ** (n - 1) / (1.0 - lam)


def harnack_sup_constant(p: float, n: int) -> float:
    """Best constant in the two-sided max/spherical density comparison."""
    lams = np.linspace(1e-6, 1.0 - 1e-6, 20001)
    phi = (1.0 - lams) / (1.0 + lams) ** (n - 1)
    if p > 2.0:
        c = float(np.max(lams ** (p - 2.0) * phi))
    elif p < 2.0:
        psi = 1.0 + (1.0 + lams) ** (n - 1) / (1.0 - lams) * (lams ** (2.0 - p) - 1.0)
        c = float(np.max(psi))
    else:
        return 1.0
    if c <= 0.0:
        raise NumericalError("comparison constant came out non-positive")
    return 1.0 / c


# ---------------------------------------------------------------------------
# sphere quadrature
# ---------------------------------------------------------------------------


def default_quad_size(n: int) -> int:
    if n <= 4:
        return 4096
    if n <= 8:
        return 16384
    raise DomainError(f"no default quadrature for n = {n}")


class SphereQuad:
    """Seeded low-discrepancy point set on the unit sphere, equal weights.

    Points come from a scrambled Sobol sequence mapped through the
    inverse Gaussian CDF and normalized.  The first half of the set is a
    Sobol sequence in its own right, which gives the doubling self-test
    behind the reported noise bounds.
    """

    def __init__(self, n: int, size: int | None = None, seed: int = 0,
                 _points: np.ndarray | None = None):
        if n < 2:
            raise DomainError("sphere quadrature needs n >= 2")
        self.n = n
        self.size = default_quad_size(n) if size is None else int(size)
        if self.size < 8:
            raise DomainError("quadrature size too small")
        self.seed = int(seed)
        if _points is not None:
            self.points = _points
        else:
            sob = qmc.Sobol(d=n, scramble=True, seed=self.seed)
            u = sob.random(self.size)
            u = np.clip(u, 1e-15, 1.0 - 1e-15)
            g = ndtri(u)
            norms = np.linalg.norm(g, axis=1)
            norms[norms == 0.0] = 1.0
            self.points = g / norms[:, None]
        self._nn_cache = None

    def half(self) -> "SphereQuad":
        """The leading half of the point set (itself a Sobol sample)."""
        return SphereQuad(self.n, self.size // 2, self.seed,
                          _points=self.points[: self.size // 2])

    def neighbor_stats(self):
        """(indices, distances) of nearest neighbors for a 256-point subset."""
        if self._nn_cache is None:
            k = min(256, self.size)
            sub = self.points[:k]
            d2 = ((sub[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=2)
            d2[np.arange(k), np.arange(k)] = np.inf
            idx = d2.argmin(axis=1)
            dist = np.sqrt(d2[np.arange(k), idx])
            self._nn_cache = (idx, dist)
        return self._nn_cache


@lru_cache(maxsize=32)
def sphere_quad(n: int, size: int | None = None, seed: int = 0) -> SphereQuad:
    return SphereQuad(n, size, seed)


@lru_cache(maxsize=8)
def _gl_nodes(count: int = GL_NODES):
    x, w = np.polynomial.legendre.leggauss(count)
    ratio = 0.5 * (x + 1.0)  # map to (0, 1)
    weight = 0.5 * w
    return ratio, weight


# ---------------------------------------------------------------------------
# scalar fields
# ---------------------------------------------------------------------------


@dataclass
class ScalarField:
    """Evaluable function on a ball, with declared singular structure.

    ``values`` maps an (m, n) array of points to m values; -inf marks a
    hit on the singular set.  ``analytic_max(x0, r)`` returns the exact
    spherical maximum when a closed form is known (None means sample).
    ``certified_for`` names the subequations whose subharmonicity the
    construction guarantees.
    """

    n: int
    values: Callable
    name: str = "field"
    singular_points: tuple = ()
    singular_distance: Callable | None = None
    reference_value: float | None = None
    domain_radius: float = INF
    analytic_max: Callable | None = None
    certified_for: tuple = ()

    def at(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return float(self.values(x)[0])

    def distance_to_singular(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        if self.singular_distance is not None:
            return float(self.singular_distance(x.reshape(1, -1))[0])
        if not self.singular_points:
            return INF
        pts = np.asarray(self.singular_points, dtype=float)
        return float(np.linalg.norm(pts - x[None, :], axis=1).min())


def _clipped(vals: np.ndarray) -> tuple[np.ndarray, int]:
    bad = ~np.isfinite(vals) | (vals < CLIP_FLOOR)
    if bad.any():
        vals = np.where(bad, CLIP_FLOOR, vals)
    return vals, int(bad.sum())


# ---------------------------------------------------------------------------
# averages
# ---------------------------------------------------------------------------


def _require_inside(field: ScalarField, x0: np.ndarray, r: float):
    if r <= 0.0:
        raise DomainError("radius must be positive")
    if float(np.linalg.norm(x0)) + r > field.domain_radius:
        raise DomainError("ball leaves the field's domain")


def _sphere_values(field: ScalarField, x0: np.ndarray, r: float, quad: SphereQuad):
    pts = x0[None, :] + r * quad.points
    return field.values(pts)


def spherical_max(field: ScalarField, x0, r: float, quad: SphereQuad | None = None,
                  cross_check: bool = True) -> float:
    """Spherical maximum M(u, x0; r).

    Uses the field's closed form when available (cross-checking the
    sampled maximum against it); otherwise the sample maximum is
    inflated by a nearest-neighbor Lipschitz estimate to cover the gap
    between the sample and the true supremum.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    _require_inside(field, x0, r)
    if field.analytic_max is not None:
        exact = float(field.analytic_max(x0, r))
        if cross_check and quad is not None:
            vals, _ = _clipped(_sphere_values(field, x0, r, quad))
            sampled = float(vals.max())
            if sampled > exact + 1e-6 * (1.0 + abs(exact)):
                raise NumericalError(
                    f"sampled spherical max {sampled} exceeds closed form {exact}"
                )
        return exact
    if quad is None:
        quad = sphere_quad(field.n)
    vals, _ = _clipped(_sphere_values(field, x0, r, quad))
    idx, dist = quad.neighbor_stats()
    sub = vals[: idx.size]
    gaps = np.abs(sub - vals[idx])
    with np.errstate(divide="ignore", invalid="ignore"):
        lipschitz = float(np.max(np.where(dist > 0, gaps / dist, 0.0)))
    covering = 2.0 * float(dist.max())
    return float(vals.max()) + lipschitz * covering


def _spherical_average_stats(field, x0, r, quad):
    vals, nclip = _clipped(_sphere_values(field, x0, r, quad))
    if nclip == vals.size:
        raise DomainError("all sphere samples hit the singular set")
    return float(vals.mean()), nclip, vals.size


def spherical_average(field: ScalarField, x0, r: float,
                      quad: SphereQuad | None = None) -> float:
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    _require_inside(field, x0, r)
    if quad is None:
        quad = sphere_quad(field.n)
    return _spherical_average_stats(field, x0, r, quad)[0]


def _volume_average_stats(field, x0, r, quad):
    rho, w = _gl_nodes()
    n = field.n
    total = 0.0
    nclip = 0
    count = 0
    for rho_i, w_i in zip(rho, w):
        s_i, c_i, m_i = _spherical_average_stats(field, x0, rho_i * r, quad)
        total += w_i * n * rho_i ** (n - 1) * s_i
        nclip += c_i
        count += m_i
    return float(total), nclip, count


def volume_average(field: ScalarField, x0, r: float,
                   quad: SphereQuad | None = None) -> float:
    """Ball average via the radial reduction n * int_0^1 S(rho r) rho^(n-1) drho."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    _require_inside(field, x0, r)
    if quad is None:
        quad = sphere_quad(field.n)
    return _volume_average_stats(field, x0, r, quad)[0]


@dataclass
class AverageCurve:
    kind: str  # "M" | "S" | "V"
    center: np.ndarray
    radii: np.ndarray
    values: np.ndarray
    quad_size: int
    quad_seed: int
    clipped_fraction: float = 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "center": [float(c) for c in self.center],
            "samples": [[float(r), float(v)] for r, v in zip(self.radii, self.values)],
            "quad": {"size": self.quad_size, "seed": self.quad_seed},
            "clipped_fraction": self.clipped_fraction,
        }

    def to_csv_rows(self, p: float):
        spec = KernelSpec(p=p)
        rows = []
        for j, (r, v) in enumerate(zip(self.radii, self.values)):
            if j + 1 < len(self.radii):
                r2, v2 = self.radii[j + 1], self.values[j + 1]
                quot = (v - v2) / (kernel(spec, r) - kernel(spec, r2))
            else:
                quot = ""
            rows.append((float(r), float(v), quot))
        return rows


def average_curve(field: ScalarField, kind: str, x0, radii,
                  quad: SphereQuad | None = None) -> AverageCurve:
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    radii = np.asarray(radii, dtype=float)
    if quad is None:
        quad = sphere_quad(field.n)
    clipped = 0
    total = 0
    values = []
    for r in radii:
        if kind == "M":
            values.append(spherical_max(field, x0, r, quad))
        elif kind == "S":
            v, nclip, count = _spherical_average_stats(field, x0, r, quad)
            clipped += nclip
            total += count
            values.append(v)
        elif kind == "V":
            v, nclip, count = _volume_average_stats(field, x0, r, quad)
            clipped += nclip
            total += count
            values.append(v)
        else:
            raise DomainError(f"unknown average kind {kind!r}")
    frac = clipped / total if total else 0.0
    return AverageCurve(
        kind=kind,
        center=x0,
        radii=radii,
        values=np.asarray(values),
        quad_size=quad.size,
        quad_seed=quad.seed,
        clipped_fraction=frac,
    )


# ---------------------------------------------------------------------------
# tangential flow
# ---------------------------------------------------------------------------


def tangent_flow(field: ScalarField, p: float, r: float,
                 quad: SphereQuad | None = None) -> ScalarField:
    """One step of the tangential flow at scale r.

    u_r(x) = r^(p-2) u(rx) for p > 2, r^(p-2) (u(rx) - u(0)) for p < 2
    (which needs u(0) finite), and u(rx) - M(u, r) for p = 2.
    """
    if r <= 0.0:
        raise DomainError("flow scale must be positive")
    if math.isinf(p):
        raise DomainError("flow undefined at p = inf")
    n = field.n
    factor = r ** (p - 2.0)
    origin = np.zeros(n)

    if p == 2.0:
        m_r = spherical_max(field, origin, r, quad or sphere_quad(n))
        shift = m_r
        offset = 0.0
    elif p < 2.0:
        if field.reference_value is None or not math.isfinite(field.reference_value):
            raise DomainError("flow with p < 2 needs a finite value at the origin")
        shift = 0.0
        offset = field.reference_value
    else:
        shift = 0.0
        offset = 0.0

    base_values = field.values

    def values(pts):
        pts = np.asarray(pts, dtype=float)
        raw = base_values(r * pts)
        if p == 2.0:
            return raw - shift
        return factor * (raw - offset)

    singular = tuple(np.asarray(s, dtype=float) / r for s in field.singular_points)
    sing_dist = None
    if field.singular_distance is not None:
        base_dist = field.singular_distance

        def sing_dist(pts):
            return base_dist(np.asarray(pts, dtype=float) * r) / r

    analytic = None
    if field.analytic_max is not None:
        base_max = field.analytic_max

        def analytic(x0, rr):
            raw = base_max(x0 * r, rr * r)
            if p == 2.0:
                return raw - shift
            return factor * (raw - offset)

    reference = None
    if p < 2.0:
        reference = 0.0
    elif field.reference_value is not None and math.isfinite(field.reference_value):
        reference = factor * field.reference_value if p > 2.0 else field.reference_value - shift

    return ScalarField(
        n=n,
        values=values,
        name=f"flow({field.name},p={p:g},r={r:g})",
        singular_points=singular,
        singular_distance=sing_dist,
        reference_value=reference,
        domain_radius=field.domain_radius / r,
        analytic_max=analytic,
        certified_for=field.certified_for,
    )


def flow_invariance_defect(field: ScalarField, p: float, scales=(0.5, 2.0),
                           quad: SphereQuad | None = None,
                           shells=(0.5, 1.0, 2.0)) -> float:
    """sup |u_r - u| over a shell grid, for each scale; 0 for exact fixpoints."""
    quad = quad or sphere_quad(field.n, size=256, seed=3)
    worst = 0.0
    for s in scales:
        flowed = tangent_flow(field, p, s, quad)
        for shell in shells:
            pts = shell * quad.points
            a, _ = _clipped(field.values(pts))
            b, _ = _clipped(flowed.values(pts))
            worst = max(worst, float(np.abs(a - b).max()))
    return worst


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------


@dataclass
class DensityReport:
    p: float
    n: int
    center: np.ndarray
    radii: np.ndarray
    theta: dict          # kind -> estimate
    bracket: dict        # kind -> monotone bracket
    quotients: dict      # kind -> per-scale quotient list
    residuals: dict      # named cross-relation residuals
    harnack_c: float
    noise_bound: float
    clipped_fraction: float
    monotone_defect: float
    monotone_ok: bool
    notes: list = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "center": [float(c) for c in self.center],
            "radii": [float(r) for r in self.radii],
            "theta": {k: float(v) for k, v in self.theta.items()},
            "bracket": {k: float(v) for k, v in self.bracket.items()},
            "quotients": {k: [float(x) for x in v] for k, v in self.quotients.items()},
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "harnack_c": self.harnack_c,
            "noise_bound": self.noise_bound,
            "clipped_fraction": self.clipped_fraction,
            "monotone_defect": self.monotone_defect,
            "monotone_ok": self.monotone_ok,
            "notes": list(self.notes),
        }


def _quotients(values: np.ndarray, kvals: np.ndarray) -> np.ndarray:
    return (values[:-1] - values[1:]) / (kvals[:-1] - kvals[1:])


def default_radii(levels: int = 6, r0: float = 1.0) -> np.ndarray:
    return r0 * 0.5 ** np.arange(levels)


def densities(field: ScalarField, x0, p: float, radii=None,
              quad: SphereQuad | None = None,
              kinds: Sequence[str] = ("M", "S", "V")) -> DensityReport:
    """Monotone-quotient density estimates for the requested averages.

    Each estimate is the deepest quotient with the gap to the previous
    scale as bracket.  Cross-relations between the spherical and volume
    densities (and the max/spherical comparison) are reported as
    residuals; quotient monotonicity failures are flagged rather than
    raised, since they usually mean the field is not subharmonic for the
    intended constraint or the quadrature is too coarse.
    """
    if math.isinf(p):
        raise DomainError("no density is defined at p = inf")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    if radii.size < 3 or np.any(np.diff(radii) >= 0.0):
        raise DomainError("radii must be strictly decreasing, at least three")
    quad = quad or sphere_quad(field.n)
    spec = KernelSpec(p=p)
    kvals = np.asarray(kernel(spec, radii), dtype=float)

    curves = {}
    clipped = 0.0
    for kind in kinds:
        curve = average_curve(field, kind, x0, radii, quad)
        curves[kind] = curve
        clipped = max(clipped, curve.clipped_fraction)
    if clipped > MAX_CLIPPED_FRACTION:
        raise NumericalError(
            f"clipped sample fraction {clipped:.2e} exceeds {MAX_CLIPPED_FRACTION:.0e}"
        )

    # noise bound via the half sample
    noise = 0.0
    if any(k in kinds for k in ("S", "V")):
        half = quad.half()
        for kind in ("S", "V"):
            if kind not in kinds:
                continue
            full_q = _quotients(curves[kind].values, kvals)
            half_curve = average_curve(field, kind, x0, radii, half)
            half_q = _quotients(half_curve.values, kvals)
            noise = max(noise, float(np.abs(full_q - half_q).max()))

    theta, bracket, quotients = {}, {}, {}
    mono_defect = 0.0
    tol_mono = 1e-6 + noise
    for kind in kinds:
        q = _quotients(curves[kind].values, kvals)
        quotients[kind] = q
        theta[kind] = float(q[-1])
        bracket[kind] = float(max(q[-2] - q[-1], 0.0)) if q.size >= 2 else 0.0
        if q.size >= 2:
            mono_defect = max(mono_defect, float(np.max(q[1:] - q[:-1], initial=0.0)))

    residuals = {}
    notes = []
    n = field.n
    if "S" in kinds and "V" in kinds:
        if p != 2.0:
            predicted = (n - p + 2.0) / n * theta["V"]
            residuals["spherical_vs_volume"] = abs(theta["S"] - predicted) / max(
                abs(theta["S"]), 1e-30
            )
        else:
            residuals["spherical_vs_volume"] = abs(theta["S"] - theta["V"]) / max(
                abs(theta["S"]), 1e-30
            )
    if "M" in kinds and "S" in kinds:
        if p == 2.0:
            residuals["max_vs_spherical"] = abs(theta["M"] - theta["S"]) / max(
                abs(theta["M"]), 1e-30
            )
        else:
            lo, hi = (theta["M"], theta["S"]) if p > 2.0 else (theta["S"], theta["M"])
            residuals["comparison_lower"] = max(0.0, lo - hi)
            if p > 1.0:
                # at p = 1 the upper comparison fails even for linear fields
                c = harnack_sup_constant(p, n)
                residuals["comparison_upper"] = max(0.0, hi - c * lo)
                notes.append(f"comparison constant C(p,n) = {c:.6g}")

    mono_ok = mono_defect <= tol_mono
    if not mono_ok:
        notes.append("not F-subharmonic or quadrature too coarse")
    return DensityReport(
        p=p,
        n=n,
        center=x0,
        radii=radii,
        theta=theta,
        bracket=bracket,
        quotients=quotients,
        residuals=residuals,
        harnack_c=harnack_constant(n),
        noise_bound=noise,
        clipped_fraction=clipped,
        monotone_defect=mono_defect,
        monotone_ok=mono_ok,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# mass density
# ---------------------------------------------------------------------------


@dataclass
class MassDensityReport:
    p: float
    n: int
    radii: np.ndarray
    ball_masses: np.ndarray
    theta_mass: float
    bracket: float
    spherical_residual: float
    warning: str = ""

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "radii": [float(r) for r in self.radii],
            "ball_masses": [float(m) for m in self.ball_masses],
            "theta_mass": self.theta_mass,
            "bracket": self.bracket,
            "spherical_residual": self.spherical_residual,
            "warning": self.warning,
        }


def mass_density(field: ScalarField, x0, p: float, radii=None,
                 quad: SphereQuad | None = None, fd_step: float = 1e-3) -> MassDensityReport:
    """Mass density of the distributional Laplacian via the flux formula.

    The ball mass is mu(B_r) = |S^(n-1)| r^(n-1) dS/dr with S the
    spherical average; the (n-p)-density divides by alpha(n-p) r^(n-p).
    The spherical residual compares against the universal constant
    linking the spherical and mass densities.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    n = field.n
    if n < 3:
        raise DomainError("mass density needs n >= 3")
    if math.isinf(p):
        raise DomainError("mass density needs finite p")
    k = n - p
    if k < 0:
        raise DomainError("mass density needs p <= n")
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    quad = quad or sphere_quad(n)
    area = sphere_surface_area(n)

    masses = []
    for r in radii:
        s_hi = spherical_average(field, x0, r, quad)
        s_lo = spherical_average(field, x0, r * (1.0 - fd_step), quad)
        deriv = (s_hi - s_lo) / (r * fd_step)
        masses.append(area * r ** (n - 1) * deriv)
    masses = np.asarray(masses)

    alpha = unit_ball_volume(k)
    estimates = masses / (alpha * radii**k)
    theta_mass = float(estimates[-1])
    tail = estimates[-3:] if estimates.size >= 3 else estimates
    bracket = float(tail.max() - tail.min())
    warning = ""
    diffs = np.diff(estimates)
    if estimates.size >= 3 and np.any(diffs[:-1] * diffs[1:] < 0):
        warning = "oscillating finite-difference derivative; bracket widened"
        bracket = float(estimates.max() - estimates.min())

    # spherical density from the same curve for the cross-relation
    spec = KernelSpec(p=p)
    s_curve = average_curve(field, "S", x0, radii, quad)
    kvals = np.asarray(kernel(spec, radii), dtype=float)
    theta_s = float(_quotients(s_curve.values, kvals)[-1])
    const = alpha / (n * abs(p - 2.0) * unit_ball_volume(n)) if p != 2.0 else alpha / (
        n * unit_ball_volume(n)
    )
    predicted = const * theta_mass
    residual = abs(theta_s - predicted) / max(abs(theta_s), 1e-30)

    return MassDensityReport(
        p=p,
        n=n,
        radii=radii,
        ball_masses=masses,
        theta_mass=theta_mass,
        bracket=bracket,
        spherical_residual=residual,
        warning=warning,
    )


# ---------------------------------------------------------------------------
# flow experiments
# ---------------------------------------------------------------------------


@dataclass
class FlowSpec:
    """Schedule and comparison grid for tangent experiments."""

    p: float
    radii: np.ndarray = None
    shells: int = 8
    grid_sphere_size: int = 256
    grid_seed: int = 7

    def __post_init__(self):
        if self.radii is None:
            self.radii = 0.5 ** np.arange(11)
        self.radii = np.asarray(self.radii, dtype=float)
        if np.any(np.diff(self.radii) >= 0.0):
            raise DomainError("flow radii must be strictly decreasing")


def comparison_grid(spec: FlowSpec, n: int) -> np.ndarray:
    """Annulus grid 0.5 <= |x| <= 2 for p >= 2; ball grid for p < 2."""
    quad = sphere_quad(n, size=spec.grid_sphere_size, seed=spec.grid_seed)
    if spec.p >= 2.0:
        shells = np.geomspace(0.5, 2.0, spec.shells)
    else:
        shells = np.geomspace(0.05, 1.0, spec.shells)
    pts = (shells[:, None, None] * quad.points[None, :, :]).reshape(-1, n)
    if spec.p < 2.0:
        pts = np.vstack([pts, np.zeros(n)])
    return pts


def _grid_distance(u_vals, v_vals, pts, metric: str, beta: float | None, rng) -> float:
    diff = u_vals - v_vals
    if metric == "l1":
        return float(np.abs(diff).mean())
    if metric == "sup":
        return float(np.abs(diff).max())
    if metric == "holder":
        if beta is None:
            raise DomainError("holder metric needs beta")
        k = pts.shape[0]
        ii = rng.integers(0, k, size=512)
        jj = rng.integers(0, k, size=512)
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
        gaps = np.linalg.norm(pts[ii] - pts[jj], axis=1) ** beta
        quot = np.abs(diff[ii] - diff[jj]) / gaps
        return float(np.abs(diff).max() + quot.max())
    raise DomainError(f"unknown metric {metric!r}")


def holder_seminorm(values: np.ndarray, pts: np.ndarray, alpha: float,
                    pairs: int = 2048, seed: int = 11) -> float:
    """Max sampled two-point quotient |u(x)-u(y)| / |x-y|^alpha."""
    rng = np.random.default_rng(seed)
    k = pts.shape[0]
    ii = rng.integers(0, k, size=pairs)
    jj = rng.integers(0, k, size=pairs)
    keep = ii != jj
    ii, jj = ii[keep], jj[keep]
    gaps = np.linalg.norm(pts[ii] - pts[jj], axis=1)
    keep2 = gaps > 0
    return float(
        (np.abs(values[ii] - values[jj])[keep2] / gaps[keep2] ** alpha).max()
    )


@dataclass
class ConvergenceRecord:
    metric: str
    radii: np.ndarray
    distances: np.ndarray
    converged: bool
    tolerance: float
    holder_seminorms: np.ndarray | None = None
    holder_bound: float | None = None
    holder_bound_ok: bool | None = None

    def to_dict(self) -> dict:
        out = {
            "metric": self.metric,
            "radii": [float(r) for r in self.radii],
            "distances": [float(d) for d in self.distances],
            "converged": bool(self.converged),
            "tolerance": self.tolerance,
        }
        if self.holder_seminorms is not None:
            out["holder_seminorms"] = [float(h) for h in self.holder_seminorms]
            out["holder_bound"] = self.holder_bound
            out["holder_bound_ok"] = bool(self.holder_bound_ok)
        return out


def tangent_experiment(field: ScalarField, spec: FlowSpec, candidate: ScalarField,
                       metric: str = "sup", tol: float = 1e-3,
                       beta: float | None = None,
                       quad: SphereQuad | None = None) -> ConvergenceRecord:
    """Distances from the flowed field to a candidate tangent.

    Converged means the distance at the deepest scale is below `tol`.
    For p < 2 the grid Hoelder seminorms of the flowed fields are
    recorded together with the asymptotic bound by the max-density.
    """
    p = spec.p
    if metric == "holder":
        if not p < 2.0:
            raise DomainError("the Hoelder metric needs p < 2")
        if beta is None or not 0.0 < beta < 2.0 - p:
            raise DomainError("the Hoelder metric needs 0 < beta < 2 - p")
    pts = comparison_grid(spec, field.n)
    rng = np.random.default_rng(13)
    cand_vals, _ = _clipped(candidate.values(pts))
    distances = []
    seminorms = [] if p < 2.0 else None
    for r in spec.radii:
        flowed = tangent_flow(field, p, r, quad)
        vals, _ = _clipped(flowed.values(pts))
        distances.append(_grid_distance(vals, cand_vals, pts, metric, beta, rng))
        if seminorms is not None:
            seminorms.append(holder_seminorm(vals, pts, 2.0 - p))
    distances = np.asarray(distances)

    bound = None
    bound_ok = None
    if seminorms is not None:
        seminorms = np.asarray(seminorms)
        rep = densities(field, np.zeros(field.n), p, kinds=("M",), quad=quad)
        bound = rep.theta["M"] + rep.bracket["M"] + 1e-6
        bound_ok = bool(seminorms[-3:].max() <= bound * (1.0 + 1e-3) + 1e-9)
    return ConvergenceRecord(
        metric=metric,
        radii=spec.radii,
        distances=distances,
        converged=bool(distances[-1] <= tol),
        tolerance=tol,
        holder_seminorms=seminorms,
        holder_bound=bound,
        holder_bound_ok=bound_ok,
    )


def averages_of_tangent_check(tangent: ScalarField, p: float, radii=None,
                              quad: SphereQuad | None = None,
                              kinds: Sequence[str] = ("M", "S", "V"),
                              tol: float = 1e-6) -> PropertyReport:
    """Averages of a flow-invariant field must be exact radial harmonics.

    For p != 2 each average equals its density times the kernel; for
    p = 2 the max average is exactly theta * log r while the spherical
    and volume constants live in the universal window [-C theta, 0]
    (volume: >= -(C+1) theta).
    """
    if math.isinf(p):
        raise DomainError("needs finite p")
    n = tangent.n
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    quad = quad or sphere_quad(n)
    defect = flow_invariance_defect(tangent, p, quad=quad)
    worst = 0.0
    note_parts = [f"flow-invariance defect {defect:.2e}"]
    spec = KernelSpec(p=p)
    kvals = np.asarray(kernel(spec, radii), dtype=float)
    count = 0
    if p != 2.0:
        for kind in kinds:
            curve = average_curve(tangent, kind, np.zeros(n), radii, quad)
            theta_k = curve.values[0] / kvals[0]
            rel = np.abs(curve.values - theta_k * kvals) / np.maximum(np.abs(kvals), 1e-30)
            worst = max(worst, float(rel.max()))
            count += radii.size
            note_parts.append(f"theta_{kind}={theta_k:.6g}")
    else:
        c_const = harnack_constant(n)
        m_curve = average_curve(tangent, "M", np.zeros(n), radii, quad)
        theta = _quotients(m_curve.values, kvals)[-1]
        worst = max(worst, float(np.abs(m_curve.values - theta * kvals).max()))
        count += radii.size
        note_parts.append(f"theta={theta:.6g}")
        for kind, floor in (("S", -c_const * theta), ("V", -(c_const + 1.0) * theta)):
            if kind not in kinds:
                continue
            curve = average_curve(tangent, kind, np.zeros(n), radii, quad)
            consts = curve.values - theta * kvals
            spread = float(consts.max() - consts.min())
            worst = max(worst, spread)
            worst = max(worst, float(max(0.0, consts.max() - 0.0)))
            worst = max(worst, float(max(0.0, floor - consts.min())))
            count += radii.size
            note_parts.append(f"{kind}-const={consts.mean():.6g} floor={floor:.6g}")
    worst = max(worst, defect)
    return PropertyReport(
        name="averages-of-tangent",
        sample_count=count,
        worst_violation=worst,
        tolerance=tol,
        passed=worst <= tol,
        note="; ".join(note_parts),
    )


# ---------------------------------------------------------------------------
# density decay along paths, upper semicontinuity
# ---------------------------------------------------------------------------


@dataclass
class DecayReport:
    path_norms: np.ndarray
    path_thetas: np.ndarray
    center_theta: float
    center_bracket: float
    usc_ok: bool

    def to_dict(self) -> dict:
        return {
            "path_norms": [float(x) for x in self.path_norms],
            "path_thetas": [float(x) for x in self.path_thetas],
            "center_theta": self.center_theta,
            "center_bracket": self.center_bracket,
            "usc_ok": bool(self.usc_ok),
        }


def density_decay_check(field: ScalarField, x0, path_points, p: float,
                        quad: SphereQuad | None = None, levels: int = 6) -> DecayReport:
    """Volume densities along a path into a singular center.

    Radii at each path point scale with the distance to the singular
    set, so every ball stays inside the smooth region.  The upper
    semicontinuity probe checks limsup theta(path) <= theta(center)
    within brackets.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    quad = quad or sphere_quad(field.n)
    thetas = []
    norms = []
    for x in path_points:
        x = np.asarray(x, dtype=float).reshape(-1)
        d = field.distance_to_singular(x)
        if d <= 0.0:
            raise DomainError("path point lies on the singular set")
        radii = (d / 2.0) * 0.5 ** np.arange(levels)
        rep = densities(field, x, p, radii=radii, quad=quad, kinds=("V",))
        thetas.append(rep.theta["V"])
        norms.append(float(np.linalg.norm(x - x0)))

    d0 = min(
        (float(np.linalg.norm(np.asarray(s) - x0)) for s in field.singular_points
         if np.linalg.norm(np.asarray(s) - x0) > 0.0),
        default=1.0,
    )
    radii0 = (d0 / 2.0) * 0.5 ** np.arange(levels)
    rep0 = densities(field, x0, p, radii=radii0, quad=quad, kinds=("V",))
    theta0 = rep0.theta["V"]
    bracket0 = rep0.bracket["V"]
    usc_ok = max(thetas) <= theta0 + bracket0 + 1e-6
    return DecayReport(
        path_norms=np.asarray(norms),
        path_thetas=np.asarray(thetas),
        center_theta=theta0,
        center_bracket=bracket0,
        usc_ok=usc_ok,
    )


# ---------------------------------------------------------------------------
# Hoelder machinery (1 <= p < 2)
# ---------------------------------------------------------------------------


def holder_estimate(field: ScalarField, x0, rho: float, big_r: float, p: float,
                    quad: SphereQuad | None = None) -> float:
    """Closed-form Hoelder-norm bound on B_rho from the max average at R."""
    if not 1.0 <= p < 2.0:
        raise DomainError("Hoelder estimates need 1 <= p < 2")
    alpha = 2.0 - p
    if not (0.0 < 3.0 * rho <= big_r):
        raise DomainError("need 0 < 3 rho <= R")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    u0 = field.at(x0)
    if not math.isfinite(u0):
        raise DomainError("field must be finite at the center")
    m_r = spherical_max(field, x0, big_r, quad or sphere_quad(field.n))
    lead = big_r**alpha / ((big_r - rho) ** alpha - rho**alpha)
    return float(lead * (m_r - u0) / big_r**alpha)


def infinitesimal_holder(field: ScalarField, x0, p: float, radii=None,
                         quad: SphereQuad | None = None) -> float:
    """(M(u, x0, r) - u(x0)) / r^alpha at the deepest radius; decreasing in r."""
    if not 1.0 <= p < 2.0:
        raise DomainError("needs 1 <= p < 2")
    alpha = 2.0 - p
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    quad = quad or sphere_quad(field.n)
    u0 = field.at(x0)
    r = float(radii[-1])
    return float((spherical_max(field, x0, r, quad) - u0) / r**alpha)


# ---------------------------------------------------------------------------
# catalog fields
# ---------------------------------------------------------------------------


def riesz_kernel_field(theta: float, p: float, n: int, center=None) -> ScalarField:
    """theta * K_p(|x - c|) in the standard normalization."""
    if theta < 0:
        raise DomainError("theta must be >= 0")
    spec = KernelSpec(p=p)
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float).reshape(-1)

    def values(pts):
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts - c[None, :], axis=1)
        out = np.full(r.shape, -np.inf)
        pos = r > 0.0
        with np.errstate(divide="ignore"):
            out[pos] = theta * np.asarray(kernel(spec, r[pos]))
        if p < 2.0:
            out[~pos] = 0.0
        return out

    def analytic_max(x0, r):
        return theta * kernel(spec, r + float(np.linalg.norm(np.asarray(x0) - c)))

    reference = None
    if p < 2.0:
        reference = float(theta * kernel(spec, np.linalg.norm(c))) if np.linalg.norm(c) > 0 else 0.0
    certified = ("min-max",) if p > n else ("p-convex", "min-max")
    return ScalarField(
        n=n,
        values=values,
        name=f"riesz(theta={theta:g},p={p:g})",
        singular_points=(c,),
        reference_value=reference,
        analytic_max=analytic_max,
        certified_for=certified,
    )


def log_modulus_coordinate_field(n_complex: int = 2, slot: int = 0) -> ScalarField:
    """log |z_slot| on C^nc, realized on R^(2 nc) with z_k = (x_k, x_{k+nc})."""
    if not 0 <= slot < n_complex:
        raise DomainError("slot out of range")
    n = 2 * n_complex

    def values(pts):
        pts = np.asarray(pts, dtype=float)
        mod = np.hypot(pts[:, slot], pts[:, slot + n_complex])
        with np.errstate(divide="ignore"):
            return np.log(mod)

    def singular_distance(pts):
        pts = np.asarray(pts, dtype=float)
        return np.hypot(pts[:, slot], pts[:, slot + n_complex])

    def analytic_max(x0, r):
        x0 = np.asarray(x0, dtype=float)
        return math.log(math.hypot(x0[slot], x0[slot + n_complex]) + r)

    return ScalarField(
        n=n,
        values=values,
        name=f"log|z_{slot + 1}| on C^{n_complex}",
        singular_distance=singular_distance,
        reference_value=None,
        analytic_max=analytic_max,
        certified_for=("complex(p-convex)",),
    )


def partial_kernel_field(p: float, m: int, n: int) -> ScalarField:
    """Barred kernel of the first m coordinates: flow-invariant and on the
    min-max boundary off the singular slice."""
    if not 1 <= m < n:
        raise DomainError("need 1 <= m < n")
    spec = KernelSpec(p=p, normalization="barred")

    def values(pts):
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts[:, :m], axis=1)
        out = np.full(r.shape, -np.inf)
        pos = r > 0.0
        out[pos] = np.asarray(kernel(spec, r[pos]))
        if p < 2.0:
            out[~pos] = 0.0
        return out

    def singular_distance(pts):
        return np.linalg.norm(np.asarray(pts, dtype=float)[:, :m], axis=1)

    def analytic_max(x0, r):
        x0 = np.asarray(x0, dtype=float)
        return kernel(spec, float(np.linalg.norm(x0[:m])) + r)

    return ScalarField(
        n=n,
        values=values,
        name=f"partial-kernel(p={p:g},m={m})",
        singular_distance=singular_distance,
        reference_value=0.0 if p < 2.0 else None,
        analytic_max=analytic_max,
        certified_for=("min-max",),
    )


def partial_kernel_hessian(p: float, m: int, x) -> np.ndarray:
    """Exact Hessian of the partial kernel at a point off the singular slice.

    The nonzero block is the kernel Hessian within the first m
    coordinates; eigenvalues are -(p-1), 0 (n-m times) and 1 (m-1
    times), all divided by |x_m|^p.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size < m:
        raise DomainError("point has fewer than m coordinates")
    xm = x[:m]
    r = float(np.linalg.norm(xm))
    if r == 0.0:
        raise DomainError("Hessian undefined on the singular slice")
    e = xm / r
    pe = np.outer(e, e)
    block = r ** (-p) * (np.eye(m) - pe - (p - 1.0) * pe)
    out = np.zeros((x.size, x.size))
    out[:m, :m] = block
    return out


def newtonian_potential_field(p: float, masses, n: int) -> ScalarField:
    """Sum of weighted kernels theta_i K_p(|x - a_i|) (a discrete-measure
    potential); classically subharmonic for the Laplacian when p <= n."""
    if p > n:
        raise DomainError("potential needs p <= n for subharmonicity")
    spec = KernelSpec(p=p)
    weights = np.asarray([m[0] for m in masses], dtype=float)
    if np.any(weights < 0):
        raise DomainError("masses must be >= 0")
    centers = np.asarray([np.asarray(m[1], dtype=float) for m in masses])

    def values(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[0])
        for w, c in zip(weights, centers):
            r = np.linalg.norm(pts - c[None, :], axis=1)
            term = np.full(r.shape, -np.inf)
            pos = r > 0.0
            with np.errstate(divide="ignore"):
                term[pos] = w * np.asarray(kernel(spec, r[pos]))
            if p < 2.0:
                term[~pos] = 0.0
            out = out + term
        return out

    singular = tuple(centers[i] for i in range(centers.shape[0]) if weights[i] > 0)
    analytic = None
    if len(singular) == 1 and np.allclose(centers[0], 0.0):

        def analytic(x0, r):
            return weights[0] * kernel(spec, r + float(np.linalg.norm(x0)))

    return ScalarField(
        n=n,
        values=values,
        name=f"potential(p={p:g},{len(masses)} masses)",
        singular_points=singular,
        reference_value=None,
        analytic_max=analytic,
        certified_for=("laplacian",),
    )


def max_of_fields(*fields: ScalarField) -> ScalarField:
    """Pointwise maximum; subharmonicity tags propagate by intersection."""
    if not fields:
        raise DomainError("need at least one field")
    n = fields[0].n
    if any(f.n != n for f in fields):
        raise DomainError("dimension mismatch")

    def values(pts):
        return np.max(np.stack([f.values(pts) for f in fields]), axis=0)

    analytic = None
    if all(f.analytic_max is not None for f in fields):

        def analytic(x0, r):
            return max(f.analytic_max(x0, r) for f in fields)

    singular = tuple(s for f in fields for s in f.singular_points)
    dists = [f.singular_distance for f in fields if f.singular_distance is not None]
    sing_dist = None
    if dists:

        def sing_dist(pts):
            return np.min(np.stack([d(pts) for d in dists]), axis=0)

    refs = [f.reference_value for f in fields]
    reference = None
    if all(r is not None and math.isfinite(r) for r in refs):
        reference = max(refs)
    certified = tuple(set.intersection(*(set(f.certified_for) for f in fields)))
    return ScalarField(
        n=n,
        values=values,
        name="max(" + ",".join(f.name for f in fields) + ")",
        singular_points=singular,
        singular_distance=sing_dist,
        reference_value=reference,
        domain_radius=min(f.domain_radius for f in fields),
        analytic_max=analytic,
        certified_for=certified,
    )


def plus_quadratic_field(base: ScalarField, quadratic) -> ScalarField:
    """base + (1/2) x^T A x; a scalar A means that multiple of the identity."""
    if np.isscalar(quadratic):
        a = float(quadratic) * np.eye(base.n)
    else:
        a = 0.5 * (np.asarray(quadratic, dtype=float) + np.asarray(quadratic, dtype=float).T)
    base_values = base.values

    def values(pts):
        pts = np.asarray(pts, dtype=float)
        return base_values(pts) + 0.5 * np.einsum("mi,ij,mj->m", pts, a, pts)

    reference = base.reference_value
    return ScalarField(
        n=base.n,
        values=values,
        name=f"{base.name}+quadratic",
        singular_points=base.singular_points,
        singular_distance=base.singular_distance,
        reference_value=reference,
        domain_radius=base.domain_radius,
        certified_for=base.certified_for,
    )


def quadratic_field(a, n: int | None = None) -> ScalarField:
    """Smooth field (1/2) x^T A x (zero density everywhere)."""
    if np.isscalar(a):
        if n is None:
            raise DomainError("scalar quadratic needs n")
        a = float(a) * np.eye(n)
    a = 0.5 * (np.asarray(a, dtype=float) + np.asarray(a, dtype=float).T)
    n = a.shape[0]

    def values(pts):
        pts = np.asarray(pts, dtype=float)
        return 0.5 * np.einsum("mi,ij,mj->m", pts, a, pts)

    return ScalarField(
        n=n,
        values=values,
        name="quadratic",
        reference_value=0.0,
        certified_for=("smooth",),
    )


def zero_field(n: int) -> ScalarField:
    return ScalarField(
        n=n,
        values=lambda pts: np.zeros(np.asarray(pts).shape[0]),
        name="zero",
        reference_value=0.0,
        analytic_max=lambda x0, r: 0.0,
        certified_for=("smooth",),
    )


_CATALOG = {
    "riesz_kernel": riesz_kernel_field,
    "log_modulus_coord": log_modulus_coordinate_field,
    "partial_kernel": partial_kernel_field,
    "newtonian_potential": newtonian_potential_field,
    "max_of": max_of_fields,
    "plus_quadratic": plus_quadratic_field,
    "quadratic": quadratic_field,
    "zero": zero_field,
}


def catalog_field(name: str, *args, **kwargs) -> ScalarField:
    if name not in _CATALOG:
        raise DomainError(f"unknown catalog field {name!r}; known: {sorted(_CATALOG)}")
    return _CATALOG[name](*args, **kwargs)
