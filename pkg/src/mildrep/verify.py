"""Numerical checks of the structural properties of global minimizers.

Every function takes a potential and a canonical measure and returns a
:class:`~mildrep.report.Check`. :func:`verify_all` runs the applicable ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.stats import qmc

from .energy import energy, field_hessian, interaction_matrix, potential_field
from .geometry import gamma_alpha, in_double_cone, ExclusionShape, in_exclusion_shape
from .measure import DiscreteMeasure, cardinality, diameter
from .optimize import SearchConfig, minimize
from .potentials import HypothesisError, RadialPotential, check_c4_bound, convexity_radius
from .report import Check, VerificationReport

EQ_TOL = 1e-7
EIG_TOL = 1e-8
EL_SAMPLES = 10_000
INTERVAL_TOL = 1e-9
PAIR_THRESHOLD_REL = 0.05


def sample_ball(center: np.ndarray, radius: float, n_points: int) -> np.ndarray:
    """Deterministic samples of the closed ball: a uniform grid in 1D, Halton points otherwise."""
    center = np.asarray(center, dtype=float).reshape(-1)
    n = center.size
    if n == 1:
        return center + np.linspace(-radius, radius, n_points)[:, None]
    sampler = qmc.Halton(d=n, scramble=False)
    pts = np.empty((0, n))
    while pts.shape[0] < n_points:
        cube = 2.0 * sampler.random(2 * n_points) - 1.0
        pts = np.vstack([pts, cube[np.einsum("ij,ij->i", cube, cube) <= 1.0]])
    return center + radius * pts[:n_points]


def check_euler_lagrange(
    p: RadialPotential,
    m: DiscreteMeasure,
    grid_radius: float | None = None,
    grid_points: int = EL_SAMPLES,
    tol: float = EQ_TOL,
) -> Check:
    """``V = 2E`` on the support and ``V >= 2E`` on a sampled ball.

    The ball is centred at the barycenter with radius at least
    ``spread + R``; beyond it every atom is at distance ``>= R`` so
    ``V >= 0 >= 2E`` provided ``E <= 0``, which is asserted.
    """
    E = energy(p, m)
    two_e = 2.0 * E
    V_atoms = np.atleast_1d(potential_field(p, m, m.points))
    res1 = float(np.max(np.abs(V_atoms - two_e)))
    c = m.barycenter()
    spread = float(np.max(np.linalg.norm(m.points - c, axis=1)))
    radius = max(2.0 * p.R if grid_radius is None else float(grid_radius), spread + p.R)
    xs = sample_ball(c, radius, grid_points)
    V = potential_field(p, m, xs)
    gap = two_e - V
    k = int(np.argmax(gap))
    res2 = float(max(gap[k], 0.0))
    details = (
        f"max|V(x_i)-2E|={res1!r}; max(2E-V)+={res2!r} at {xs[k].tolist()} "
        f"over {grid_points} samples of radius {radius!r}; E={E!r}"
    )
    metric = max(res1, res2)
    if E > 0:
        # outside the sampled ball V >= 0 no longer implies V >= 2E
        return Check("euler_lagrange", False, max(metric - tol, E), tol, details + "; E>0, tail bound invalid")
    return Check.from_metric("euler_lagrange", metric, tol, details)


def second_variation_min_eig(G: np.ndarray) -> float:
    """Smallest eigenvalue of ``G`` restricted to ``{a : sum a = 0}``."""
    k = G.shape[0]
    if k < 2:
        return math.inf
    P = null_space(np.ones((1, k)))
    return float(np.linalg.eigvalsh(P.T @ G @ P)[0])


def check_second_variation(
    p: RadialPotential,
    m: DiscreteMeasure,
    tol: float = EIG_TOL,
    support_ball: tuple[np.ndarray, float] | None = None,
) -> Check:
    """Nonnegativity of ``a^T G a`` for zero-sum ``a`` supported on the atoms.

    ``support_ball=(x0, delta)`` restricts the test measures to atoms in
    ``B(x0, delta)``, the localized form of the condition.
    """
    idx = np.arange(len(m))
    if support_ball is not None:
        x0, delta = support_ball
        idx = np.flatnonzero(np.linalg.norm(m.points - np.asarray(x0, float), axis=1) < delta)
    if idx.size < 2:
        return Check("second_variation", True, -tol, tol, "vacuous: fewer than two atoms")
    G = interaction_matrix(p, m)[np.ix_(idx, idx)]
    lam = second_variation_min_eig(G)
    return Check.from_metric("second_variation", -lam, tol, f"lambda_min={lam!r} on {idx.size} atoms")


def check_pairwise_nonpositive(p: RadialPotential, m: DiscreteMeasure, tol: float = EIG_TOL) -> Check:
    G = interaction_matrix(p, m)
    worst = float(G.max()) if len(m) > 1 else 0.0
    return Check.from_metric("pairwise_nonpositive", worst, tol, f"max W(x_i-x_j)={worst!r}")


def check_diameter(p: RadialPotential, m: DiscreteMeasure, tol: float = EIG_TOL) -> Check:
    d = diameter(m)
    return Check.from_metric("diameter", d - p.R, tol, f"diameter={d!r}, R={p.R!r}")


def sqrt_triangle_violation(G: np.ndarray) -> float:
    """Largest ``sqrt(-W(x1+x2)) - sqrt(-W(x1)) - sqrt(-W(x2))`` over admissible triples.

    For atoms ``(y0, y1, y2)`` write ``x1 = y1 - y0`` and ``x2 = y0 - y2``;
    only triples with all three pairwise values negative count.
    """
    k = G.shape[0]
    if k < 3:
        return -math.inf
    neg = G < 0
    S = np.sqrt(np.where(neg, -G, 0.0))
    # axes (i0, i1, i2)
    lhs = S[:, :, None].transpose(1, 0, 2) + S[:, None, :]  # S[i1, i0] + S[i0, i2]
    rhs = S[None, :, :]  # S[i1, i2]
    ok = neg[:, :, None].transpose(1, 0, 2) & neg[:, None, :] & neg[None, :, :]
    viol = np.where(ok, rhs - lhs, -np.inf)
    return float(viol.max())


def check_sqrt_triangle(p: RadialPotential, m: DiscreteMeasure, tol: float = INTERVAL_TOL) -> Check:
    viol = sqrt_triangle_violation(interaction_matrix(p, m))
    if viol == -math.inf:
        return Check("sqrt_triangle", True, -tol, tol, "vacuous: no admissible triple")
    return Check.from_metric("sqrt_triangle", viol, tol, f"max violation={viol!r}")


def check_cone_exclusion(
    p: RadialPotential,
    m: DiscreteMeasure,
    pair_distance_threshold: float | None = None,
    tol: float = 0.0,
) -> Check:
    """No third atom inside the double cone ``C_{gamma_alpha}`` of a close pair.

    Pairs farther apart than the threshold are only reported (the exclusion
    is an asymptotic statement), as is membership in the full shape.
    """
    thr = PAIR_THRESHOLD_REL * p.R if pair_distance_threshold is None else float(pair_distance_threshold)
    gam = gamma_alpha(p.alpha)
    k = len(m)
    pts = m.points
    hard = advisory_cone = advisory_shape = close_pairs = 0
    for i in range(k):
        for j in range(i + 1, k):
            others = np.delete(pts, [i, j], axis=0)
            if others.shape[0] == 0:
                continue
            in_cone = np.atleast_1d(in_double_cone(gam, pts[i], pts[j], others))
            in_shape = np.atleast_1d(in_exclusion_shape(ExclusionShape(p.alpha, pts[i], pts[j]), others))
            if np.linalg.norm(pts[i] - pts[j]) <= thr:
                close_pairs += 1
                hard += int(in_cone.sum())
                advisory_shape += int(in_shape.sum())
            else:
                advisory_cone += int(in_cone.sum())
                advisory_shape += int(in_shape.sum())
    details = (
        f"threshold={thr!r} (heuristic); close pairs={close_pairs}; cone violations={hard}; "
        f"advisory: cone hits above threshold={advisory_cone}, shape hits={advisory_shape}"
    )
    return Check.from_metric("cone_exclusion", float(hard), tol, details)


def hessian_applicable(p: RadialPotential) -> str | None:
    """Reason the strict Hessian check does not apply, or ``None``."""
    if p.alpha >= 4:
        return "the fourth-derivative hypothesis requires alpha<4"
    if p.is_power_law and not check_c4_bound(p).passed:
        return "fourth-derivative bound fails for alpha<3"
    return None


def check_hessian_positivity(p: RadialPotential, m: DiscreteMeasure, tol: float | None = None) -> Check:
    """Strict positivity of ``Hess V`` at every atom."""
    reason = hessian_applicable(p)
    if reason:
        return Check.skipped("hessian_positivity", reason)
    strict = 1e-6 * abs(float(p.w(p.R / 2))) if tol is None else float(tol)
    H = field_hessian(p, m, m.points)
    H = H.reshape(len(m), m.dim, m.dim)
    mins = np.array([np.linalg.eigvalsh(h)[0] for h in H])
    return Check.from_metric(
        "hessian_positivity",
        strict - float(mins.min()),
        0.0,
        f"strict threshold={strict!r}; per-atom lambda_min={mins.tolist()}",
    )


def max_atoms_in_open_interval(m: DiscreteMeasure, length: float) -> int:
    """Largest number of atoms inside any open interval of the given length."""
    x = np.sort(m.points[:, 0])
    best = 1
    for i in range(x.size):
        j = np.searchsorted(x, x[i] + length, side="left")
        best = max(best, int(j - i))
    return best


def cardinality_bound_1d(p: RadialPotential) -> float:
    r = convexity_radius(p)
    return 2 * math.ceil(p.R / r) + 1


def check_cardinality_1d(p: RadialPotential, m: DiscreteMeasure, tol: float = INTERVAL_TOL) -> Check:
    """``card <= 2 ceil(R/r) + 1`` and at most two atoms per interval of length ``r - tol``."""
    if m.dim != 1:
        return Check.skipped("cardinality_1d", "one-dimensional check")
    try:
        r = convexity_radius(p)
    except HypothesisError as exc:
        return Check.skipped("cardinality_1d", str(exc))
    bound = 2 * math.ceil(p.R / r) + 1
    card = cardinality(m)
    crowd = max_atoms_in_open_interval(m, r - tol)
    x = np.sort(m.points[:, 0])
    span = float(np.min(x[2:] - x[:-2])) if x.size >= 3 else math.inf
    residual = max(card - bound, (r - tol) - span)
    passed = card <= bound and crowd <= 2
    details = (
        f"cardinality={card}, bound={bound} (R={p.R!r}, r={r!r}); "
        f"max atoms in open interval of length r-tol={crowd}; min triple span={span!r}"
    )
    return Check("cardinality_1d", passed, float(residual), tol, details)


def even_power_bound(p: RadialPotential) -> int | None:
    if not p.is_power_law:
        return None
    a, b = p.a, p.b
    if a.is_integer() and b.is_integer() and int(a) % 2 == 0 and int(b) % 2 == 0:
        return int(a) // 2
    return None


def check_even_power_bound(p: RadialPotential, m: DiscreteMeasure) -> Check:
    bound = even_power_bound(p)
    if bound is None or m.dim != 1:
        return Check.skipped("even_power_bound", "needs a 1D power law with even integer exponents")
    card = cardinality(m)
    return Check.from_metric("even_power_bound", float(card - bound), 0.0, f"cardinality={card}, a/2={bound}")


def check_energy_consistency(p: RadialPotential, m: DiscreteMeasure, tol: float = 1e-12) -> Check:
    """``E = 1/2 sum_i m_i V(x_i)``."""
    E = energy(p, m)
    V = np.atleast_1d(potential_field(p, m, m.points))
    half = 0.5 * math.fsum(m.masses * V)
    err = abs(E - half) / max(1.0, abs(E))
    return Check.from_metric("energy_consistency", err, tol, f"E={E!r}, 1/2 sum m V={half!r}")


@dataclass(frozen=True)
class Tolerances:
    equality: float = EQ_TOL
    eigen: float = EIG_TOL
    triangle: float = INTERVAL_TOL
    interval: float = INTERVAL_TOL
    el_samples: int = EL_SAMPLES
    grid_radius: float | None = None
    pair_distance_threshold: float | None = None
    hessian_strict: float | None = None


def verify_all(p: RadialPotential, m: DiscreteMeasure, tols: Tolerances | None = None) -> VerificationReport:
    """Run every check that applies to ``(p, m)``."""
    t = tols or Tolerances()
    checks = [
        check_energy_consistency(p, m),
        check_euler_lagrange(p, m, t.grid_radius, t.el_samples, t.equality),
        check_second_variation(p, m, t.eigen),
        check_pairwise_nonpositive(p, m, t.eigen),
        check_diameter(p, m, t.eigen),
        check_sqrt_triangle(p, m, t.triangle),
        check_cone_exclusion(p, m, t.pair_distance_threshold),
        check_hessian_positivity(p, m, t.hessian_strict),
    ]
    if m.dim == 1:
        checks.append(check_cardinality_1d(p, m, t.interval))
        checks.append(check_even_power_bound(p, m))
    return VerificationReport(checks)


def sweep_uniform_bound(family, cfg: SearchConfig) -> dict:
    """Minimize for each ``(a, b)`` power law and report the support sizes.

    The largest cardinality is empirical evidence for a uniform bound over
    the family; nothing is asserted.
    """
    members = []
    for a, b in family:
        p = RadialPotential.power_law(a, b)
        res = minimize(p, cfg)
        members.append(
            {
                "a": p.a,
                "b": p.b,
                "cardinality": cardinality(res.measure),
                "energy": res.energy,
                "converged": res.converged,
            }
        )
    return {
        "members": members,
        "max_cardinality": max((mem["cardinality"] for mem in members), default=None),
    }
