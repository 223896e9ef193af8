"""Search for global minimizers of the interaction energy over atomic measures.

Each start alternates preconditioned gradient descent on the atom positions
with projected gradient descent on the masses, prunes dead atoms, merges
coincident ones and finishes with a Newton polish of the first-order system.
Once a start is stationary, the field ``V`` is probed for points where it
drops below ``2E``; such points receive a new atom and the descent resumes.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from .energy import atom_fields, energy, field_gradient, potential_field
from .measure import DiscreteMeasure, canonicalize, prune
from .potentials import DomainError, RadialPotential

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchConfig:
    dim: int = 1
    k_max: int = 12
    n_starts: int = 64
    seed: int = 0
    step_init: float = 1.0
    grad_tol: float = 1e-9
    merge_tol: float = 1e-7
    max_iters: int = 5000
    mass_iters: int = 200
    min_mass: float = 1e-10
    polish_below: float = 1e-3
    max_insertions: int = 8

    def __post_init__(self):
        for name in ("dim", "k_max", "n_starts", "max_iters", "mass_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("step_init", "grad_tol", "merge_tol", "min_mass"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SearchResult:
    measure: DiscreteMeasure
    energy: float
    grad_norm: float
    mass_residual: float
    converged: bool
    n_starts_converged: int
    best_start_index: int
    seed: int
    escaped: bool = False
    history: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = self.measure.to_dict()
        out.update(
            energy=float(self.energy),
            grad_norm=float(self.grad_norm),
            converged=bool(self.converged),
            seed=int(self.seed),
        )
        return out


class NonConvergenceError(RuntimeError):
    def __init__(self, result: SearchResult):
        super().__init__("no start reached the stationarity tolerance")
        self.result = result


# simplex ----------------------------------------------------------------

def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{m >= 0, sum m = 1}`` (sort based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def mass_kkt_residual(values: np.ndarray, masses: np.ndarray) -> float:
    """Departure of ``V_i = G m`` from the simplex KKT conditions.

    At a KKT point all atoms carrying mass share ``V_i = 2E`` and atoms
    without mass have ``V_i >= 2E``.
    """
    lam = float(masses @ values)
    active = masses > 0
    eq = np.max(np.abs(values[active] - lam)) if np.any(active) else 0.0
    ineq = np.max(np.maximum(lam - values[~active], 0.0)) if np.any(~active) else 0.0
    return float(max(eq, ineq))


def _mass_step(G: np.ndarray, m: np.ndarray, iters: int) -> np.ndarray:
    k = m.size
    if k == 1:
        return m
    L = float(np.max(np.abs(np.linalg.eigvalsh(G))))
    if L == 0:
        return m
    eta = 1.0 / L
    for _ in range(iters):
        m_new = project_simplex(m - eta * (G @ m))
        if np.max(np.abs(m_new - m)) < 1e-16:
            return m_new
        m = m_new
    return m


# pair kernels for the Newton polish ------------------------------------

def _pair_terms(p: RadialPotential, x: np.ndarray):
    """Pairwise ``W``, ``grad W`` and ``Hess W`` at ``x_i - x_j``."""
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    off = dist > 0
    W = np.where(off, np.asarray(p.w(dist)), 0.0)
    d1r = p.dw_over_r(dist)
    grad = d1r[..., None] * diff
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(off[..., None], diff / dist[..., None], 0.0)
    d2 = np.where(off, np.asarray(p.d2w(dist)), 0.0)
    n = x.shape[1]
    hess = (d2 - d1r)[..., None, None] * unit[..., :, None] * unit[..., None, :] + d1r[
        ..., None, None
    ] * np.eye(n)
    return W, grad, hess


def _kkt_system(p: RadialPotential, x: np.ndarray, m: np.ndarray, lam: float):
    k, n = x.shape
    W, grad, hess = _pair_terms(p, x)
    g = np.einsum("j,ijk->ik", m, grad)
    V = W @ m
    F = np.concatenate([g.ravel(), V - lam, [m.sum() - 1.0]])

    J = np.zeros((k * n + k + 1, k * n + k + 1))
    mh = m[None, :, None, None] * hess  # m_j H(x_i - x_j)
    for i in range(k):
        rows = slice(i * n, (i + 1) * n)
        for j in range(k):
            cols = slice(j * n, (j + 1) * n)
            if i == j:
                J[rows, cols] = mh[i].sum(axis=0)
            else:
                J[rows, cols] = -mh[i, j]
        J[rows, k * n : k * n + k] = grad[i].T
        # d V_i / d x_i and d V_i / d x_j
        J[k * n + i, rows] = g[i]
        for j in range(k):
            if j != i:
                J[k * n + i, j * n : (j + 1) * n] = -m[j] * grad[i, j]
    J[k * n : k * n + k, k * n : k * n + k] = W
    J[k * n : k * n + k, -1] = -1.0
    J[-1, k * n : k * n + k] = 1.0
    return F, J


def newton_polish(p: RadialPotential, x: np.ndarray, m: np.ndarray, max_steps: int = 30, tol: float = 1e-13):
    """Least-squares Newton iteration on the first-order system.

    Unknowns are positions, masses and the multiplier ``2E``; translations
    (and rotations) make the Jacobian singular, hence ``lstsq``. Returns
    ``None`` if the iteration leaves the simplex interior or stalls.
    """
    k, n = x.shape
    lam = float(m @ (atom_fields(p, x, m)[1]))
    F, J = _kkt_system(p, x, m, lam)
    res = float(np.max(np.abs(F)))
    for _ in range(max_steps):
        if res <= tol:
            break
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        t = 1.0
        while t > 1e-4:
            x_new = x + t * step[: k * n].reshape(k, n)
            m_new = m + t * step[k * n : k * n + k]
            lam_new = lam + t * step[-1]
            if np.all(m_new > 0):
                F_new, J_new = _kkt_system(p, x_new, m_new, lam_new)
                res_new = float(np.max(np.abs(F_new)))
                if res_new < res:
                    break
            t *= 0.5
        else:
            return None
        x, m, lam, F, J, res = x_new, m_new, lam_new, F_new, J_new, res_new
    m = m / m.sum()
    return x, m


# candidate probes for new atoms ----------------------------------------

def _field_minima(p: RadialPotential, x: np.ndarray, m: np.ndarray, rng, n_probe: int = 4000):
    """Approximate local minima of ``V`` reached from random probes."""
    n = x.shape[1]
    center = m @ x
    radius = float(np.max(np.linalg.norm(x - center, axis=1))) + p.R
    dirs = rng.standard_normal((n_probe, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    probes = center + dirs * radius * rng.random((n_probe, 1)) ** (1.0 / n)
    mu = DiscreteMeasure(x, m / m.sum())

    vals = potential_field(p, mu, probes)
    best = probes[np.argsort(vals)[:8]]
    for _ in range(200):
        g = field_gradient(p, mu, best)
        best = best - 0.5 * g
    return best, potential_field(p, mu, best)


# single start -----------------------------------------------------------

def _initial_state(p: RadialPotential, cfg: SearchConfig, rng):
    k, n = cfg.k_max, cfg.dim
    dirs = rng.standard_normal((k, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = p.R * rng.random((k, 1)) ** (1.0 / n)
    return dirs * radii, np.full(k, 1.0 / k)


def _clean(x, m, cfg: SearchConfig):
    keep = m >= cfg.min_mass
    x, m = x[keep], m[keep]
    mu = canonicalize(prune(x, m, cfg.min_mass), cfg.merge_tol)
    return np.array(mu.points), np.array(mu.masses)


def _residuals(p, x, m):
    G, V, g = atom_fields(p, x, m)
    return G, V, g, float(np.max(np.linalg.norm(g, axis=1))), mass_kkt_residual(V, m)


def run_start(p: RadialPotential, cfg: SearchConfig, rng) -> dict:
    """One descent run; returns a dict with the final state and diagnostics."""
    x, m = _initial_state(p, cfg, rng)
    step = cfg.step_init
    history: list[float] = []
    escaped = False
    insertions = 0
    converged = False
    it = 0
    while it < cfg.max_iters:
        it += 1
        G, V, g = atom_fields(p, x, m)
        E = 0.5 * float(m @ V)
        history.append(E)
        # positions: preconditioned direction -grad V(x_i), a descent direction for E
        slope = float(np.sum(m * np.einsum("ik,ik->i", g, g)))
        t = min(step * 2.0, 1e3 * cfg.step_init)
        while t > 1e-14:
            x_new = x - t * g
            E_new = 0.5 * float(m @ atom_fields(p, x_new, m)[1])
            if E_new <= E - 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            x_new, E_new = x, E
        x, step = x_new, max(t, 1e-12)
        far = np.linalg.norm(x - m @ x, axis=1) > 10 * p.R
        if np.any(far):
            escaped = True
            c = m @ x
            x[far] = c + (x[far] - c) * (10 * p.R / np.linalg.norm(x[far] - c, axis=1))[:, None]
        # masses
        G = atom_fields(p, x, m)[0]
        m = _mass_step(G, m, cfg.mass_iters)
        history.append(0.5 * float(m @ G @ m))
        x, m = _clean(x, m, cfg)

        G, V, g, pos_res, mass_res = _residuals(p, x, m)
        if max(pos_res, mass_res) < cfg.polish_below:
            polished = newton_polish(p, x, m)
            if polished is not None:
                xp, mp = polished
                _, Vp, gp, pr, mr = _residuals(p, xp, mp)
                Ep = 0.5 * float(mp @ Vp)
                if max(pr, mr) < max(pos_res, mass_res) and Ep <= 0.5 * float(m @ V) + 1e-12:
                    x, m = _clean(xp, mp, cfg)
                    G, V, g, pos_res, mass_res = _residuals(p, x, m)
                    history.append(0.5 * float(m @ V))
        if pos_res < cfg.grad_tol and mass_res < cfg.grad_tol:
            # stationary: look for a point where a new atom would lower the energy
            two_e = float(m @ V)
            cands, vals = _field_minima(p, x, m, rng)
            j = int(np.argmin(vals))
            if vals[j] < two_e - cfg.grad_tol and len(m) < cfg.k_max and insertions < cfg.max_insertions:
                insertions += 1
                x = np.vstack([x, cands[j]])
                m = np.append(m, 0.0)
                continue
            converged = True
            break

    _, V, g, pos_res, mass_res = _residuals(p, x, m)
    x = x - m @ x
    mu = DiscreteMeasure(x, m / math.fsum(m))
    return {
        "measure": mu,
        "energy": energy(p, mu),
        "grad_norm": pos_res,
        "mass_residual": mass_res,
        "converged": converged,
        "escaped": escaped,
        "history": history,
        "iterations": it,
    }


def start_rngs(seed: int, n_starts: int) -> list[np.random.Generator]:
    """Independent per-start generators spawned from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_starts)]


def minimize(p: RadialPotential, cfg: SearchConfig, raise_on_failure: bool = False) -> SearchResult:
    """Best measure over ``cfg.n_starts`` independent descent runs.

    Ties in energy go to the lowest start index. Non-converged starts only
    win when no start converged; the result then has ``converged=False``
    (or :class:`NonConvergenceError` is raised if requested).
    """
    runs = [run_start(p, cfg, rng) for rng in start_rngs(cfg.seed, cfg.n_starts)]
    conv = [i for i, r in enumerate(runs) if r["converged"]]
    pool = conv if conv else list(range(len(runs)))
    best = min(pool, key=lambda i: (runs[i]["energy"], i))
    r = runs[best]
    result = SearchResult(
        measure=r["measure"],
        energy=r["energy"],
        grad_norm=r["grad_norm"],
        mass_residual=r["mass_residual"],
        converged=bool(conv),
        n_starts_converged=len(conv),
        best_start_index=best,
        seed=cfg.seed,
        escaped=r["escaped"],
        history=r["history"],
    )
    log.info(
        "minimize: best start %d, energy %.17g, %d atoms, %d/%d converged",
        best, result.energy, len(result.measure), len(conv), cfg.n_starts,
    )
    if not conv and raise_on_failure:
        raise NonConvergenceError(result)
    return result


# brute force oracle -----------------------------------------------------

def _mass_grid(k: int, resolution: int) -> np.ndarray:
    combos = [
        c for c in itertools.product(range(resolution + 1), repeat=k - 1) if sum(c) <= resolution
    ]
    a = np.array(combos, dtype=float).reshape(-1, k - 1)
    return np.hstack([a, resolution - a.sum(axis=1, keepdims=True)]) / resolution


def _chain_energy(p: RadialPotential, gaps: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """Energies of 1D chains: ``gaps`` (G, k-1) against ``masses`` (M, k) -> (G, M)."""
    k = masses.shape[1]
    pos = np.hstack([np.zeros((gaps.shape[0], 1)), np.cumsum(gaps, axis=1)])
    out = np.zeros((gaps.shape[0], masses.shape[0]))
    for i in range(k):
        for j in range(i + 1, k):
            wij = np.asarray(p.w(pos[:, j] - pos[:, i]))
            out += np.outer(wij, masses[:, i] * masses[:, j])
    return out


def brute_force(
    p: RadialPotential,
    k: int,
    dim: int = 1,
    grid: float | None = None,
    mass_resolution: int = 20,
    n_polish: int = 5,
) -> SearchResult:
    """Exhaustive grid search over ``k``-atom measures on the line, then polish.

    Atom positions range over a grid of ``[-R, R]`` (step ``grid``) and masses
    over the simplex grid of resolution ``1/mass_resolution``; zero masses are
    allowed, so fewer atoms are covered too. The best grid candidates are
    polished with SLSQP on gaps and masses.
    """
    if dim != 1:
        raise DomainError("the brute force oracle is one-dimensional")
    if k > 4:
        raise DomainError("brute force refuses k > 4")
    if k < 1:
        raise DomainError("k must be positive")
    if k == 1:
        mu = DiscreteMeasure.dirac([0.0])
        return SearchResult(mu, 0.0, 0.0, 0.0, True, 1, 0, 0)
    h = grid if grid is not None else p.R / (40 if k <= 3 else 16)
    span = 2.0 * p.R
    ticks = np.arange(1, int(math.floor(span / h + 1e-9)) + 1) * h
    gaps = np.array(
        [g for g in itertools.product(ticks, repeat=k - 1) if sum(g) <= span + 1e-12], dtype=float
    )
    masses = _mass_grid(k, mass_resolution)
    E = _chain_energy(p, gaps, masses)
    order = np.argsort(E, axis=None)[: 50 * n_polish]
    starts = []
    for flat in order:
        gi, mi = np.unravel_index(flat, E.shape)
        starts.append((gaps[gi], masses[mi]))
        if len(starts) == n_polish:
            break

    def objective(z):
        gz, mz = z[: k - 1], z[k - 1 :]
        return float(_chain_energy(p, gz[None, :], mz[None, :])[0, 0])

    cons = [{"type": "eq", "fun": lambda z: np.sum(z[k - 1 :]) - 1.0}]
    bounds = [(0.0, span)] * (k - 1) + [(0.0, 1.0)] * k
    best = None
    for g0, m0 in starts:
        res = scipy_minimize(
            objective,
            np.concatenate([g0, m0]),
            method="SLSQP",
            bounds=bounds,
            constraints=cons,
            options={"ftol": 1e-15, "maxiter": 500},
        )
        z = res.x if res.fun <= objective(np.concatenate([g0, m0])) else np.concatenate([g0, m0])
        val = objective(z)
        if best is None or val < best[0]:
            best = (val, z)
    _, z = best
    pos = np.concatenate([[0.0], np.cumsum(z[: k - 1])])
    ms = np.clip(z[k - 1 :], 0.0, None)
    keep = ms > 1e-9
    mu = canonicalize(DiscreteMeasure(pos[keep][:, None], ms[keep] / ms[keep].sum()), 1e-7)
    mu = mu.centered()
    _, V, g = atom_fields(p, np.array(mu.points), np.array(mu.masses))
    return SearchResult(
        measure=mu,
        energy=energy(p, mu),
        grad_norm=float(np.max(np.abs(g))),
        mass_residual=mass_kkt_residual(V, np.array(mu.masses)),
        converged=True,
        n_starts_converged=1,
        best_start_index=0,
        seed=0,
    )


def with_overrides(cfg: SearchConfig, **kwargs) -> SearchConfig:
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})
