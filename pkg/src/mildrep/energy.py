"""Interaction energy, the potential field ``V = W * mu`` and its derivatives."""

from __future__ import annotations

import math

import numpy as np

from .measure import DiscreteMeasure
from .potentials import RadialPotential

# above this many atoms, sums switch to compensated (fsum) accumulation
COMPENSATED_ABOVE = 1000


def pair_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def interaction_matrix(p: RadialPotential, m: DiscreteMeasure) -> np.ndarray:
    """Symmetric matrix ``G[i, j] = W(x_i - x_j)`` with an exactly zero diagonal."""
    k = len(m)
    dist = pair_distances(m.points)
    iu = np.triu_indices(k, 1)
    G = np.zeros((k, k))
    G[iu] = p.w(dist[iu])
    return G + G.T


def quadratic_form(G: np.ndarray, a: np.ndarray, b: np.ndarray | None = None) -> float:
    """``a^T G b`` accumulated in a fixed order."""
    b = a if b is None else b
    if G.shape[0] > COMPENSATED_ABOVE:
        return math.fsum((np.outer(a, b) * G).ravel())
    return float(a @ G @ b)


def energy(p: RadialPotential, m: DiscreteMeasure) -> float:
    """``E(mu) = 1/2 sum_ij m_i m_j W(x_i - x_j)``."""
    if len(m) == 1:
        return 0.0
    return 0.5 * quadratic_form(interaction_matrix(p, m), m.masses)


def _displacements(m: DiscreteMeasure, x) -> tuple[np.ndarray, np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and x.shape[0] == m.dim)
    if single:
        xs = x.reshape(1, m.dim)
    elif x.ndim == 1 and m.dim == 1:
        xs = x[:, None]
    else:
        xs = x
    if xs.ndim != 2 or xs.shape[1] != m.dim:
        raise ValueError(f"evaluation points of shape {x.shape} do not match dimension {m.dim}")
    diff = xs[:, None, :] - m.points[None, :, :]
    dist = np.sqrt(np.einsum("qjk,qjk->qj", diff, diff))
    return diff, dist, single


def potential_field(p: RadialPotential, m: DiscreteMeasure, x):
    """``V_mu(x) = sum_j m_j W(x - x_j)``; ``x`` is one point or a ``(q, dim)`` batch."""
    _, dist, single = _displacements(m, x)
    vals = np.asarray(p.w(dist)) @ m.masses
    return float(vals[0]) if single else vals


def field_gradient(p: RadialPotential, m: DiscreteMeasure, x):
    """``grad V_mu(x)``; the term of an atom sitting exactly at ``x`` is zero."""
    diff, dist, single = _displacements(m, x)
    coef = p.dw_over_r(dist) * m.masses
    g = np.einsum("qj,qjk->qk", coef, diff)
    return g[0] if single else g


def field_hessian(p: RadialPotential, m: DiscreteMeasure, x):
    """``Hess V_mu(x)`` from the radial formula ``w'' yy^T + w'/|y| (I - yy^T)``.

    A coincident atom contributes ``D^2 W(0) = 0``.
    """
    diff, dist, single = _displacements(m, x)
    n = m.dim
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(dist[..., None] > 0, diff / dist[..., None], 0.0)
    d1r = p.dw_over_r(dist)
    d2 = np.where(dist > 0, np.asarray(p.d2w(dist)), 0.0)
    radial = (d2 - d1r) * m.masses
    iso = (d1r * m.masses).sum(axis=1)
    H = np.einsum("qj,qja,qjb->qab", radial, unit, unit) + iso[:, None, None] * np.eye(n)
    return H[0] if single else H


def atom_fields(p: RadialPotential, points: np.ndarray, masses: np.ndarray):
    """``V_mu`` and ``grad V_mu`` at every atom of an (unnormalized) configuration.

    Returns ``(G, values, gradients)`` where ``values = G @ masses``.
    """
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    G = np.asarray(p.w(dist))
    np.fill_diagonal(G, 0.0)
    coef = p.dw_over_r(dist) * masses
    grads = np.einsum("ij,ijk->ik", coef, diff)
    return G, G @ masses, grads
