"""Exclusion shapes between two nearby support points.

All tests work in reduced coordinates: for a pair ``(v, v')`` a point ``u`` is
described by ``s``, the position of its projection along the segment, and
``zmag``, its distance to the line, both in units of ``|v - v'|``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .potentials import DomainError, RadialPotential

#: bracket for the boundary root; eta0(s, 2) >= 2**(alpha/2) - 1 > 0
ZMAG_BRACKET = (0.0, 2.0)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 2:
        raise DomainError(f"alpha must exceed 2, got {alpha}")
    return alpha


def eta0(alpha: float, s, zmag):
    """``(s + |z|)**(alpha/2) + (1 - s + |z|)**(alpha/2) - 1``.

    The second term is evaluated as ``expm1(alpha/2 * log1p(|z| - s))`` so that
    the value stays accurate next to the endpoint ``s = z = 0``.
    """
    half = 0.5 * float(alpha)
    s = np.asarray(s, dtype=float)
    zmag = np.asarray(zmag, dtype=float)
    with np.errstate(divide="ignore"):
        out = (s + zmag) ** half + np.expm1(half * np.log1p(zmag - s))
    return float(out) if out.ndim == 0 else out


def gamma_alpha(alpha: float) -> float:
    """Opening of the largest double cone inside the shape, ``2**(1-2/alpha) - 1``."""
    alpha = _check_alpha(alpha)
    return 2.0 ** (1.0 - 2.0 / alpha) - 1.0


def _bisect_root(fn, lo, hi, xtol: float, max_iter: int = 200):
    """Vectorized bisection for ``fn(lo) < 0 <= fn(hi)`` elementwise."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(max_iter):
        if np.all(hi - lo <= xtol):
            break
        mid = 0.5 * (lo + hi)
        neg = fn(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def boundary_zmag(alpha: float, s, xtol: float = 1e-12):
    """Solve ``eta0(alpha, s, zmag) = 0`` for ``zmag >= 0``."""
    alpha = _check_alpha(alpha)
    s = np.asarray(s, dtype=float)
    lo = np.full(s.shape, ZMAG_BRACKET[0])
    hi = np.full(s.shape, ZMAG_BRACKET[1])
    root = _bisect_root(lambda z: eta0(alpha, s, z), lo, hi, xtol)
    # the endpoints lie on the boundary exactly
    root = np.where((s <= 0) | (s >= 1), 0.0, root)
    return float(root) if root.ndim == 0 else root


def boundary_curve(alpha: float, n_samples: int) -> list[tuple[float, float]]:
    """Upper half of ``{eta0 = 0}`` sampled on a uniform grid of ``s in [0, 1]``."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    s = np.linspace(0.0, 1.0, n_samples)
    z = boundary_zmag(alpha, s)
    return list(zip(s.tolist(), np.asarray(z).tolist()))


def write_boundary_csv(path, alpha: float, curve) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "s", "zmag"])
        for s, z in curve:
            writer.writerow([repr(float(alpha)), repr(float(s)), repr(float(z))])


def read_boundary_csv(path) -> tuple[float, list[tuple[float, float]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    alpha = float(rows[0]["alpha"])
    return alpha, [(float(r["s"]), float(r["zmag"])) for r in rows]


def tangent_step(alpha: float) -> float:
    """Step for the one-sided difference at the endpoint.

    Near ``s = 0`` the boundary satisfies ``zmag/s ~ 1 - c s**(alpha/2 - 1)``
    with ``c = (2/alpha) 2**(alpha/2)``; the step keeps that error below 1e-5.
    """
    alpha = _check_alpha(alpha)
    c = (2.0 / alpha) * 2.0 ** (alpha / 2.0)
    h = (1e-5 / c) ** (1.0 / (alpha / 2.0 - 1.0))
    return float(min(1e-6, max(h, 1e-300)))


def tangent_angle_check(alpha: float, step: float | None = None) -> float:
    """Angle between the boundary tangent at ``s = z = 0`` and the ``s`` axis."""
    alpha = _check_alpha(alpha)
    h = tangent_step(alpha) if step is None else float(step)
    # eta0(h, 0) < 0 < eta0(h, h): the root lies in [0, h]
    zh = _bisect_root(lambda z: eta0(alpha, h, z), 0.0, h, xtol=h * 1e-15)
    return math.atan2(float(zh), h)


# membership tests -------------------------------------------------------

def reduced_coordinates(v, v2, u) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(t, s, zmag)`` of points ``u`` relative to the pair ``(v, v2)``.

    ``t`` is the signed position of the projection along ``v -> v2`` (the
    projection lies on the segment iff ``0 <= t <= 1``), ``s = |t|`` and
    ``zmag`` is the distance from ``u`` to the line, both in units of ``|v2 - v|``.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    v2 = np.asarray(v2, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float)
    d = v2 - v
    L = float(np.linalg.norm(d))
    if L == 0:
        raise DomainError("the generating points must be distinct")
    e = d / L
    rel = u.reshape(-1, v.size) - v
    along = rel @ e
    perp = rel - along[:, None] * e
    t = along / L
    zmag = np.linalg.norm(perp, axis=1) / L
    if u.ndim <= 1:
        return t[0], np.abs(t[0]), zmag[0]
    return t, np.abs(t), zmag


@dataclass(frozen=True)
class ExclusionShape:
    """The open set ``{eta0 < 0}`` attached to the ordered pair ``(v, v2)``."""

    alpha: float
    v: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        v = np.asarray(self.v, dtype=float).reshape(-1)
        v2 = np.asarray(self.v2, dtype=float).reshape(-1)
        if v.shape != v2.shape or np.linalg.norm(v - v2) == 0:
            raise DomainError("the generating points must be distinct and of equal dimension")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "v2", v2)

    @property
    def gamma(self) -> float:
        return gamma_alpha(self.alpha)

    def contains(self, u):
        return in_exclusion_shape(self, u)


def in_exclusion_shape(shape: ExclusionShape, u):
    t, s, zmag = reduced_coordinates(shape.v, shape.v2, u)
    on_segment = (t >= 0) & (t <= 1)
    with np.errstate(invalid="ignore"):
        inside = on_segment & (eta0(shape.alpha, np.clip(s, 0, 1), zmag) < 0)
    return bool(inside) if np.ndim(inside) == 0 else inside


def in_double_cone(theta: float, v, v2, u):
    """Open double cone of opening ``theta`` with apexes ``v`` and ``v2``."""
    t, _, zmag = reduced_coordinates(v, v2, u)
    on_segment = (t >= 0) & (t <= 1)
    inside = on_segment & (zmag < theta * np.minimum(t, 1 - t))
    return bool(inside) if np.ndim(inside) == 0 else inside


# finite-scale shapes ----------------------------------------------------

def eta_p(p: RadialPotential, scale: float, s, zmag):
    """Finite-scale shape function for support points at distance ``scale``.

    Uses ``w_p(r) = (alpha / C) w(scale r) scale**(-alpha)``, the normalization
    under which ``w_p(r) -> -r**alpha`` and ``eta_p -> eta0`` as ``scale -> 0``.
    Where ``w_p >= 0`` the square root is taken as zero.
    """
    s = np.asarray(s, dtype=float)
    zmag = np.asarray(zmag, dtype=float)
    norm = p.alpha / (p.C * scale**p.alpha)

    def root(r):
        return np.sqrt(np.maximum(-norm * np.asarray(p.w(scale * r)), 0.0))

    out = root(s + zmag) + root(1 - s + zmag) - root(np.ones_like(s))
    return float(out) if out.ndim == 0 else out
