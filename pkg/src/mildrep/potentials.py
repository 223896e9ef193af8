"""Radial interaction potentials and the structural constants derived from them.

A potential is stored through its radial profile ``w`` with ``W(x) = w(|x|)``.
Two kinds exist: the attractive-repulsive power law ``r**a/a - r**b/b`` with
closed forms for everything, and user supplied callables (``w``, ``w'``,
``w''``) whose hypotheses are validated by sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .report import Check

ArrayFn = Callable[[np.ndarray], np.ndarray]

#: grid used when locating the convexity radius of a custom potential
CONVEXITY_GRID = 10_000
CONVEXITY_XTOL = 1e-10


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class HypothesisError(ValueError):
    """Raised when a potential fails one of the structural hypotheses."""


def _as_radii(r) -> np.ndarray:
    arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("radius must be finite")
    if np.any(arr < 0):
        raise DomainError("radius must be non-negative")
    return arr


def _call(fn: ArrayFn, r: np.ndarray) -> np.ndarray:
    out = np.asarray(fn(r), dtype=float)
    if out.shape != r.shape:
        out = np.broadcast_to(out, r.shape).astype(float)
    return out


def _unwrap(x: np.ndarray, scalar: bool):
    return float(x) if scalar else x


@dataclass(frozen=True)
class RadialPotential:
    """Radially symmetric potential ``W(x) = w(|x|)``.

    Use :meth:`power_law` or :meth:`custom` rather than the constructor.

    Attributes:
        kind: ``"powerlaw"`` or ``"custom"``.
        alpha: mild repulsion exponent, ``w'(r) r**(1-alpha) -> -C`` at 0.
        C: mild repulsion constant.
        R: sign change radius, ``w < 0`` on ``(0, R)`` and ``w >= 0`` beyond.
        a, b: power law exponents (``nan`` for custom potentials).
    """

    kind: str
    alpha: float
    C: float
    R: float
    a: float = math.nan
    b: float = math.nan
    w_fn: ArrayFn | None = field(default=None, repr=False, compare=False)
    w1_fn: ArrayFn | None = field(default=None, repr=False, compare=False)
    w2_fn: ArrayFn | None = field(default=None, repr=False, compare=False)

    @classmethod
    def power_law(cls, a: float, b: float) -> "RadialPotential":
        a, b = float(a), float(b)
        if not (2.0 < b < a):
            raise DomainError(f"power law needs 2 < b < a, got a={a}, b={b}")
        R = (a / b) ** (1.0 / (a - b))
        return cls("powerlaw", alpha=b, C=1.0, R=R, a=a, b=b)

    @classmethod
    def custom(
        cls,
        w: ArrayFn,
        w1: ArrayFn,
        w2: ArrayFn,
        *,
        alpha: float,
        C: float,
        R: float,
        validate: bool = True,
    ) -> "RadialPotential":
        """Wrap user callables for ``w``, ``w'`` and ``w''``.

        The callables must accept numpy arrays. ``alpha``, ``C`` and ``R`` are
        declared by the caller and checked by sampling when ``validate`` is set.
        """
        if not alpha > 2:
            raise HypothesisError(f"mild repulsion needs alpha > 2, got {alpha}")
        if not (C > 0 and R > 0):
            raise HypothesisError("C and R must be positive")
        p = cls("custom", alpha=float(alpha), C=float(C), R=float(R), w_fn=w, w1_fn=w1, w2_fn=w2)
        if validate:
            failed = [c for c in hypothesis_checks(p) if not c.passed]
            if failed:
                raise HypothesisError("; ".join(f"{c.name}: {c.details}" for c in failed))
        return p

    @classmethod
    def from_config(cls, spec: dict) -> "RadialPotential":
        """Build a potential from ``{"kind": "powerlaw", "a": ..., "b": ...}``."""
        kind = str(spec.get("kind", "")).lower()
        if kind != "powerlaw":
            raise DomainError(f"unsupported potential kind {spec.get('kind')!r}")
        return cls.power_law(spec["a"], spec["b"])

    def to_config(self) -> dict:
        if self.kind != "powerlaw":
            raise DomainError("custom potentials cannot be serialized")
        return {"kind": "powerlaw", "a": self.a, "b": self.b}

    @property
    def is_power_law(self) -> bool:
        return self.kind == "powerlaw"

    # radial profile ------------------------------------------------------

    def w(self, r):
        """Radial profile ``w(r)``; accepts scalars or arrays."""
        arr = _as_radii(r)
        if self.is_power_law:
            out = arr**self.a / self.a - arr**self.b / self.b
        else:
            out = _call(self.w_fn, arr)
        return _unwrap(out, np.ndim(r) == 0)

    def dw(self, r):
        """First radial derivative ``w'(r)``."""
        arr = _as_radii(r)
        if self.is_power_law:
            out = arr ** (self.a - 1) - arr ** (self.b - 1)
        else:
            out = _call(self.w1_fn, arr)
            if not np.all(np.isfinite(out)):
                raise DomainError("w' is not defined at the requested radius")
        return _unwrap(out, np.ndim(r) == 0)

    def d2w(self, r):
        """Second radial derivative ``w''(r)``."""
        arr = _as_radii(r)
        if self.is_power_law:
            out = (self.a - 1) * arr ** (self.a - 2) - (self.b - 1) * arr ** (self.b - 2)
        else:
            out = _call(self.w2_fn, arr)
            if not np.all(np.isfinite(out)):
                raise DomainError("w'' is not defined at the requested radius")
        return _unwrap(out, np.ndim(r) == 0)

    def dw_over_r(self, r: np.ndarray) -> np.ndarray:
        """``w'(r)/r`` with its limit 0 at ``r = 0`` (valid because alpha > 2)."""
        arr = _as_radii(r)
        out = np.zeros_like(arr)
        pos = arr > 0
        out[pos] = np.asarray(self.dw(arr[pos])) / arr[pos]
        return out


# module level aliases matching the operation names ----------------------

def eval(p: RadialPotential, r):  # noqa: A001 - mirrors the operation name
    return p.w(r)


def deriv1(p: RadialPotential, r):
    return p.dw(r)


def deriv2(p: RadialPotential, r):
    return p.d2w(r)


def hypothesis_checks(p: RadialPotential, n_samples: int = 2000) -> list[Check]:
    """Sample the sign structure and the small-r behaviour of ``w'``."""
    checks = []
    w0 = float(p.w(0.0))
    checks.append(Check.from_metric("w(0)=0", abs(w0), 1e-12, f"w(0)={w0!r}"))

    inside = np.linspace(0.0, p.R, n_samples + 2)[1:-1]
    w_in = np.asarray(p.w(inside))
    worst_in = float(np.max(w_in))
    checks.append(
        Check(
            "w<0 on (0,R)",
            bool(worst_in < 0),
            worst_in,
            0.0,
            f"max w on interior samples = {worst_in!r}",
        )
    )
    outside = np.linspace(p.R, 4.0 * p.R, n_samples)
    w_out = np.asarray(p.w(outside))
    # relative slack at r = R itself, where w vanishes up to rounding
    slack = 1e-12 * max(1.0, float(np.max(np.abs(w_out))))
    worst_out = float(-np.min(w_out))
    checks.append(
        Check.from_metric("w>=0 on [R,4R]", worst_out, slack, f"min w on [R,4R] = {-worst_out!r}")
    )

    radii = p.R * np.logspace(-3, -6, 4)
    ratios = np.asarray(p.dw(radii)) * radii ** (1.0 - p.alpha)
    err = float(abs(ratios[-1] + p.C) / p.C)
    checks.append(
        Check.from_metric(
            "w'(r) r^(1-alpha) -> -C",
            err,
            0.05,
            f"ratios at r/R=1e-3..1e-6: {ratios.tolist()}",
        )
    )
    return checks


def convexity_sign(p: RadialPotential, r) -> np.ndarray:
    """``2 w w'' - w'**2``, which has the sign of ``(sqrt(-w))''`` where ``w < 0``."""
    r = np.asarray(r, dtype=float)
    w = np.asarray(p.w(r))
    return 2.0 * w * np.asarray(p.d2w(r)) - np.asarray(p.dw(r)) ** 2


def convexity_radius_power_law(a: float, b: float) -> float:
    q = (a * (a - 1) + b * (b - 1) - a * b) / (b * (a - 2))
    disc = q * q - a * (b - 2) / (b * (a - 2))
    return (q - math.sqrt(disc)) ** (1.0 / (a - b))


def convexity_radius_numeric(
    p: RadialPotential, n_grid: int = CONVEXITY_GRID, xtol: float = CONVEXITY_XTOL
) -> float:
    """Locate the first sign change of ``(sqrt(-w))''`` on ``(0, R]``.

    The first grid cell is not sampled: for ``alpha > 2`` the small-r
    expansion gives ``2 w w'' - w'**2 ~ C**2 (alpha-2)/alpha r**(2 alpha-2) > 0``.
    """
    grid = np.linspace(0.0, p.R, n_grid + 1)[1:]
    g = convexity_sign(p, grid)
    if g[0] <= 0:
        raise HypothesisError("convexity hypothesis violated: sqrt(-w) is not convex near 0")
    bad = np.flatnonzero(g <= 0)
    if bad.size == 0:
        return float(p.R)
    lo, hi = float(grid[bad[0] - 1]), float(grid[bad[0]])
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if convexity_sign(p, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def convexity_radius(p: RadialPotential) -> float:
    """Largest ``r <= R`` such that ``sqrt(-w)`` is strictly convex on ``(0, r)``."""
    if p.is_power_law:
        return min(convexity_radius_power_law(p.a, p.b), p.R)
    return convexity_radius_numeric(p)


def c4_profile(alpha: float, xi):
    """``f(xi) = 3 - 6 beta xi + beta (beta + 2) xi**2`` with ``beta = 4 - alpha``."""
    beta = 4.0 - alpha
    xi = np.asarray(xi, dtype=float)
    return 3.0 - 6.0 * beta * xi + beta * (beta + 2.0) * xi**2


def c4_analytic_minimum(alpha: float) -> tuple[float, float]:
    """Minimiser and minimum of :func:`c4_profile` over ``[0, 1]``."""
    beta = 4.0 - alpha
    vertex = 3.0 / (beta + 2.0)
    if vertex >= 1.0:
        return 1.0, (beta - 3.0) * (beta - 1.0)
    return vertex, 6.0 * (1.0 - beta) / (beta + 2.0)


def check_c4_bound(p: RadialPotential | float, n_samples: int = 10_001, tol: float = 1e-12) -> Check:
    """Check the fourth-derivative criterion for ``-|x|**alpha/alpha + U``.

    ``p`` may be a potential (its ``alpha`` is used) or the exponent itself.
    """
    alpha = float(getattr(p, "alpha", p))
    if not (2.0 < alpha < 4.0):
        raise DomainError(f"fourth-derivative bound requires 2 < alpha < 4, got {alpha}")
    xi = np.linspace(0.0, 1.0, n_samples)
    f = c4_profile(alpha, xi)
    k = int(np.argmin(f))
    beta = 4.0 - alpha
    xi_bar, f_bar = c4_analytic_minimum(alpha)
    details = (
        f"beta={beta!r}; grid min f={f[k]!r} at xi={xi[k]!r}; "
        f"f(1)=(beta-3)(beta-1)={(beta - 3.0) * (beta - 1.0)!r}; "
        f"analytic min f({xi_bar!r})={f_bar!r}"
    )
    return Check.from_metric("c4_bound", -float(f[k]), tol, details)
