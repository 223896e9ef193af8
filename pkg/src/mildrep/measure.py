"""Atomic probability measures stored as weighted particle systems."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

MASS_TOL = 1e-12
DEFAULT_MERGE_REL = 1e-7


class MeasureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure ``sum_i m_i delta_{x_i}`` on ``R^dim``.

    ``points`` has shape ``(k, dim)`` and ``masses`` shape ``(k,)``. Both are
    copied, made read-only and validated on construction.
    """

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        ms = np.array(self.masses, dtype=float).reshape(-1)
        if pts.ndim != 2 or pts.shape[0] != ms.shape[0] or ms.size == 0:
            raise MeasureError(f"points {pts.shape} and masses {ms.shape} are inconsistent")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(ms))):
            raise MeasureError("non-finite point or mass")
        if np.any(ms <= 0):
            raise MeasureError("masses must be strictly positive")
        if abs(math.fsum(ms) - 1.0) > MASS_TOL:
            raise MeasureError(f"masses sum to {math.fsum(ms)!r}, not 1")
        pts.setflags(write=False)
        ms.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", ms)

    @classmethod
    def from_arrays(cls, points, masses=None, normalize: bool = True) -> "DiscreteMeasure":
        """Build a measure, defaulting to uniform masses and renormalizing."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if masses is None:
            masses = np.full(pts.shape[0], 1.0 / pts.shape[0])
        ms = np.asarray(masses, dtype=float)
        if normalize:
            ms = ms / math.fsum(ms)
        return cls(pts, ms)

    @classmethod
    def dirac(cls, x) -> "DiscreteMeasure":
        return cls(np.atleast_2d(np.asarray(x, dtype=float)), np.ones(1))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.masses.shape[0]

    def barycenter(self) -> np.ndarray:
        return self.masses @ self.points

    def translated(self, shift) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points + np.asarray(shift, dtype=float), self.masses)

    def centered(self) -> "DiscreteMeasure":
        return self.translated(-self.barycenter())

    def transformed(self, matrix) -> "DiscreteMeasure":
        """Apply ``x -> matrix @ x`` to every atom."""
        return DiscreteMeasure(self.points @ np.asarray(matrix, dtype=float).T, self.masses)

    def sorted(self) -> "DiscreteMeasure":
        """Atoms in lexicographic order of their coordinates."""
        order = np.lexsort(self.points.T[::-1])
        return DiscreteMeasure(self.points[order], self.masses[order])

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": [
                {"x": [float(v) for v in x], "m": float(m)} for x, m in zip(self.points, self.masses)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteMeasure":
        try:
            dim = int(data["dim"])
            atoms = data["atoms"]
            pts = np.array([a["x"] for a in atoms], dtype=float).reshape(len(atoms), dim)
            ms = np.array([a["m"] for a in atoms], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise MeasureError(f"malformed measure: {exc}") from exc
        return cls(pts, ms)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "DiscreteMeasure":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MeasureError(f"malformed measure JSON: {exc}") from exc
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(indent=1))

    @classmethod
    def load(cls, path) -> "DiscreteMeasure":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class SignedAtomicMeasure:
    """Signed combination ``sum_i a_i delta_{x_i}`` used as a test direction."""

    points: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float).reshape(-1))

    def total(self) -> float:
        return math.fsum(self.coefficients)

    def is_balanced(self, tol: float = MASS_TOL) -> bool:
        return abs(self.total()) <= tol


def diameter(m: DiscreteMeasure) -> float:
    if len(m) < 2:
        return 0.0
    return float(pdist(m.points).max())


def cardinality(m: DiscreteMeasure) -> int:
    return len(m)


def min_gap(m: DiscreteMeasure) -> float:
    if len(m) < 2:
        return math.inf
    return float(pdist(m.points).min())


def default_merge_tol(m: DiscreteMeasure) -> float:
    return DEFAULT_MERGE_REL * max(1.0, diameter(m))


def _merge_once(points: np.ndarray, masses: np.ndarray, tol: float):
    k = len(masses)
    if k < 2:
        return points, masses, False
    close = squareform(pdist(points)) <= tol
    n_comp, labels = connected_components(csr_matrix(close), directed=False)
    if n_comp == k:
        return points, masses, False
    # components are numbered by first occurrence, which keeps the output order stable
    new_m = np.zeros(n_comp)
    new_x = np.zeros((n_comp, points.shape[1]))
    for c in range(n_comp):
        sel = labels == c
        mc = masses[sel]
        new_m[c] = math.fsum(mc)
        new_x[c] = (mc @ points[sel]) / new_m[c]
    return new_x, new_m, True


def canonicalize(m: DiscreteMeasure, merge_tol: float | None = None) -> DiscreteMeasure:
    """Merge atoms closer than ``merge_tol`` (single linkage) into their centroid.

    Merging repeats until no two atoms are within ``merge_tol``, so the
    result is a fixed point of this function.
    """
    tol = default_merge_tol(m) if merge_tol is None else float(merge_tol)
    if tol <= 0:
        raise MeasureError("merge_tol must be positive")
    pts, ms = np.array(m.points), np.array(m.masses)
    changed = True
    any_change = False
    while changed:
        pts, ms, changed = _merge_once(pts, ms, tol)
        any_change |= changed
    if not any_change:
        return m
    return DiscreteMeasure(pts, ms / math.fsum(ms))


def prune(points: np.ndarray, masses: np.ndarray, min_mass: float) -> DiscreteMeasure:
    """Drop atoms with mass below ``min_mass`` and renormalize."""
    keep = masses >= min_mass
    if not np.any(keep):
        keep = masses == masses.max()
    ms = masses[keep]
    return DiscreteMeasure(points[keep], ms / math.fsum(ms))
