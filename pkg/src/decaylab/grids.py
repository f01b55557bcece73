"""Interval and radial grids with Dirichlet boundaries.

Two geometries are supported:

``line1d``
    Interior points of the symmetric interval [-L, L]:
    x_j = -L + j*h with h = 2L/(n+1), j = 1..n.

``radial3d``
    Interior points of (0, L) for the reduced s-wave radial problem
    (the operator acts on w = r*u): r_j = j*h with h = L/(n+1).
    The origin is excluded, which keeps 1/r-type weights finite.

Production scenarios require n >= 8 (enforced by the experiment config);
the constructor itself accepts any n >= 2 so that tiny hand-checkable
grids remain constructible in tests.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

GEOMETRIES = ("line1d", "radial3d")

#: minimum point count for validated lab scenarios
SCENARIO_MIN_POINTS = 8


@dataclass(frozen=True)
class Grid:
    """Uniform Dirichlet grid. Immutable; safe to share between threads."""

    geometry: str
    n: int
    length: float
    spacing: float
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.spacing <= 0:
            raise ValueError("grid spacing must be positive")
        if np.any(np.diff(self.points) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if self.geometry == "radial3d" and np.any(self.points <= 0):
            raise ValueError("radial grid must exclude the origin")
        self.points.setflags(write=False)

    @property
    def h(self) -> float:
        return self.spacing

    def digest(self) -> str:
        """Short stable hash identifying the grid (used in operator dumps)."""
        raw = f"{self.geometry}:{self.n}:{self.length!r}".encode()
        return hashlib.sha256(raw).hexdigest()[:12]


def make_grid(geometry: str, n: int, length: float) -> Grid:
    """Build a grid of `n` interior points on a domain of scale `length`.

    Rejects degenerate inputs (n < 2, or length <= 0 / non-finite).
    """
    if geometry not in GEOMETRIES:
        raise ValueError(f"unknown geometry {geometry!r}; expected one of {GEOMETRIES}")
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if not np.isfinite(length) or length <= 0:
        raise ValueError(f"length must be positive and finite, got {length}")
    j = np.arange(1, n + 1, dtype=float)
    if geometry == "line1d":
        h = 2.0 * length / (n + 1)
        points = -length + j * h
    else:
        h = length / (n + 1)
        points = j * h
    return Grid(geometry=geometry, n=n, length=float(length), spacing=h, points=points)
