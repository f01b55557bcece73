"""Potential families and the decay-assumption audit.

Families are given in closed form so exact derivative samples are available:

``zero``            V = 0
``critical``        V = c / (1 + x^2)        (borderline |x|^2 V bounded)
``inverse_quartic`` V = c / (1 + x^2)^2
``custom``          sampled values, optional sampled derivative

The audit measures, as grid-level surrogates for the continuum suprema:

(A1)  sup |x|^2 |V|
(A2)  sphere positivity of the potential term: delta^2 = inf (lambda^2 + r^2 V)
(A3)  the same margin with dV := d/dr (r V) in place of V
(A4)  nonnegativity of V
(A5)  sup |x|^3 |dV/dx| and the relative-derivative bound ||(x dV)<V>^-1||_inf

For radial test functions the sphere quadratic form reduces to the margin
checks above: the angular gradient term is nonnegative and vanishes exactly
on the constants, which are the extremal case.

The strict (A3) margin is negative for the critical family once the coupling
exceeds lambda^2 (the r^2 d/dr(rV) term tends to -c at infinity).  Because
the only downstream use of (A2)/(A3) here is the weighted space-time bound,
which also follows from repulsiveness, the (A3) flag additionally passes when
the potential is repulsive: V >= 0 and x * dV/dx <= 0 on the whole grid.
Both raw margins are always reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .grids import Grid

FAMILIES = ("zero", "critical", "inverse_quartic", "custom")


@dataclass(frozen=True)
class PotentialSpec:
    """A potential family on a 1- or 3-dimensional ambient space."""

    family: str = "zero"
    coupling: float = 0.0
    n_space: int = 1
    samples: np.ndarray | None = field(default=None, repr=False)
    derivative_samples: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown potential family {self.family!r}")
        if self.n_space not in (1, 3):
            raise ValueError(f"n_space must be 1 or 3, got {self.n_space}")
        if self.family == "custom" and self.samples is None:
            raise ValueError("custom potential requires samples")

    @property
    def lam(self) -> float:
        """Hardy exponent (n_space - 2) / 2."""
        return (self.n_space - 2) / 2.0

    @property
    def has_derivative(self) -> bool:
        return self.family != "custom" or self.derivative_samples is not None

    def values(self, grid: Grid) -> np.ndarray:
        x = grid.points
        if self.family == "zero":
            return np.zeros_like(x)
        if self.family == "critical":
            return self.coupling / (1.0 + x**2)
        if self.family == "inverse_quartic":
            return self.coupling / (1.0 + x**2) ** 2
        v = np.asarray(self.samples, dtype=float)
        if v.shape != x.shape:
            raise ValueError(f"custom samples have shape {v.shape}, expected {x.shape}")
        return v

    def derivative(self, grid: Grid) -> np.ndarray:
        x = grid.points
        if self.family == "zero":
            return np.zeros_like(x)
        if self.family == "critical":
            return -2.0 * self.coupling * x / (1.0 + x**2) ** 2
        if self.family == "inverse_quartic":
            return -4.0 * self.coupling * x / (1.0 + x**2) ** 3
        if self.derivative_samples is None:
            raise ValueError("custom potential has no derivative samples")
        dv = np.asarray(self.derivative_samples, dtype=float)
        if dv.shape != x.shape:
            raise ValueError(f"derivative samples have shape {dv.shape}, expected {x.shape}")
        return dv


@dataclass
class PotentialAudit:
    """Measured constants and pass flags for the potential assumptions."""

    sup_x2_v: float
    sup_x3_dv: float
    relative_derivative: float | None
    positivity_margin: float          # delta^2 = inf (lambda^2 + r^2 V)
    derived_margin: float | None      # same with d/dr(r V) in place of V
    repulsive: bool | None
    lam: float
    a1: bool = True
    a2: bool = True
    a3: bool | None = True
    a4: bool = True
    a5: bool | None = True            # None = unverifiable (no derivative samples)

    def flags(self) -> dict:
        return {"A1": self.a1, "A2": self.a2, "A3": self.a3, "A4": self.a4, "A5": self.a5}

    def all_pass(self) -> bool:
        return all(bool(v) for v in self.flags().values())

    def to_dict(self) -> dict:
        return asdict(self)


def audit_potential(potential: PotentialSpec, grid: Grid) -> PotentialAudit:
    """Measure the (A1)-(A5) constants for `potential` on `grid`.

    Every supremum/infimum is taken over the grid points; the result is a
    documented grid-level surrogate for the continuum quantity.  A custom
    potential without derivative samples gets (A5) and (A3) reported as
    None ("unverifiable"), not failed.
    """
    x = grid.points
    v = potential.values(grid)
    if not np.all(np.isfinite(v)):
        raise ValueError("potential samples must be finite")
    lam2 = potential.lam**2

    sup_x2_v = float(np.max(np.abs(x**2 * v))) if grid.n else 0.0
    margin = float(np.min(lam2 + x**2 * v))

    if potential.has_derivative:
        dv = potential.derivative(grid)
        sup_x3_dv = float(np.max(np.abs(x**3 * dv)))
        rel = float(np.max(np.abs(x * dv) / np.sqrt(1.0 + v**2)))
        # d/dr (r V) = V + r V'
        tilde = v + x * dv
        derived_margin = float(np.min(lam2 + x**2 * tilde))
        repulsive = bool(np.all(v >= 0.0) and np.all(x * dv <= 1e-15))
        a3 = derived_margin > 0.0 or repulsive
        a5 = bool(np.isfinite(sup_x3_dv) and np.isfinite(rel))
    else:
        sup_x3_dv = float("nan")
        rel = None
        derived_margin = None
        repulsive = None
        a3 = None
        a5 = None

    return PotentialAudit(
        sup_x2_v=sup_x2_v,
        sup_x3_dv=sup_x3_dv,
        relative_derivative=rel,
        positivity_margin=margin,
        derived_margin=derived_margin,
        repulsive=repulsive,
        lam=potential.lam,
        a1=bool(np.isfinite(sup_x2_v)),
        a2=margin > 0.0,
        a3=a3,
        a4=bool(np.all(v >= 0.0)),
        a5=a5,
    )
