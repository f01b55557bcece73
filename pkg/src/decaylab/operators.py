"""Hermitian matrices, spectral data and the functional calculus.

Every operator emitted by this module is symmetrized, (M + M*)/2, so that
hermiticity invariants hold exactly rather than approximately.  All matrix
functions f(H) go through a full dense eigendecomposition; the dimension cap
for that path is DENSE_EIGEN_CAP.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .grids import Grid

#: largest dimension served by the dense eigendecomposition path
DENSE_EIGEN_CAP = 4096

ROLES = (
    "hamiltonian",
    "conjugate",
    "remainder",
    "projection",
    "cutoff",
    "drift",
    "modified",
    "weight",
    "generic",
)

_HERM_TOL = 1e-12
_PROJ_TOL = 1e-10
_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class HermitianOperator:
    """A square Hermitian matrix with a role tag and provenance.

    `hermiticity_defect` is max |M_jk - conj(M_kj)| measured *before* the
    mandatory symmetrization; the stored entries are exactly Hermitian.
    """

    entries: np.ndarray = field(repr=False)
    role: str = "generic"
    grid: Grid | None = None
    hermiticity_defect: float = 0.0

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown operator role {self.role!r}")
        m = self.entries
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator entries must be square, got {m.shape}")
        scale = float(np.abs(m).max()) if m.size else 0.0
        if scale and self.hermiticity_defect > _HERM_TOL * scale:
            raise ValueError(
                f"hermiticity defect {self.hermiticity_defect:.3e} exceeds "
                f"{_HERM_TOL:.0e} * scale ({scale:.3e})"
            )
        if self.role == "projection" and m.size:
            idem = float(np.abs(m @ m - m).max())
            if idem > _PROJ_TOL:
                raise ValueError(f"projection is not idempotent: |P^2-P|_max = {idem:.3e}")
        m.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def mat(self) -> np.ndarray:
        return self.entries

    def norm2(self) -> float:
        """Spectral norm."""
        return float(np.linalg.norm(self.entries, 2))


def hermitian(entries: np.ndarray, role: str = "generic", grid: Grid | None = None) -> HermitianOperator:
    """Symmetrize `entries` and wrap them as a HermitianOperator.

    The pre-symmetrization defect is recorded; the invariant check rejects
    matrices that were not Hermitian to begin with (defect > 1e-12 * scale).
    """
    m = np.asarray(entries)
    if not np.all(np.isfinite(m.real)) or (np.iscomplexobj(m) and not np.all(np.isfinite(m.imag))):
        raise ValueError("operator entries must be finite")
    defect = float(np.abs(m - m.conj().T).max()) if m.size else 0.0
    sym = (m + m.conj().T) / 2.0
    return HermitianOperator(entries=sym, role=role, grid=grid, hermiticity_defect=defect)


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""

    eigenvalues: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    residual: float = 0.0

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.vectors.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.eigenvalues).max())

    def to_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        """V* M V."""
        return self.vectors.conj().T @ m @ self.vectors

    def from_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        """V M V*."""
        return self.vectors @ m @ self.vectors.conj().T


def _is_real_tridiagonal(m: np.ndarray) -> bool:
    if np.iscomplexobj(m) and np.abs(m.imag).max() > 0:
        return False
    r = m.real
    band = np.triu(r, 2)
    return not np.any(band)


def spectral_decompose(op: HermitianOperator | np.ndarray) -> SpectralData:
    """Dense eigendecomposition with orthonormality and residual checks.

    Real symmetric tridiagonal matrices (the 1D Hamiltonians) are routed
    through the O(n^2) tridiagonal solver; everything else uses `eigh`.
    """
    m = op.mat if isinstance(op, HermitianOperator) else np.asarray(op)
    n = m.shape[0]
    if n > DENSE_EIGEN_CAP:
        raise ValueError(f"dimension {n} exceeds dense eigendecomposition cap {DENSE_EIGEN_CAP}")
    if _is_real_tridiagonal(m):
        lam, vec = scipy.linalg.eigh_tridiagonal(np.diag(m.real).copy(), np.diag(m.real, 1).copy())
    else:
        lam, vec = scipy.linalg.eigh(m)
    vec = np.ascontiguousarray(vec)
    ortho = float(np.abs(vec.conj().T @ vec - np.eye(n)).max())
    if ortho > _ORTHO_TOL:
        raise RuntimeError(f"eigenvector orthonormality defect {ortho:.3e}")
    resid = float(np.abs(m @ vec - vec * lam[None, :]).max())
    radius = float(np.abs(lam).max()) if n else 0.0
    if radius and resid > _ORTHO_TOL * radius:
        raise RuntimeError(f"eigen residual {resid:.3e} exceeds tolerance for radius {radius:.3e}")
    return SpectralData(eigenvalues=lam, vectors=vec, residual=resid)


def matrix_function(
    spectral: SpectralData,
    f: Callable[[np.ndarray], np.ndarray],
    role: str = "generic",
    grid: Grid | None = None,
) -> HermitianOperator:
    """Return V f(Lambda) V* for a real-valued scalar function f.

    Rejects f that is non-finite at any eigenvalue, reporting the offending
    eigenvalue (e.g. an inverse power at lambda = 0).
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(f(spectral.eigenvalues), dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        lam_bad = spectral.eigenvalues[bad][0]
        raise ValueError(f"function is not finite at eigenvalue {lam_bad!r}")
    m = (spectral.vectors * vals[None, :]) @ spectral.vectors.conj().T
    return hermitian(m, role=role, grid=grid)


def apply_function(spectral: SpectralData, f: Callable[[np.ndarray], np.ndarray], u: np.ndarray) -> np.ndarray:
    """Apply f(H) to a vector without materializing the dense matrix."""
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(f(spectral.eigenvalues), dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        raise ValueError(f"function is not finite at eigenvalue {spectral.eigenvalues[bad][0]!r}")
    c = spectral.vectors.conj().T @ u
    return spectral.vectors @ (vals * c)


def band_projection_matrix(
    spectral: SpectralData, lo: float, hi: float, grid: Grid | None = None
) -> HermitianOperator:
    """Spectral projection chi(H in [lo, hi]) as a dense Hermitian matrix."""
    return matrix_function(spectral, lambda lam: ((lam >= lo) & (lam <= hi)).astype(float),
                           role="projection", grid=grid)


def project_band(spectral: SpectralData, lo: float, hi: float, u: np.ndarray) -> np.ndarray:
    """Apply the band projection to a vector via the rank-limited factor."""
    mask = (spectral.eigenvalues >= lo) & (spectral.eigenvalues <= hi)
    cols = spectral.vectors[:, mask]
    return cols @ (cols.conj().T @ u)


def energy_weight_values(lam: np.ndarray, s: float) -> np.ndarray:
    """Scalar profile of the energy cut-off <lam>^(-s/2) with <x> = sqrt(1+x^2)."""
    return (1.0 + np.asarray(lam) ** 2) ** (-s / 4.0)


def energy_weight(spectral: SpectralData, s: float, grid: Grid | None = None) -> HermitianOperator:
    """The smoothing weight <H>^(-s/2) as a matrix (identity when s = 0)."""
    return matrix_function(spectral, lambda lam: energy_weight_values(lam, s), role="cutoff", grid=grid)


def assemble_hamiltonian(grid: Grid, potential) -> HermitianOperator:
    """H = -d2/dx2 (3-point Dirichlet stencil) + diag(V) on the grid.

    For radial3d this is the reduced s-wave operator -d2/dr2 + V(r) acting
    on w = r*u, with Dirichlet conditions at 0 and L.  Real symmetric
    tridiagonal by construction.
    """
    v = potential.values(grid) if hasattr(potential, "values") else np.asarray(potential, dtype=float)
    if v.shape != (grid.n,):
        raise ValueError(f"potential samples have shape {v.shape}, expected ({grid.n},)")
    if not np.all(np.isfinite(v)):
        raise ValueError("potential samples must be finite on the grid")
    h2 = grid.spacing**2
    m = np.zeros((grid.n, grid.n))
    np.fill_diagonal(m, 2.0 / h2 + v)
    off = -np.ones(grid.n - 1) / h2
    m[np.arange(grid.n - 1), np.arange(1, grid.n)] = off
    m[np.arange(1, grid.n), np.arange(grid.n - 1)] = off
    return hermitian(m, role="hamiltonian", grid=grid)


def assemble_dilation(grid: Grid) -> HermitianOperator:
    """Generator of dilations A = -(i/2)(X D + D X) with centered differences.

    D is the centered first-difference matrix with Dirichlet ends and
    X = diag(points).  The combination has zero diagonal and is exactly
    Hermitian; the symmetrization pass is a no-op recorded as defect 0.
    """
    n = grid.n
    x = grid.points
    a = np.zeros((n, n), dtype=complex)
    idx = np.arange(n - 1)
    upper = -0.5j * (x[idx] + x[idx + 1]) / (2.0 * grid.spacing)
    a[idx, idx + 1] = upper
    a[idx + 1, idx] = np.conj(upper)
    return hermitian(a, role="conjugate", grid=grid)
