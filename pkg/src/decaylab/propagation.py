"""Application of exp(itH) with certified accuracy.

Two interchangeable kernels under one contract:

``eigenbasis``
    Exact synthesis V exp(it Lambda) V* u from precomputed spectral data;
    the oracle for moderate dimensions.

``chebyshev``
    Kosloff-style polynomial expansion of exp(it(a X + b)) on the spectrum
    scaled to [-1, 1], with Bessel-function coefficients.  Scales to large
    banded Hamiltonians; degree grows linearly in |t| times the spectral
    radius.  Out-of-range spectral bounds are detected at run time by
    divergence of the Chebyshev iterates and abort with a diagnostic.

Both kernels agree to 10x the plan tolerance; unitarity holds to the same
budget per application.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv

from .grids import Grid
from .operators import HermitianOperator, SpectralData, spectral_decompose

DEFAULT_TOLERANCE = 1e-10

#: asserted budget: degree <= DEGREE_SLOPE * (|t| * span / 2) + DEGREE_FLOOR
DEGREE_SLOPE = 1.5
DEGREE_FLOOR = 40


class SpectralBoundsError(RuntimeError):
    """Chebyshev iteration diverged: the plan bounds do not enclose the spectrum."""


@dataclass
class PropagationPlan:
    """Reusable description of how to apply the evolution group."""

    kernel: str = "chebyshev"
    tolerance: float = DEFAULT_TOLERANCE
    lambda_min: float = 0.0
    lambda_max: float = 1.0
    spectral: SpectralData | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kernel not in ("chebyshev", "eigenbasis"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.lambda_max <= self.lambda_min:
            raise ValueError("spectral bounds must satisfy lambda_min < lambda_max")
        if self.kernel == "eigenbasis" and self.spectral is None:
            raise ValueError("eigenbasis kernel needs spectral data")

    @property
    def span(self) -> float:
        return self.lambda_max - self.lambda_min

    def degree_budget(self, t: float) -> int:
        return int(DEGREE_SLOPE * (abs(t) * self.span / 2.0) + DEGREE_FLOOR)


def gershgorin_bounds(m: np.ndarray) -> tuple[float, float]:
    """Rigorous enclosing interval for the spectrum of a Hermitian matrix."""
    d = np.diag(m).real
    radius = np.abs(m).sum(axis=1) - np.abs(np.diag(m))
    return float((d - radius).min()), float((d + radius).max())


def make_plan(
    hop: HermitianOperator,
    kernel: str = "chebyshev",
    tolerance: float = DEFAULT_TOLERANCE,
    spectral: SpectralData | None = None,
) -> PropagationPlan:
    """Build a plan for `hop`.

    Eigenbasis plans compute (or reuse) the spectral data; Chebyshev plans
    take Gershgorin bounds, which always enclose the spectrum, padded by a
    small safety margin.  When spectral data is available the bounds are
    validated against it.
    """
    if kernel == "eigenbasis":
        sd = spectral if spectral is not None else spectral_decompose(hop)
        lo = float(sd.eigenvalues[0])
        hi = float(sd.eigenvalues[-1])
        pad = max(1e-12, 1e-12 * (hi - lo))
        return PropagationPlan(kernel="eigenbasis", tolerance=tolerance,
                               lambda_min=lo - pad, lambda_max=hi + pad, spectral=sd)
    lo, hi = gershgorin_bounds(hop.mat)
    if spectral is not None:
        if spectral.eigenvalues[0] < lo or spectral.eigenvalues[-1] > hi:
            raise ValueError("Gershgorin bounds do not enclose the supplied spectrum")
        lo = min(lo, float(spectral.eigenvalues[0]))
        hi = max(hi, float(spectral.eigenvalues[-1]))
    pad = 1e-9 * max(1.0, hi - lo)
    return PropagationPlan(kernel="chebyshev", tolerance=tolerance,
                           lambda_min=lo - pad, lambda_max=hi + pad, spectral=spectral)


def _chebyshev_degree(tau: float, tolerance: float, budget: int) -> int:
    """Smallest degree whose Bessel-coefficient tail is below tolerance."""
    base = int(abs(tau)) + 10
    k = base
    while k <= budget:
        tail = np.abs(jv([k - 2, k - 1, k], abs(tau))).max()
        if tail < tolerance / 10.0:
            return k
        k += max(4, int(0.04 * abs(tau)))
    return budget


def _chebyshev_apply(hmat: np.ndarray, u: np.ndarray, t: float, plan: PropagationPlan) -> np.ndarray:
    """exp(itH) u via Chebyshev expansion on the scaled spectrum."""
    a = plan.span / 2.0
    b = (plan.lambda_max + plan.lambda_min) / 2.0
    tau = t * a
    degree = _chebyshev_degree(tau, plan.tolerance, plan.degree_budget(t))
    coeff = jv(np.arange(degree + 1), tau)
    # exp(i tau x) = J_0 + 2 sum_k i^k J_k(tau) T_k(x) on x in [-1, 1]
    phase = np.exp(1j * t * b)
    u = np.asarray(u, dtype=complex)
    norm0 = np.linalg.norm(u)
    if norm0 == 0.0:
        return u.copy()

    def scaled_apply(v):
        return (hmat @ v - b * v) / a

    t_prev = u
    t_curr = scaled_apply(u)
    acc = coeff[0] * t_prev + 2j * coeff[1] * t_curr
    ik = 1j
    guard = 4.0 * norm0
    for k in range(2, degree + 1):
        ik *= 1j
        t_next = 2.0 * scaled_apply(t_curr) - t_prev
        nrm = np.linalg.norm(t_next)
        if not np.isfinite(nrm) or nrm > guard * (k + 1):
            raise SpectralBoundsError(
                f"Chebyshev iterate {k} grew to {nrm:.3e} (input norm {norm0:.3e}); "
                f"plan bounds [{plan.lambda_min:.6g}, {plan.lambda_max:.6g}] "
                "do not enclose the spectrum"
            )
        acc = acc + 2.0 * ik * coeff[k] * t_next
        t_prev, t_curr = t_curr, t_next
    return phase * acc


def propagate(
    hop: HermitianOperator,
    u: np.ndarray,
    t: float,
    plan: PropagationPlan,
) -> np.ndarray:
    """Return exp(itH) u (the sign of t selects the direction).

    The result norm matches the input norm to within 10x the plan
    tolerance for any admissible plan.
    """
    u = np.asarray(u, dtype=complex)
    if not np.all(np.isfinite(u)):
        raise ValueError("state vector must be finite")
    if u.shape != (hop.dim,):
        raise ValueError(f"state has shape {u.shape}, operator dimension {hop.dim}")
    if t == 0.0:
        return u.copy()
    if plan.kernel == "eigenbasis":
        sd = plan.spectral
        c = sd.vectors.conj().T @ u
        return sd.vectors @ (np.exp(1j * t * sd.eigenvalues) * c)
    return _chebyshev_apply(hop.mat, u, t, plan)


@dataclass
class EvolveResult:
    """States sampled along a time grid plus the accumulated error budget."""

    times: np.ndarray
    states: np.ndarray          # shape (len(times), dim)
    error_bound: float          # steps * tolerance

    def __iter__(self):
        return iter(self.states)


def evolve_trace(
    hop: HermitianOperator,
    u: np.ndarray,
    times: np.ndarray,
    plan: PropagationPlan,
    sign: int = 1,
) -> EvolveResult:
    """States exp(sign * i t_k H) u for an ascending time grid (t_k >= 0 typical).

    Uses time-stepping from the previous state, so the error budget is
    steps * tolerance (reported in the result).  The eigenbasis kernel
    synthesizes all times in one batched product instead; its per-time
    error does not accumulate.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-D array")
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted ascending")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    u = np.asarray(u, dtype=complex)
    if plan.kernel == "eigenbasis":
        sd = plan.spectral
        c = sd.vectors.conj().T @ u
        phases = np.exp(sign * 1j * times[None, :] * sd.eigenvalues[:, None])  # (dim, nt)
        states = (sd.vectors @ (phases * c[:, None])).T
        return EvolveResult(times=times, states=states, error_bound=plan.tolerance * len(times))
    states = np.empty((times.size, u.size), dtype=complex)
    current = u.copy()
    prev_t = 0.0
    for i, t in enumerate(times):
        dt = t - prev_t
        if dt != 0.0:
            current = propagate(hop, current, sign * dt, plan)
            prev_t = t
        states[i] = current
    return EvolveResult(times=times, states=states, error_bound=plan.tolerance * times.size)


def quantile_radius(grid: Grid, u: np.ndarray, q: float = 0.999) -> float:
    """Smallest radius containing a fraction q of the state's mass."""
    u = np.asarray(u)
    mass = np.abs(u) ** 2
    total = mass.sum()
    if total == 0.0:
        return 0.0
    order = np.argsort(np.abs(grid.points))
    cum = np.cumsum(mass[order])
    idx = int(np.searchsorted(cum, q * total))
    idx = min(idx, grid.n - 1)
    return float(np.abs(grid.points[order[idx]]))


def reflection_window(grid: Grid, u: np.ndarray, energy_cut: float, q: float = 0.999) -> float:
    """Largest trustworthy time before boundary reflections, (L - r_q) / (2 sqrt(E)).

    The factor 2 sqrt(E) is the maximal group velocity of the discrete free
    dispersion on the energy band below `energy_cut`.  A state whose
    quantile radius exceeds L/2 is not localized; the window collapses to 0
    with a warning.
    """
    if energy_cut <= 0:
        raise ValueError("energy_cut must be positive")
    r_q = quantile_radius(grid, u, q=q)
    if r_q > grid.length / 2.0:
        warnings.warn(
            f"state is not localized (r_q = {r_q:.3g} > L/2 = {grid.length / 2:.3g}); "
            "reflection window is 0",
            stacklevel=2,
        )
        return 0.0
    return float((grid.length - r_q) / (2.0 * np.sqrt(energy_cut)))
