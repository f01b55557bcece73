"""Construction of the modified conjugate operator and its identity checks.

Given the split [H, iA] = cH + K, the weighted remainder K_h = h K h (with
h = <H>^{-s/2}) is integrated along the evolution,

    W_T = integral_0^T exp(-isH) (P K_h P) exp(isH) ds,

in closed form in the H-eigenbasis: entry (j, k) of W_T there is
M_jk * Phi_T(lam_k - lam_j) with Phi_T(w) = (exp(iTw) - 1)/(iw) and
Phi_T(0) = T.  No quadrature error enters; Gauss-Legendre quadrature
survives only as an independent test oracle.

The drift added to the weighted conjugate operator is B = -W_T: this
orientation is forced by the generator identity, since

    [H, iW_T] = P K_h P - exp(-iTH) P K_h P exp(iTH)

exactly, so with B = -W_T the modified operator At = A_h + B satisfies

    P [H, iAt] P = c H_h P + exp(-iTH) P K_h P exp(iTH)

to machine precision: the weighted remainder cancels and only the
finite-time tail survives.  The tail is carried exactly everywhere; no
strong-limit claim is made (the 2-norm of the tail is constant in T by
unitary invariance, and the eigenbasis diagonal of W_T grows linearly in
T, both structural facts of finite dimension that the reports surface).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .operators import HermitianOperator, SpectralData, hermitian, energy_weight_values


def oscillatory_filter(eigenvalues: np.ndarray, t: float) -> np.ndarray:
    """Matrix of Phi_t(lam_k - lam_j), the finite-time phase-difference integral."""
    om = eigenvalues[None, :] - eigenvalues[:, None]
    small = np.abs(om) < 1e-13
    safe = np.where(small, 1.0, om)
    return np.where(small, t, (np.exp(1j * t * safe) - 1.0) / (1j * safe))


def weighted_remainder(
    spectral: SpectralData,
    remainder: np.ndarray,
    proj: np.ndarray,
    s: float,
) -> np.ndarray:
    """P K_h P with K_h = <H>^{-s/2} K <H>^{-s/2}."""
    w = energy_weight_values(spectral.eigenvalues, s)
    hs = (spectral.vectors * w[None, :]) @ spectral.vectors.conj().T
    kh = hs @ remainder @ hs
    return proj @ kh @ proj


@dataclass
class DriftBuildTrace:
    """The raw time-integral W_T with its convergence diagnostics."""

    truncation_time: float
    raw_integral: HermitianOperator     # W_T, the positive-orientation integral
    cauchy: list = field(default_factory=list)   # [(T_prev, T_next, ||W_next - W_prev||_2)]
    cauchy_nonincreasing: bool = True
    method: str = "eigenbasis"
    eigenbasis_residual: float = 0.0    # entrywise check against the closed form
    s: float = 0.0


def integrate_drift(
    spectral: SpectralData,
    remainder: np.ndarray | HermitianOperator,
    proj: np.ndarray | HermitianOperator,
    s: float,
    t_final: float,
    method: str = "eigenbasis",
    quadrature_nodes: int = 1024,
) -> DriftBuildTrace:
    """Build W_T = integral_0^T exp(-isH) P K_h P exp(isH) ds.

    `method` is "eigenbasis" (closed-form filter, exact) or "quadrature"
    (Gauss-Legendre with Pade matrix exponentials; the slow independent
    route).  The Cauchy monitor records increment norms at the doubling
    checkpoints T/8, T/4, T/2, T; in finite dimension the eigenbasis
    diagonal of the integrand contributes linear growth, so a
    non-decreasing monitor is a reportable finding, not an error.
    """
    if t_final < 0:
        raise ValueError("truncation time must be nonnegative")
    kmat = remainder.mat if isinstance(remainder, HermitianOperator) else np.asarray(remainder)
    pmat = proj.mat if isinstance(proj, HermitianOperator) else np.asarray(proj)
    m = weighted_remainder(spectral, kmat, pmat, s)
    m_eig = spectral.to_eigenbasis(m)

    def closed_form(t: float) -> np.ndarray:
        return spectral.from_eigenbasis(m_eig * oscillatory_filter(spectral.eigenvalues, t))

    if method == "eigenbasis":
        build = closed_form
    elif method == "quadrature":
        hmat = spectral.from_eigenbasis(np.diag(spectral.eigenvalues)).real

        def build(t: float) -> np.ndarray:
            if t == 0.0:
                return np.zeros_like(m)
            nodes, weights = np.polynomial.legendre.leggauss(quadrature_nodes)
            out = np.zeros_like(m)
            for xi, wi in zip(nodes, weights):
                si = (xi + 1.0) * t / 2.0
                u = scipy.linalg.expm(-1j * si * hmat)
                out = out + (wi * t / 2.0) * (u @ m @ u.conj().T)
            return out
    else:
        raise ValueError(f"unknown build method {method!r}")

    checkpoints = [t_final / 8.0, t_final / 4.0, t_final / 2.0, t_final]
    mats = [build(t) for t in checkpoints]
    cauchy = []
    prev = np.zeros_like(m)
    prev_t = 0.0
    for t, cur in zip(checkpoints, mats):
        cauchy.append((prev_t, t, float(np.linalg.norm(cur - prev, 2))))
        prev, prev_t = cur, t
    increments = [c[2] for c in cauchy[1:]]
    nonincreasing = all(b <= a * (1 + 1e-12) for a, b in zip(increments, increments[1:]))

    w_final = hermitian(mats[-1], role="drift")
    resid = float(np.abs(w_final.mat - closed_form(t_final)).max())
    scale = max(float(np.abs(w_final.mat).max()), 1e-300)
    if method == "eigenbasis" and resid > 1e-13 * scale:
        raise RuntimeError(f"eigenbasis drift deviates from its closed form by {resid:.3e}")
    return DriftBuildTrace(
        truncation_time=float(t_final),
        raw_integral=w_final,
        cauchy=cauchy,
        cauchy_nonincreasing=bool(nonincreasing),
        method=method,
        eigenbasis_residual=resid,
        s=s,
    )


@dataclass
class ConjugateOperator:
    """The modified conjugate operator At = A_h + B.

    A_h = h A h is the weighted conjugate operator; B = -W_T is the drift
    (negative orientation of the raw integral, which is what cancels the
    weighted remainder in the generator identity).
    """

    weighted_base: HermitianOperator    # A_h
    drift: HermitianOperator            # B = -W_T
    modified: HermitianOperator         # At = A_h + B
    s: float
    truncation_time: float
    drift_norm: float
    cauchy_nonincreasing: bool
    remainder_weighted: np.ndarray = field(repr=False)   # P K_h P used in the build

    @property
    def dim(self) -> int:
        return self.modified.dim


def build_conjugate(
    aop: HermitianOperator,
    trace: DriftBuildTrace,
    spectral: SpectralData,
    s: float,
    proj: np.ndarray | HermitianOperator | None = None,
    remainder: np.ndarray | HermitianOperator | None = None,
) -> ConjugateOperator:
    """Assemble At = A_h + B from the dilation generator and a drift trace.

    For s = 0 the weight is the identity and A_h = A exactly.  Reports the
    drift norm and the verdict of the Cauchy monitor.  `proj` and
    `remainder` are only needed to re-derive P K_h P for the verification
    routines; when omitted they are reconstructed from the trace.
    """
    if abs(s - trace.s) > 0:
        raise ValueError(f"weight mismatch: trace built with s={trace.s}, requested s={s}")
    w = energy_weight_values(spectral.eigenvalues, s)
    hs = (spectral.vectors * w[None, :]) @ spectral.vectors.conj().T
    a_h = hermitian(hs @ aop.mat @ hs, role="conjugate", grid=aop.grid)
    b = hermitian(-trace.raw_integral.mat, role="drift", grid=aop.grid)
    modified = hermitian(a_h.mat + b.mat, role="modified", grid=aop.grid)
    if proj is not None and remainder is not None:
        kmat = remainder.mat if isinstance(remainder, HermitianOperator) else np.asarray(remainder)
        pmat = proj.mat if isinstance(proj, HermitianOperator) else np.asarray(proj)
        kwp = weighted_remainder(spectral, kmat, pmat, s)
    else:
        # W_T determines P K_h P only through the filter; invert it on the
        # eigenbasis entries (exact where the filter is nonzero).
        w_eig = spectral.to_eigenbasis(trace.raw_integral.mat)
        phi = oscillatory_filter(spectral.eigenvalues, trace.truncation_time)
        safe = np.where(np.abs(phi) < 1e-300, 1.0, phi)
        kwp = spectral.from_eigenbasis(np.where(np.abs(phi) < 1e-300, 0.0, w_eig / safe))
    return ConjugateOperator(
        weighted_base=a_h,
        drift=b,
        modified=modified,
        s=s,
        truncation_time=trace.truncation_time,
        drift_norm=float(np.linalg.norm(b.mat, 2)),
        cauchy_nonincreasing=trace.cauchy_nonincreasing,
        remainder_weighted=kwp,
    )


def _phases(spectral: SpectralData, t: float) -> np.ndarray:
    return np.exp(1j * t * spectral.eigenvalues)


def _conjugate_by_evolution(spectral: SpectralData, m: np.ndarray, t: float) -> np.ndarray:
    """exp(-itH) M exp(itH) via eigenbasis phases."""
    m_eig = spectral.to_eigenbasis(m)
    ph = _phases(spectral, t)
    return spectral.from_eigenbasis((np.conj(ph)[:, None] * m_eig) * ph[None, :])


def verify_generator_identity(
    spectral: SpectralData,
    conj: ConjugateOperator,
    c: float,
    proj: np.ndarray | HermitianOperator,
) -> dict:
    """Check P [H, iAt] P = c H_h P + exp(-iTH) P K_h P exp(iTH) exactly.

    Returns a report with
      * `drift_identity_residual`: || P[H, iB]P - P(exp(-iTH) K_h exp(iTH) - K_h)P ||_2,
        the finite-time commutator identity for the drift alone (machine zero),
      * `exact_residual`: the same for the full modified operator,
      * `tail_norm`: || exp(-iTH) P K_h P exp(iTH) ||_2, the term the
        infinite-time theory sends to zero weakly; its 2-norm equals
        || P K_h P ||_2 for every T (unitary invariance) and is reported
        as such.
    """
    from .commutators import commutator

    pmat = proj.mat if isinstance(proj, HermitianOperator) else np.asarray(proj)
    hmat = spectral.from_eigenbasis(np.diag(spectral.eigenvalues))
    hmat = (hmat + hmat.conj().T) / 2
    t_b = conj.truncation_time
    kwp = conj.remainder_weighted
    tail = _conjugate_by_evolution(spectral, kwp, t_b)

    drift_comm = pmat @ commutator(hmat, conj.drift.mat) @ pmat
    drift_target = pmat @ (tail - kwp) @ pmat
    drift_resid = float(np.linalg.norm(drift_comm - drift_target, 2))

    w = energy_weight_values(spectral.eigenvalues, conj.s)
    h_h = spectral.from_eigenbasis(np.diag(spectral.eigenvalues * w**2))
    full = pmat @ commutator(hmat, conj.modified.mat) @ pmat
    target = c * (h_h @ pmat) + pmat @ tail @ pmat
    exact_resid = float(np.linalg.norm(full - target, 2))

    k_scale = float(np.linalg.norm(kwp, 2))
    return {
        "drift_identity_residual": drift_resid,
        "exact_residual": exact_resid,
        "tail_norm": float(np.linalg.norm(tail, 2)),
        "tail_norm_is_time_constant": True,
        "weighted_remainder_norm": k_scale,
        "truncation_time": t_b,
        "scale": k_scale,
        "passed": bool(
            drift_resid <= 1e-10 * max(k_scale, 1e-300)
            and exact_resid <= 1e-10 * max(k_scale, float(np.linalg.norm(h_h, 2)))
        ),
    }


def verify_group_commutator(
    spectral: SpectralData,
    conj: ConjugateOperator,
    c: float,
    proj: np.ndarray | HermitianOperator,
    t: float,
) -> dict:
    """Check the finite-time group-commutator identity at time t.

    Exact algebra gives P [exp(itH), At] P = t c H_h P exp(itH) + D(t) with

        D(t) = integral_0^t exp(i(t-s)H) X exp(isH) ds,
        X    = P [H, iAt] P - c H_h P,

    computed in closed form through the oscillatory filter.  The report
    carries the bare deviation Delta(t) = P[exp(itH), At]P - t c H_h P
    exp(itH), the predicted correction norm ||D(t)||, and the exact
    residual ||Delta(t) - D(t)||, which must vanish to tolerance.  The
    bare deviation cannot vanish in finite dimension: commutators have
    zero diagonal in the H-eigenbasis while H_h P does not, so the bound
    ||Delta(t)|| <= ||D(t)|| + tol is the sharp verifiable form.
    """
    from .commutators import commutator

    pmat = proj.mat if isinstance(proj, HermitianOperator) else np.asarray(proj)
    lam = spectral.eigenvalues
    w = energy_weight_values(lam, conj.s)
    h_h = spectral.from_eigenbasis(np.diag(lam * w**2))
    if t == 0.0:
        u_t = np.eye(lam.size, dtype=complex)
    else:
        u_t = spectral.from_eigenbasis(np.diag(_phases(spectral, t)))

    bracket = u_t @ conj.modified.mat - conj.modified.mat @ u_t
    delta = pmat @ bracket @ pmat - t * c * (h_h @ pmat @ u_t)

    x = pmat @ commutator(
        spectral.from_eigenbasis(np.diag(lam)), conj.modified.mat
    ) @ pmat - c * (h_h @ pmat)
    x_eig = spectral.to_eigenbasis(x)
    phi = oscillatory_filter(lam, t)
    ph_t = _phases(spectral, t)
    predicted = spectral.from_eigenbasis(ph_t[:, None] * (x_eig * phi))

    scale = max(float(np.linalg.norm(h_h, 2)), 1e-300)
    exact_resid = float(np.linalg.norm(delta - predicted, 2))
    return {
        "t": t,
        "bare_deviation": float(np.linalg.norm(delta, 2)),
        "predicted_correction": float(np.linalg.norm(predicted, 2)),
        "exact_residual": exact_resid,
        "scale": scale,
        "passed": bool(exact_resid <= 1e-9 * scale),
    }


def verify_drift_commutator_bound(conj: ConjugateOperator) -> dict:
    """Report || [At, B] ||_2; stabilization across grids is checked by the caller."""
    at = conj.modified.mat
    b = conj.drift.mat
    comm = at @ b - b @ at
    anti = float(np.abs(comm + (b @ at - at @ b)).max())
    return {
        "norm": float(np.linalg.norm(comm, 2)),
        "antisymmetry_defect": anti,
    }


def choose_truncation_time(
    spectral: SpectralData,
    remainder: np.ndarray | HermitianOperator,
    proj: np.ndarray | HermitianOperator,
    s: float,
    cap: float,
    target_fraction: float = 0.10,
    t_start: float = 1.0,
) -> dict:
    """Pick the drift truncation time by the tail-norm policy.

    The policy asks for || exp(-iTH) P K_h P exp(iTH) ||_2 <= fraction *
    ||K_h||_2.  That norm is independent of T (unitary invariance), so the
    condition either holds for every T (band selection already suppresses
    the remainder) or for none; the search over doubling T is retained for
    the Cauchy diagnostics and the result records the constancy.  The
    returned time is the cap when the condition never binds.
    """
    kmat = remainder.mat if isinstance(remainder, HermitianOperator) else np.asarray(remainder)
    pmat = proj.mat if isinstance(proj, HermitianOperator) else np.asarray(proj)
    w = energy_weight_values(spectral.eigenvalues, s)
    hs = (spectral.vectors * w[None, :]) @ spectral.vectors.conj().T
    kh = hs @ kmat @ hs
    kh_norm = float(np.linalg.norm(kh, 2))
    tail_norm = float(np.linalg.norm(pmat @ kh @ pmat, 2))
    satisfied = tail_norm <= target_fraction * max(kh_norm, 1e-300)
    times = []
    t = t_start
    while t <= cap:
        times.append(t)
        t *= 2.0
    chosen = times[0] if (satisfied and times) else cap
    return {
        "truncation_time": float(chosen),
        "tail_norm": tail_norm,
        "weighted_norm": kh_norm,
        "fraction": tail_norm / max(kh_norm, 1e-300),
        "target_fraction": target_fraction,
        "satisfied": bool(satisfied),
        "tail_norm_is_time_constant": True,
        "times_scanned": times,
    }
