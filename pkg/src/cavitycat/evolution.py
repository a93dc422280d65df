"""Unitary propagation under piecewise-constant Hamiltonians.

Hamiltonians here conserve an excitation number, so they split into small
invariant blocks. Blocks up to :data:`EIG_MAX_DIM` are diagonalized exactly
(and the decomposition is cached on the operator); larger blocks use a
Lanczos exponential-times-vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import linear_sum_assignment

from . import hilbert as hb
from .errors import BasisMismatchError, LeakageError, NonHermitianError, NotDispersiveError

EIG_MAX_DIM = 2000
#: Summed population of the top two Fock levels tolerated after a step.
LEAKAGE_TOL = 1e-8
KRYLOV_TOL = 1e-12


def leakage(psi: hb.StateVector) -> float:
    """Largest top-two-level population over the truncated Fock factors.

    Fock factors with cutoff 1 are two-level restrictions by construction
    and are not monitored.
    """
    worst = 0.0
    for i, f in enumerate(psi.basis.factors):
        if f.kind is hb.Kind.FOCK and f.size >= 2:
            worst = max(worst, float(psi.populations(i)[-2:].sum()))
    return worst


def _check_leakage(psi, tol):
    if tol is None:
        return
    leak = leakage(psi)
    if leak > tol:
        raise LeakageError(
            f"top-level Fock population {leak:.3g} exceeds {tol:.1e}; increase the cutoff"
        )


def _check_inputs(H, psi):
    if not isinstance(H, hb.Operator) or not H.hermitian:
        raise NonHermitianError("propagation requires a Hermitian-flagged Operator")
    if H.basis != psi.basis:
        raise BasisMismatchError(f"Hamiltonian basis {H.basis} does not match state basis {psi.basis}")


def _block_matrix(H, idx):
    m = H.matrix
    if sp.issparse(m):
        return m[idx][:, idx]
    return m[np.ix_(idx, idx)]


def _spectral(H: hb.Operator):
    """Per-block ``(indices, eigenvalues, eigenvectors)``; vectors are None for Krylov blocks."""
    cached = getattr(H, "_spectral_cache", None)
    if cached is None:
        cached = []
        for idx in H.blocks():
            if idx.size > EIG_MAX_DIM:
                cached.append((idx, None, None))
                continue
            blk = _block_matrix(H, idx)
            blk = blk.toarray() if sp.issparse(blk) else np.asarray(blk)
            w, v = np.linalg.eigh(blk)
            cached.append((idx, w, v))
        H._spectral_cache = cached
    return cached


def expm_krylov(matrix, v: np.ndarray, t: float, tol: float = KRYLOV_TOL, m_max: int = 40) -> np.ndarray:
    """``exp(-i t A) v`` for Hermitian ``A`` by restarted Lanczos.

    The spectrum is centred with a Gershgorin estimate and the interval is
    split into substeps with ``radius * tau <= m_max / 4``; a substep is
    halved whenever the a-posteriori error estimate exceeds ``tol``.
    """
    A = sp.csr_array(matrix) if not sp.issparse(matrix) else matrix
    diag = A.diagonal().real
    radius_rows = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    lo, hi = float((diag - radius_rows).min()), float((diag + radius_rows).max())
    centre, radius = 0.5 * (lo + hi), max(0.5 * (hi - lo), 1e-300)

    def matvec(x):
        return A @ x - centre * x

    w = np.array(v, dtype=complex)
    remaining = float(t)
    tau_max = (m_max / 4.0) / radius
    while remaining != 0.0:
        tau = math.copysign(min(abs(remaining), tau_max), remaining)
        while True:
            w_new, err = _lanczos_step(matvec, w, tau, m_max)
            if err <= tol * max(1.0, np.linalg.norm(w)) or abs(tau) < 1e-300:
                break
            tau /= 2.0
        w = w_new
        remaining -= tau
        if abs(remaining) < 1e-15 * abs(t):
            remaining = 0.0
    return w * np.exp(-1j * centre * t)


def _lanczos_step(matvec, v, tau, m_max):
    beta0 = np.linalg.norm(v)
    if beta0 == 0.0:
        return v.copy(), 0.0
    n = v.size
    m_max = min(m_max, n)
    V = np.zeros((m_max + 1, n), dtype=complex)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    V[0] = v / beta0
    m = m_max
    for j in range(m_max):
        w = matvec(V[j])
        alpha[j] = np.vdot(V[j], w).real
        w = w - alpha[j] * V[j] - (beta[j - 1] * V[j - 1] if j > 0 else 0.0)
        # full reorthogonalization
        w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-14 * max(1.0, abs(alpha[j])):
            m = j + 1
            break
        V[j + 1] = w / beta[j]
    theta, S = eigh_tridiagonal(alpha[:m], beta[: m - 1])
    coeff = S @ (np.exp(-1j * theta * tau) * S[0].conj())
    err = beta0 * abs(beta[m - 1]) * abs(coeff[-1]) if m < n and beta[m - 1] > 0 else 0.0
    return beta0 * (coeff @ V[:m]), err


def propagate(
    H: hb.Operator,
    psi: hb.StateVector,
    t: float,
    leakage_tol: float | None = LEAKAGE_TOL,
    method: str = "auto",
) -> hb.StateVector:
    """``exp(-i H t) psi``.

    Negative ``t`` runs the evolution backwards. ``method`` is ``"auto"``,
    ``"eig"`` or ``"krylov"``; ``auto`` diagonalizes blocks up to
    :data:`EIG_MAX_DIM` and uses Lanczos above that.

    Raises
    ------
    LeakageError
        If the result populates the top two levels of a Fock factor beyond
        ``leakage_tol`` (pass ``None`` to disable the monitor).
    """
    _check_inputs(H, psi)
    if t == 0:
        return psi
    x = psi.amplitudes
    out = np.zeros_like(x)
    if method == "krylov":
        out = expm_krylov(H.matrix, x, t)
    else:
        for idx, w, v in _spectral(H):
            xb = x[idx]
            if not xb.any():
                continue
            if v is None:
                if method == "eig":
                    blk = _block_matrix(H, idx)
                    w2, v2 = np.linalg.eigh(blk.toarray() if sp.issparse(blk) else blk)
                    out[idx] = v2 @ (np.exp(-1j * w2 * t) * (v2.conj().T @ xb))
                else:
                    out[idx] = expm_krylov(_block_matrix(H, idx), xb, t)
            else:
                out[idx] = v @ (np.exp(-1j * w * t) * (v.conj().T @ xb))
    result = hb.StateVector(psi.basis, out)
    _check_leakage(result, leakage_tol)
    return result


def dressed_energies(H: hb.Operator) -> np.ndarray:
    """Exact eigenvalue attached to every bare basis state.

    Within each block, eigenvectors are matched one-to-one to bare states by
    maximal overlap. A match with weight at most 1/2 means the block is too
    close to resonance for the labels to be meaningful.
    """
    cached = getattr(H, "_dressed_cache", None)
    if cached is not None:
        return cached
    energies = np.empty(H.dim)
    for idx, w, v in _spectral(H):
        if v is None:
            raise NotDispersiveError(f"block of size {idx.size} too large for dressed labelling")
        weight = np.abs(v) ** 2
        rows, cols = linear_sum_assignment(-weight)
        if weight[rows, cols].min() <= 0.5:
            raise NotDispersiveError(
                "dressed states are not adiabatically connected to bare states (near resonance)"
            )
        energies[idx[rows]] = w[cols]
    H._dressed_cache = energies
    return energies


def propagate_adiabatic(
    H: hb.Operator, psi: hb.StateVector, t: float, leakage_tol: float | None = LEAKAGE_TOL
) -> hb.StateVector:
    """Evolution for a coupling switched on and off slowly.

    Each bare state enters its dressed counterpart, accrues the exact dressed
    phase ``exp(-i E t)`` and returns, so the propagator is diagonal in the
    bare basis. Ramp durations are taken as negligible compared with ``t``.
    """
    _check_inputs(H, psi)
    if t == 0:
        return psi
    result = hb.StateVector(psi.basis, np.exp(-1j * dressed_energies(H) * t) * psi.amplitudes)
    _check_leakage(result, leakage_tol)
    return result


@dataclass(frozen=True)
class Segment:
    hamiltonian: hb.Operator
    duration: float
    adiabatic: bool = False

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("segment durations must be nonnegative")
        if not self.hamiltonian.hermitian:
            raise NonHermitianError("segment Hamiltonian must be Hermitian-flagged")


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    leakage: list = field(default_factory=list)

    @property
    def final(self) -> hb.StateVector:
        return self.states[-1]


def propagate_schedule(
    segments, psi0: hb.StateVector, samples_per_segment: int = 1, leakage_tol: float | None = LEAKAGE_TOL
) -> Trajectory:
    """Run segments in order, sampling each uniformly.

    Samples inside a segment are propagated from the segment start, so the
    end of each segment is exactly ``propagate(H, start, duration)``.
    """
    if samples_per_segment < 1:
        raise ValueError("samples_per_segment must be >= 1")
    traj = Trajectory([0.0], [psi0], [leakage(psi0)])
    t0, start = 0.0, psi0
    for seg in segments:
        if seg.duration == 0:
            continue
        step = propagate_adiabatic if seg.adiabatic else propagate
        for k in range(1, samples_per_segment + 1):
            dt = seg.duration * k / samples_per_segment
            state = step(seg.hamiltonian, start, dt, leakage_tol)
            traj.times.append(t0 + dt)
            traj.states.append(state)
            traj.leakage.append(leakage(state))
        t0 += seg.duration
        start = traj.states[-1]
    return traj
