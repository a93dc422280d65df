"""Fidelities, phase-space grids, lifetime estimates and the bosonization check."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter

from . import hilbert as hb
from .errors import BasisMismatchError, ContractViolation, DomainError, SingularityError
from .evolution import LEAKAGE_TOL, propagate
from .hamiltonians import ModelParams, full_hamiltonian, jc_hamiltonian
from .protocols import photon_plus

GRID_POINTS = 201
GRID_MARGIN = 4.0


def fidelity(x: hb.StateVector, y: hb.StateVector) -> float:
    """``|<x|y>|^2`` clipped to ``[0, 1]``."""
    if x.basis != y.basis:
        raise BasisMismatchError(f"basis {x.basis} does not match {y.basis}")
    return float(min(1.0, abs(np.vdot(x.amplitudes, y.amplitudes)) ** 2))


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """Closed form ``<alpha|beta> = exp(-|a|^2/2 - |b|^2/2 + conj(a) b)``."""
    return complex(np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * abs(beta) ** 2 + np.conj(alpha) * beta))


@dataclass(frozen=True)
class LifetimeEstimate:
    t_r: float
    d: float
    t: float


def cat_lifetime(t_r: float, alpha_tilde: complex) -> LifetimeEstimate:
    """Cat lifetime ``2 T_r / D^2`` with ``D = 2|alpha~|``.

    The estimate assumes ``D >> 1``: below ``D = 2`` a warning is issued and
    below ``D = 1`` the call is rejected.
    """
    if t_r <= 0:
        raise DomainError("damping time must be positive")
    d = 2.0 * abs(alpha_tilde)
    if d == 0.0:
        raise SingularityError("lifetime diverges for a vanishing cat separation")
    if d < 1.0:
        raise DomainError(f"separation D = {d:.3g} is far outside the D >> 1 regime")
    if d < 2.0:
        warnings.warn(f"separation D = {d:.3g} is small; 2 T_r / D^2 is a rough estimate", stacklevel=2)
    return LifetimeEstimate(t_r=float(t_r), d=d, t=2.0 * t_r / d**2)


# --------------------------------------------------------------------------
# phase space


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Values on a uniform square grid, ``values[i, j]`` at ``(x[j], p[i])``.

    Wigner grids use quadratures ``x + i p = sqrt(2) beta``; Husimi grids use
    ``x + i p = beta`` directly.
    """

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray
    kind: str

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.x, axis=1), self.p))

    def to_beta(self, x: float, p: float) -> complex:
        return complex(x, p) / math.sqrt(2.0) if self.kind == "wigner" else complex(x, p)


@dataclass(frozen=True)
class GridSpec:
    half_width: float | None = None
    points: int = GRID_POINTS
    centre: complex = 0.0


def _single_mode(psi: hb.StateVector) -> np.ndarray:
    if len(psi.basis) != 1 or psi.basis.factors[0].kind is hb.Kind.QUBIT:
        raise ContractViolation(f"phase-space maps need a single oscillator state; reduce {psi.basis} first")
    return psi.amplitudes


def _axes(spec: GridSpec, half_width: float):
    hw = spec.half_width if spec.half_width is not None else half_width
    c = complex(spec.centre)
    return (
        np.linspace(c.real - hw, c.real + hw, spec.points),
        np.linspace(c.imag - hw, c.imag + hw, spec.points),
    )


def _amplitude_scale(amps: np.ndarray) -> float:
    n = np.arange(amps.size)
    return math.sqrt(float(np.sum(n * np.abs(amps) ** 2)))


def wigner(psi: hb.StateVector, spec: GridSpec | None = None) -> PhaseSpaceGrid:
    """Wigner function ``(2/pi) <D(beta) P D(beta)^dag>``, reported per unit ``dx dp``.

    The displaced-parity expectation is evaluated through the Fock-basis
    Laguerre kernels ``W_mn``, generated by a stable recursion over the
    whole grid at once, so the result is exact for the truncated state.
    The default window is ``sqrt(2)|alpha| + 4`` in quadrature units, where
    ``|alpha|^2`` is the mean excitation.
    """
    spec = spec or GridSpec()
    psi_n = _single_mode(psi)
    x, p = _axes(spec, math.sqrt(2.0) * _amplitude_scale(psi_n) + GRID_MARGIN)
    X, P = np.meshgrid(x, p)
    A = (X + 1j * P) / math.sqrt(2.0)
    M = psi_n.size
    rho = np.outer(psi_n, psi_n.conj())
    W_prev = [None] * M
    W_prev[0] = np.exp(-2.0 * np.abs(A) ** 2) / np.pi
    W = rho[0, 0].real * W_prev[0]
    for n in range(1, M):
        W_prev[n] = 2.0 * A * W_prev[n - 1] / math.sqrt(n)
        W = W + 2.0 * np.real(rho[0, n] * W_prev[n])
    for m in range(1, M):
        temp = W_prev[m]
        W_prev[m] = (2.0 * np.conj(A) * temp - math.sqrt(m) * W_prev[m - 1]) / math.sqrt(m)
        W = W + np.real(rho[m, m] * W_prev[m])
        for n in range(m + 1, M):
            nxt = (2.0 * A * W_prev[n - 1] - math.sqrt(m) * temp) / math.sqrt(n)
            temp = W_prev[n]
            W_prev[n] = nxt
            W = W + 2.0 * np.real(rho[m, n] * W_prev[n])
    return PhaseSpaceGrid(x, p, np.asarray(W.real), "wigner")


def husimi(psi: hb.StateVector, spec: GridSpec | None = None) -> PhaseSpaceGrid:
    """``Q(beta) = |<beta|psi>|^2 / pi`` on the complex ``beta`` plane."""
    spec = spec or GridSpec()
    psi_n = _single_mode(psi)
    x, p = _axes(spec, _amplitude_scale(psi_n) + GRID_MARGIN)
    X, P = np.meshgrid(x, p)
    bconj = X - 1j * P
    term = np.exp(-0.5 * (X**2 + P**2)).astype(complex)
    acc = term * psi_n[0]
    for n in range(1, psi_n.size):
        term = term * bconj / math.sqrt(n)
        acc = acc + term * psi_n[n]
    return PhaseSpaceGrid(x, p, np.abs(acc) ** 2 / np.pi, "husimi")


def local_maxima(grid: PhaseSpaceGrid, fraction: float = 0.5) -> list:
    """Interior local maxima above ``fraction`` of the global maximum.

    Returns ``(beta, value)`` pairs sorted by decreasing value.
    """
    v = grid.values
    peak = maximum_filter(v, size=3, mode="constant", cval=-np.inf) == v
    peak &= v >= fraction * v.max()
    peak[[0, -1], :] = False
    peak[:, [0, -1]] = False
    rows, cols = np.nonzero(peak)
    found = [(grid.to_beta(grid.x[j], grid.p[i]), float(v[i, j])) for i, j in zip(rows, cols)]
    return sorted(found, key=lambda item: -item[1])


# --------------------------------------------------------------------------
# Holstein-Primakoff convergence


@dataclass(frozen=True)
class HPRow:
    N: int
    fidelity: float
    infidelity: float
    excitation_fraction: float


def embed_jc_state(psi: hb.StateVector, photon_cutoff: int, N: int, tol: float = 1e-10) -> hb.StateVector:
    """Map ``Qubit ⊗ FockMode`` onto ``FockMode(photon_cutoff) ⊗ CollectiveSpin(N)``.

    The photon qubit occupies Fock levels 0 and 1 and the oscillator index
    ``n`` becomes the Dicke excitation ``k = n``.
    """
    t = psi.tensor_view()
    out = np.zeros((photon_cutoff + 1, N + 1), dtype=complex)
    keep = min(t.shape[1], N + 1)
    lost = float(np.sum(np.abs(t[:, keep:]) ** 2))
    if lost > tol:
        raise ContractViolation(f"oscillator weight {lost:.3g} above Dicke index {N}")
    out[:2, :keep] = t[:, :keep]
    return hb.StateVector(hb.Basis((hb.FockMode(photon_cutoff), hb.CollectiveSpin(N))), out.ravel())


def hp_convergence(
    N_list,
    eta: complex,
    params: ModelParams,
    t: float,
    photon_cutoff: int = 1,
    atom_cutoff: int | None = None,
    leakage_tol: float | None = LEAKAGE_TOL,
) -> list:
    """Compare the collective-spin model against its bosonized JC limit.

    For every ``N`` the coupling is rescaled to keep ``g sqrt(N)`` and
    ``Delta`` of ``params`` fixed. The spin model starts from
    ``(|0>+|1>)/√2 ⊗ atomic_coherent_state(N, eta)``, the JC model from
    ``(|0>+|1>)/√2 ⊗ |eta>``; both evolve for ``t`` and the fidelity of the
    final joint states is reported.

    The spin Hamiltonian couples with ``-g``; the JC side is run with the same
    sign by conjugating with the photon parity. ``photon_cutoff = 1`` keeps
    the photon two-level on both sides; larger cutoffs add the photon
    ``|2>`` channel, which the JC model does not have.
    """
    N_list = [int(n) for n in N_list]
    if not N_list:
        raise DomainError("N_list is empty")
    frac = abs(eta) ** 2 / min(N_list)
    if frac > 0.5:
        raise DomainError(f"excitation fraction {frac:.3g} too large for a bosonic comparison")
    cutoff = hb.default_cutoff(eta) if atom_cutoff is None else atom_cutoff
    parity = np.diag([1.0, -1.0])
    photon = photon_plus()

    jc_psi0 = hb.tensor(photon, hb.coherent_state(eta, cutoff))
    H_jc = jc_hamiltonian(params, cutoff)
    jc_final = hb.apply_local(propagate(H_jc, hb.apply_local(jc_psi0, parity, 0), t, leakage_tol), parity, 0)

    rows = []
    for N in N_list:
        pN = ModelParams(
            params.delta1, params.delta2, params.omega_c, params.omega_rf, N, params.delta, params.g_eff / math.sqrt(N)
        )
        ph = np.zeros(photon_cutoff + 1, dtype=complex)
        ph[:2] = photon.amplitudes
        spin_psi0 = hb.tensor(
            hb.StateVector(hb.Basis((hb.FockMode(photon_cutoff),)), ph), hb.atomic_coherent_state(N, eta)
        )
        spin_final = propagate(full_hamiltonian(pN, photon_cutoff), spin_psi0, t, leakage_tol)
        f = fidelity(embed_jc_state(jc_final, photon_cutoff, N), spin_final)
        rows.append(HPRow(N=N, fidelity=f, infidelity=1.0 - f, excitation_fraction=abs(eta) ** 2 / N))
    return rows


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
