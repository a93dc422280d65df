"""Model parameters and the two Hamiltonians of the scheme.

All frequencies are angular (rad/s) and hbar = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import hilbert as hb
from .errors import DomainError, ResourceError, SingularityError

#: Largest total dimension a Hamiltonian builder will allocate.
MAX_DIM = 2_000_000
#: Default bound on 4 g^2 N n / Delta^2 for the dispersive picture to hold.
DISPERSIVE_THRESHOLD = 0.01


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs and the derived two-photon parameters."""

    delta1: float
    delta2: float
    omega_c: float
    omega_rf: float
    N: int
    delta: float
    g: float

    @property
    def g_eff(self) -> float:
        """Collectively enhanced coupling ``g sqrt(N)``."""
        return self.g * math.sqrt(self.N)

    def with_atoms(self, N: int) -> "ModelParams":
        """Same Delta and g, different atom number."""
        return ModelParams(self.delta1, self.delta2, self.omega_c, self.omega_rf, int(N), self.delta, self.g)

    def t_cat(self) -> float:
        """Interaction time giving a phase splitting of pi/2."""
        return self.duration_for_phase(math.pi / 2)

    def duration_for_phase(self, phi: float) -> float:
        """Time ``t`` with ``g^2 N t / Delta = phi``."""
        if self.g == 0.0:
            raise SingularityError("no dispersive phase accrues at g = 0")
        return phi * self.delta / (self.g**2 * self.N)

    def phase(self, t: float) -> float:
        """Dispersive phase ``g^2 N t / Delta``."""
        if self.delta == 0.0:
            raise SingularityError("dispersive phase needs a nonzero detuning")
        return self.g**2 * self.N * t / self.delta

    def ratio(self, n: float) -> float:
        """Validity parameter ``4 g^2 N n / Delta^2``."""
        if self.delta == 0.0:
            raise SingularityError("validity ratio needs a nonzero detuning")
        return 4.0 * self.g**2 * self.N * n / self.delta**2


def derive_params(delta1: float, delta2: float, omega_c: float, omega_rf: float, N: int) -> ModelParams:
    """Two-photon detuning and Rabi frequency from the level scheme.

    ``Delta = delta1 + delta2 - omega_rf^2 / delta1`` and
    ``g = omega_c omega_rf / delta1``.
    """
    if delta1 == 0:
        raise SingularityError("delta1 = 0: the intermediate level is resonant")
    if int(N) != N or N < 1:
        raise DomainError(f"atom number must be a positive integer, got {N}")
    delta = delta1 + delta2 - omega_rf**2 / delta1
    g = omega_c * omega_rf / delta1
    return ModelParams(float(delta1), float(delta2), float(omega_c), float(omega_rf), int(N), float(delta), float(g))


def params_from_effective(delta: float, g: float, N: int) -> ModelParams:
    """Parameters with a prescribed two-photon detuning and coupling.

    Uses ``delta1 = omega_rf = 1``, ``omega_c = g`` and ``delta2 = delta``, so
    ``g`` is exact and ``delta`` is reproduced up to one rounding.
    """
    return derive_params(1.0, delta, g, 1.0, N)


def detuning_for_ratio(g_eff: float, n: float, ratio: float) -> float:
    """Detuning that puts the validity parameter at ``ratio`` for excitation ``n``."""
    if ratio <= 0:
        raise DomainError("ratio must be positive")
    return math.sqrt(4.0 * g_eff**2 * n / ratio)


def _guard(dim: int):
    if dim > MAX_DIM:
        raise ResourceError(f"Hilbert space dimension {dim} exceeds the limit {MAX_DIM}")


def full_hamiltonian(params: ModelParams, photon_cutoff: int = 4) -> hb.Operator:
    """``H = Delta J_z - g (a^dag J_- + J_+ a)`` on ``FockMode(photon_cutoff) ⊗ CollectiveSpin(N)``."""
    photon_cutoff = hb._check_cutoff(photon_cutoff)
    _guard((photon_cutoff + 1) * (params.N + 1))
    a, ad = hb.ladder_ops(photon_cutoff)
    jz, jp, jm = hb.collective_spin_ops(params.N)
    one = hb.identity(a.basis)
    coupling = hb.tensor(ad, jm).matrix + hb.tensor(a, jp).matrix
    m = params.delta * hb.tensor(one, jz).matrix - params.g * coupling
    return hb.Operator(one.basis + jz.basis, m, hermitian=True, storage="sparse")


def jc_hamiltonian(params: ModelParams, atom_cutoff: int) -> hb.Operator:
    """``H = Delta b^dag b + g sqrt(N) (b^dag sigma_- + sigma_+ b)`` on ``Qubit ⊗ FockMode``.

    The qubit is the photon restricted to ``{|0>, |1>}`` and
    ``sigma_+ = |1><0|``, so the exchange term conserves
    ``b^dag b + |1><1|``.
    """
    atom_cutoff = hb._check_cutoff(atom_cutoff)
    _guard(2 * (atom_cutoff + 1))
    b, bd = hb.ladder_ops(atom_cutoff)
    n = hb.number_op(atom_cutoff)
    splus = hb.photon_raising()
    qone = hb.identity(splus.basis)
    m = params.delta * hb.tensor(qone, n).matrix + params.g_eff * (
        hb.tensor(splus.dag(), bd).matrix + hb.tensor(splus, b).matrix
    )
    return hb.Operator(splus.basis + n.basis, m, hermitian=True, storage="sparse")


def free_hamiltonian(delta_prime: float, atom_cutoff: int) -> hb.Operator:
    """``H_0 = Delta' b^dag b`` on the condensate, identity on the photon qubit."""
    atom_cutoff = hb._check_cutoff(atom_cutoff)
    _guard(2 * (atom_cutoff + 1))
    n = hb.number_op(atom_cutoff)
    return hb.Operator(
        hb.Basis((hb.Qubit(),)) + n.basis,
        sp.kron(sp.identity(2), n.matrix * delta_prime, format="csr"),
        hermitian=True,
        storage="sparse",
    )


def jc_excitation_op(atom_cutoff: int) -> hb.Operator:
    """``b^dag b + |1><1|`` on ``Qubit ⊗ FockMode(atom_cutoff)``."""
    n = hb.number_op(atom_cutoff)
    proj1 = hb.Operator(hb.Basis((hb.Qubit(),)), np.diag([0.0, 1.0]), hermitian=True)
    return hb.tensor(hb.identity(proj1.basis), n) + hb.tensor(proj1, hb.identity(n.basis))


def full_excitation_op(photon_cutoff: int, N: int) -> hb.Operator:
    """``a^dag a + J_z`` on ``FockMode ⊗ CollectiveSpin``."""
    jz = hb.collective_spin_ops(N)[0]
    n = hb.number_op(photon_cutoff)
    return hb.tensor(n, hb.identity(jz.basis)) + hb.tensor(hb.identity(n.basis), jz)


@dataclass(frozen=True)
class DispersiveReport:
    n: int
    ratio: float
    e_plus: float
    e_minus: float
    valid: bool


def dispersive_eigen(params: ModelParams, n: int, threshold: float = DISPERSIVE_THRESHOLD) -> DispersiveReport:
    """Large-detuning energies of the ``n``-excitation JC doublet.

    ``E_+ ≈ (n-1) Delta - g^2 N n / Delta`` belongs to ``|1, n-1>`` and
    ``E_- ≈ n Delta + g^2 N n / Delta`` to ``|0, n>``.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"excitation number must be >= 1, got {n}")
    if params.delta == 0:
        raise SingularityError("dispersive energies need a nonzero detuning")
    shift = params.g**2 * params.N * n / params.delta
    ratio = params.ratio(n)
    return DispersiveReport(
        n=int(n),
        ratio=ratio,
        e_plus=(n - 1) * params.delta - shift,
        e_minus=n * params.delta + shift,
        valid=ratio < threshold,
    )


def jc_block(params: ModelParams, n: int) -> np.ndarray:
    """JC Hamiltonian on ``span{|1, n-1>, |0, n>}``."""
    c = params.g_eff * math.sqrt(n)
    return np.array([[(n - 1) * params.delta, c], [c, n * params.delta]])


def exact_doublet(params: ModelParams, n: int) -> tuple:
    """Exact eigenvalues of the ``n``-excitation doublet, ordered as ``(E_+, E_-)``.

    Each eigenvalue is attached to the bare state it connects to as the
    coupling is switched off: ``E_+`` to ``|1, n-1>``, ``E_-`` to ``|0, n>``.
    """
    if params.delta == 0:
        raise SingularityError("doublet labels are ambiguous at zero detuning")
    centre = (n - 0.5) * params.delta
    half = 0.5 * math.sqrt(params.delta**2 + 4 * params.g_eff**2 * n)
    lower, upper = centre - half, centre + half
    return (lower, upper) if params.delta > 0 else (upper, lower)
