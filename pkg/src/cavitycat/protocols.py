"""Cat generation, phase-amplified detection and compass-state production.

Every pipeline works on ``Qubit(photon) ⊗ FockMode(atoms)``. The photon qubit
is kept in the frame that co-rotates with its constant dispersive shift: after
a JC step of length ``t`` the ``|1>`` amplitude is multiplied by
``exp(-i g^2 N t / Delta)``. Without this the ``|1>`` branch picks up a
relative phase ``e^{i phi}`` that the cat-state bookkeeping ignores.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hilbert as hb
from .errors import (
    ContractViolation,
    DegenerateBranchError,
    DomainError,
    PostSelectionError,
)
from .evolution import LEAKAGE_TOL, propagate, propagate_adiabatic
from .hamiltonians import (
    DISPERSIVE_THRESHOLD,
    ModelParams,
    free_hamiltonian,
    jc_hamiltonian,
)

#: Probabilities below this cannot be post-selected.
MIN_PROBABILITY = 1e-12
PHOTON = 0

# |1> -> (|1> + |0>)/sqrt2, |0> -> (|0> - |1>)/sqrt2 ; columns are images of |0>, |1>
U_PI2 = np.array([[1.0, 1.0], [-1.0, 1.0]]) / math.sqrt(2.0)

COMPASS_PHASES = (math.pi / 4, -math.pi / 4, 3 * math.pi / 4, -3 * math.pi / 4)


@dataclass(frozen=True)
class MeasurementOutcome:
    outcome: int
    probability: float
    collapsed: hb.StateVector


def _photon_projector_rows(psi: hb.StateVector, photon: int) -> np.ndarray:
    return np.moveaxis(psi.tensor_view(), photon, 0)


def u_pi2(psi: hb.StateVector, photon: int = PHOTON) -> hb.StateVector:
    """Rotate the photon qubit: ``|1> -> (|1>+|0>)/√2``, ``|0> -> (|0>-|1>)/√2``.

    A Fock photon factor is accepted if its population outside ``{|0>, |1>}``
    is at most 1e-10; higher levels are left untouched.
    """
    factor = psi.basis.factors[photon]
    if factor.kind is hb.Kind.QUBIT:
        return hb.apply_local(psi, U_PI2, photon)
    if factor.kind is not hb.Kind.FOCK:
        raise ContractViolation(f"factor {photon} is not a photon mode")
    outside = float(psi.populations(photon)[2:].sum())
    if outside > 1e-10:
        raise ContractViolation(f"photon population {outside:.3g} outside the single-excitation subspace")
    u = np.eye(factor.dim, dtype=complex)
    u[:2, :2] = U_PI2
    return hb.apply_local(psi, u, photon)


def photon_phase(psi: hb.StateVector, theta: float, photon: int = PHOTON) -> hb.StateVector:
    """Multiply the photon ``|1>`` amplitude by ``exp(-i theta)``."""
    d = psi.basis.factors[photon].dim
    diag = np.ones(d, dtype=complex)
    diag[1] = np.exp(-1j * theta)
    return hb.apply_local(psi, np.diag(diag), photon)


def measure_photon(psi: hb.StateVector, outcome: int, photon: int = PHOTON) -> MeasurementOutcome:
    """Project the photon onto ``|outcome>`` and keep the renormalized remainder.

    Raises
    ------
    PostSelectionError
        If the outcome probability is below 1e-12.
    """
    if outcome not in (0, 1):
        raise DomainError(f"photon outcome must be 0 or 1, got {outcome}")
    if len(psi.basis) < 2:
        raise DomainError("measurement needs a photon factor and a remainder")
    row = _photon_projector_rows(psi, photon)[outcome].ravel()
    p = float(np.vdot(row, row).real)
    if p < MIN_PROBABILITY:
        raise PostSelectionError(f"photon outcome {outcome} has probability {p:.3g}")
    rest = hb.Basis(tuple(f for i, f in enumerate(psi.basis.factors) if i != photon))
    return MeasurementOutcome(outcome, p, hb.StateVector(rest, row / math.sqrt(p)))


def outcome_probabilities(psi: hb.StateVector, photon: int = PHOTON) -> tuple:
    rows = _photon_projector_rows(psi, photon)
    return tuple(float(np.sum(np.abs(rows[k]) ** 2)) for k in range(rows.shape[0]))


def photon_plus() -> hb.StateVector:
    """``(|0> + |1>)/√2``."""
    return hb.qubit_state(1.0, 1.0)


def jc_step(
    params: ModelParams,
    psi: hb.StateVector,
    t: float,
    switching: str = "adiabatic",
    leakage_tol: float | None = LEAKAGE_TOL,
    H: hb.Operator | None = None,
) -> hb.StateVector:
    """JC interaction for ``t`` followed by the photon-frame correction."""
    if H is None:
        H = jc_hamiltonian(params, psi.basis.factors[1].size)
    if switching == "adiabatic":
        out = propagate_adiabatic(H, psi, t, leakage_tol)
    elif switching == "sudden":
        out = propagate(H, psi, t, leakage_tol)
    else:
        raise DomainError(f"switching must be 'adiabatic' or 'sudden', got {switching!r}")
    # the |1> branch gains exp(+i g^2 N t / Delta) on top of the cat phases
    return photon_phase(out, params.phase(t))


def cat_norm_sq(alpha_tilde: complex, phi: float, branch: int) -> float:
    """``2 ∓ 2 exp(-|a|^2 (1 - cos 2phi)) cos(|a|^2 sin 2phi)``, upper sign for branch 1."""
    if branch not in (1, 2):
        raise DomainError(f"branch must be 1 or 2, got {branch}")
    r2 = abs(alpha_tilde) ** 2
    sign = -1.0 if branch == 1 else 1.0
    return 2.0 + sign * 2.0 * math.exp(-r2 * (1.0 - math.cos(2 * phi))) * math.cos(r2 * math.sin(2 * phi))


def analytic_cat(alpha_tilde: complex, phi: float, branch: int, cutoff: int | None = None) -> hb.StateVector:
    """``(|a e^{i phi}> ∓ |a e^{-i phi}>) / N_branch`` as a truncated Fock vector."""
    n2 = cat_norm_sq(alpha_tilde, phi, branch)
    if n2 <= MIN_PROBABILITY:
        raise DegenerateBranchError(f"branch {branch} normalization {n2:.3g} vanishes")
    cutoff = hb.default_cutoff(alpha_tilde) if cutoff is None else cutoff
    sign = -1.0 if branch == 1 else 1.0
    amps = hb.coherent_amplitudes(alpha_tilde * np.exp(1j * phi), cutoff) + sign * hb.coherent_amplitudes(
        alpha_tilde * np.exp(-1j * phi), cutoff
    )
    return hb.StateVector(hb.Basis((hb.FockMode(cutoff),)), amps / math.sqrt(n2)).normalized()


@dataclass
class CatResult:
    """Both post-selected branches of one cat-generation run.

    Branch 1 follows photon outcome 1 (minus superposition), branch 2 photon
    outcome 0 (plus superposition). An impossible branch is stored as None.
    """

    outcomes: dict
    probabilities: tuple
    phi: float
    alpha_tilde: complex
    t_star: float
    ratio: float
    final_state: hb.StateVector
    warnings: list = field(default_factory=list)

    def branch(self, k: int) -> hb.StateVector:
        out = self.outcomes[k]
        if out is None:
            raise PostSelectionError(f"branch {k} has probability {self.probabilities[k - 1]:.3g}")
        return out.collapsed

    @property
    def expected_probabilities(self) -> tuple:
        return tuple(cat_norm_sq(self.alpha_tilde, self.phi, k) / 4.0 for k in (1, 2))


def _dispersive_warnings(params, alpha, threshold):
    ratio = params.ratio(max(abs(alpha) ** 2, 1.0))
    notes = []
    if ratio >= threshold:
        notes.append(
            f"dispersive validity ratio {ratio:.3g} >= threshold {threshold:g}; analytic cat forms are inaccurate"
        )
    return ratio, notes


def _branch_outcomes(psi):
    outcomes, probs = {}, outcome_probabilities(psi)
    for branch, photon_outcome in ((1, 1), (2, 0)):
        try:
            outcomes[branch] = measure_photon(psi, photon_outcome)
        except PostSelectionError:
            outcomes[branch] = None
    return outcomes, (probs[1], probs[0])


def cat_protocol(
    params: ModelParams,
    alpha: complex,
    t_star: float | None = None,
    atom_cutoff: int | None = None,
    switching: str = "adiabatic",
    threshold: float = DISPERSIVE_THRESHOLD,
    leakage_tol: float | None = LEAKAGE_TOL,
) -> CatResult:
    """Prepare ``(|0>+|1>)/√2 ⊗ |alpha>``, couple for ``t_star``, rotate, measure.

    ``t_star`` defaults to the duration giving ``phi = pi/2``. ``switching``
    selects the slow (``"adiabatic"``) or instantaneous (``"sudden"``) on/off
    model for the coupling.
    """
    if t_star is None:
        t_star = params.t_cat()
    if t_star < 0:
        raise DomainError("t_star must be nonnegative")
    cutoff = hb.default_cutoff(alpha) if atom_cutoff is None else atom_cutoff
    ratio, notes = _dispersive_warnings(params, alpha, threshold)
    psi = hb.tensor(photon_plus(), hb.coherent_state(alpha, cutoff))
    psi = jc_step(params, psi, t_star, switching, leakage_tol)
    psi = u_pi2(psi)
    outcomes, probs = _branch_outcomes(psi)
    return CatResult(
        outcomes=outcomes,
        probabilities=probs,
        phi=params.phase(t_star),
        alpha_tilde=complex(alpha * np.exp(-1j * params.delta * t_star)),
        t_star=t_star,
        ratio=ratio,
        final_state=psi,
        warnings=notes,
    )


def analytic_p1(alpha_tilde_prime: complex, delta_prime: float, delta_t: float) -> float:
    """``[1 - cos(2 |a'|^2 Delta' dt)] / 2``."""
    return 0.5 * (1.0 - math.cos(2.0 * abs(alpha_tilde_prime) ** 2 * delta_prime * delta_t))


@dataclass(frozen=True)
class DetectionResult:
    p1: float
    p1_analytic: float
    alpha_tilde_prime: complex
    t_prime: float
    ratio: float
    warnings: tuple = ()


def detection_run(
    params: ModelParams,
    alpha: complex,
    delta_prime: float,
    delta_t: float,
    atom_cutoff: int | None = None,
    switching: str = "adiabatic",
    undo: str = "forward",
    threshold: float = DISPERSIVE_THRESHOLD,
    leakage_tol: float | None = LEAKAGE_TOL,
) -> DetectionResult:
    """Full detection pipeline with its bookkeeping.

    Steps: entangled cat with ``phi = pi/2`` (before any photon rotation),
    free evolution ``Delta' b^dag b`` for ``delta_t``, JC for
    ``t' = pi Delta / 2 g^2 N``, photon rotation, probability of ``|1>``.
    ``undo="inverse"`` replaces the second JC step with the exact inverse of
    the first.
    """
    if delta_t < 0:
        raise DomainError("delta_t must be nonnegative")
    cutoff = hb.default_cutoff(alpha) if atom_cutoff is None else atom_cutoff
    ratio, notes = _dispersive_warnings(params, alpha, threshold)
    t_cat = params.t_cat()
    H = jc_hamiltonian(params, cutoff)
    psi = hb.tensor(photon_plus(), hb.coherent_state(alpha, cutoff))
    psi = jc_step(params, psi, t_cat, switching, leakage_tol, H)
    psi = propagate(free_hamiltonian(delta_prime, cutoff), psi, delta_t, leakage_tol)
    if undo == "forward":
        t_prime = t_cat
    elif undo == "inverse":
        t_prime = -t_cat
    else:
        raise DomainError(f"undo must be 'forward' or 'inverse', got {undo!r}")
    psi = jc_step(params, psi, t_prime, switching, leakage_tol, H)
    psi = u_pi2(psi)
    p1 = outcome_probabilities(psi)[1]
    alpha_tilde = alpha * np.exp(-1j * params.delta * t_cat)
    alpha_tilde_prime = complex(alpha_tilde * np.exp(-1j * delta_prime * delta_t) * np.exp(-1j * params.delta * t_prime))
    return DetectionResult(
        p1=p1,
        p1_analytic=analytic_p1(alpha_tilde_prime, delta_prime, delta_t),
        alpha_tilde_prime=alpha_tilde_prime,
        t_prime=t_prime,
        ratio=ratio,
        warnings=tuple(notes),
    )


def detection_protocol(
    params: ModelParams, alpha: complex, delta_prime: float, delta_t: float, **kwargs
) -> float:
    """Simulated probability of the single-photon outcome after the detection sequence."""
    return detection_run(params, alpha, delta_prime, delta_t, **kwargs).p1


def compass_superposition(alpha_star: complex, coefficients, cutoff: int | None = None) -> hb.StateVector:
    """Normalized ``sum_k c_k |alpha* e^{i theta_k}>`` over ``theta = pi/4, -pi/4, 3pi/4, -3pi/4``."""
    cutoff = hb.default_cutoff(alpha_star) if cutoff is None else cutoff
    amps = sum(
        c * hb.coherent_amplitudes(alpha_star * np.exp(1j * th), cutoff)
        for c, th in zip(coefficients, COMPASS_PHASES)
    )
    nrm = float(np.linalg.norm(amps))
    if nrm**2 <= MIN_PROBABILITY:
        raise DegenerateBranchError("compass components cancel")
    return hb.StateVector(hb.Basis((hb.FockMode(cutoff),)), amps / nrm)


def compass_coefficients(seed_branch: int, outcome: int) -> tuple:
    """Component signs produced by the compass pipeline.

    Ordering follows :data:`COMPASS_PHASES`. Outcome 0 reproduces the
    four-component states ``|pi/4> ∓ |-pi/4> + |3pi/4> ∓ |-3pi/4>`` (upper sign
    for seed branch 1); outcome 1 yields the companion pattern
    ``|pi/4> ± |-pi/4> - |3pi/4> ∓ |-3pi/4>``.
    """
    if seed_branch not in (1, 2) or outcome not in (0, 1):
        raise DomainError("seed_branch must be 1|2 and outcome 0|1")
    s = -1.0 if seed_branch == 1 else 1.0
    return (1.0, s, 1.0, s) if outcome == 0 else (1.0, -s, -1.0, s)


def analytic_compass(alpha_star: complex, branch: int, cutoff: int | None = None) -> hb.StateVector:
    """``|a e^{i pi/4}> ∓ |a e^{-i pi/4}> + |a e^{3i pi/4}> ∓ |a e^{-3i pi/4}>``, exactly normalized."""
    if branch not in (1, 2):
        raise DomainError(f"branch must be 1 or 2, got {branch}")
    return compass_superposition(alpha_star, compass_coefficients(branch, 0), cutoff)


@dataclass
class CompassResult:
    """Photon outcomes 0 and 1 after the compass sequence."""

    outcomes: dict
    probabilities: tuple
    alpha_star: complex
    seed_branch: int
    t_double_prime: float
    ratio: float
    warnings: list = field(default_factory=list)

    def state(self, outcome: int) -> hb.StateVector:
        out = self.outcomes[outcome]
        if out is None:
            raise PostSelectionError(f"photon outcome {outcome} has probability {self.probabilities[outcome]:.3g}")
        return out.collapsed

    def expected(self, outcome: int) -> hb.StateVector:
        cutoff = self.state(outcome).basis.factors[0].size
        return compass_superposition(self.alpha_star, compass_coefficients(self.seed_branch, outcome), cutoff)


def compass_protocol(
    params: ModelParams,
    alpha: complex,
    seed_branch: int = 1,
    atom_cutoff: int | None = None,
    switching: str = "adiabatic",
    threshold: float = DISPERSIVE_THRESHOLD,
    leakage_tol: float | None = LEAKAGE_TOL,
) -> CompassResult:
    """Cat with ``phi = pi/2`` → fresh ``(|0>+|1>)/√2`` photon → JC for ``t'' = pi Delta / 4 g^2 N`` → rotate → measure."""
    cat = cat_protocol(params, alpha, None, atom_cutoff, switching, threshold, leakage_tol)
    seed = cat.branch(seed_branch)
    t2 = params.duration_for_phase(math.pi / 4)
    psi = hb.tensor(photon_plus(), seed)
    psi = jc_step(params, psi, t2, switching, leakage_tol)
    psi = u_pi2(psi)
    probs = outcome_probabilities(psi)
    outcomes = {}
    for k in (0, 1):
        try:
            outcomes[k] = measure_photon(psi, k)
        except PostSelectionError:
            outcomes[k] = None
    return CompassResult(
        outcomes=outcomes,
        probabilities=(probs[0], probs[1]),
        alpha_star=complex(cat.alpha_tilde * np.exp(-1j * params.delta * t2)),
        seed_branch=seed_branch,
        t_double_prime=t2,
        ratio=cat.ratio,
        warnings=list(cat.warnings),
    )


def compass_pair(params: ModelParams, alpha: complex, **kwargs) -> tuple:
    """The two four-component states, one per seed branch, post-selected on photon ``|0>``."""
    return tuple(compass_protocol(params, alpha, seed_branch=b, **kwargs).state(0) for b in (1, 2))
