import math

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from cavitycat import hilbert as hb
from cavitycat import protocols as pr
from cavitycat.errors import BasisMismatchError, LeakageError, NonHermitianError, NotDispersiveError
from cavitycat.evolution import (
    Segment,
    dressed_energies,
    expm_krylov,
    leakage,
    propagate,
    propagate_adiabatic,
    propagate_schedule,
)
from cavitycat.hamiltonians import (
    exact_doublet,
    full_excitation_op,
    full_hamiltonian,
    jc_excitation_op,
    jc_hamiltonian,
    params_from_effective,
)

from conftest import params_at_ratio


def _jc_setup(alpha=2.0, delta=5.0, g=0.03, N=400):
    p = params_from_effective(delta, g, N)
    cutoff = hb.default_cutoff(alpha)
    psi = hb.tensor(pr.photon_plus(), hb.coherent_state(alpha, cutoff))
    return p, jc_hamiltonian(p, cutoff), psi


def test_zero_time_is_identity():
    _, H, psi = _jc_setup()
    assert propagate(H, psi, 0.0) is psi


def test_matches_dense_expm():
    _, H, psi = _jc_setup()
    ref = scipy.linalg.expm(-1j * 0.37 * H.dense()) @ psi.amplitudes
    assert np.allclose(propagate(H, psi, 0.37).amplitudes, ref, atol=1e-12)


def test_krylov_matches_eig():
    _, H, psi = _jc_setup()
    a = propagate(H, psi, 2.3, method="eig").amplitudes
    b = propagate(H, psi, 2.3, method="krylov").amplitudes
    assert np.allclose(a, b, atol=1e-10)


def test_expm_krylov_random_hermitian():
    rng = np.random.default_rng(7)
    A = rng.normal(size=(60, 60)) + 1j * rng.normal(size=(60, 60))
    A = (A + A.conj().T) / 2
    v = rng.normal(size=60) + 1j * rng.normal(size=60)
    for t in (0.1, -1.7, 5.0):
        ref = scipy.linalg.expm(-1j * t * A) @ v
        assert np.allclose(expm_krylov(A, v, t), ref, atol=1e-9 * np.linalg.norm(v))


def test_resonant_rabi_half_cycle():
    n, g_eff = 3, 0.4
    p = params_from_effective(0.0, g_eff / 10.0, 100)
    cutoff = 6
    H = jc_hamiltonian(p, cutoff)
    start = hb.tensor(hb.qubit_state(0, 1), hb.fock_state(n - 1, cutoff))
    target = hb.tensor(hb.qubit_state(1, 0), hb.fock_state(n, cutoff))
    out = propagate(H, start, math.pi / (2 * g_eff * math.sqrt(n)), leakage_tol=None)
    assert abs(hb.inner_product(target, out)) ** 2 == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-20, 20), st.floats(-20, 20))
@settings(max_examples=30, deadline=None)
def test_unitarity_composition_reversibility(s, t):
    _, H, psi = _jc_setup()
    a = propagate(H, psi, s + t)
    b = propagate(H, propagate(H, psi, s), t)
    assert a.norm() == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(a.amplitudes - b.amplitudes)) <= 1e-10
    back = propagate(H, propagate(H, psi, t), -t)
    assert abs(hb.inner_product(psi, back)) ** 2 >= 1 - 1e-12


@given(st.floats(0, 50))
@settings(max_examples=20, deadline=None)
def test_energy_and_excitation_conserved(t):
    _, H, psi = _jc_setup()
    X = jc_excitation_op(psi.basis.factors[1].size)
    out = propagate(H, psi, t)
    e0, e1 = psi.expect(H).real, out.expect(H).real
    n0, n1 = psi.expect(X).real, out.expect(X).real
    assert abs(e1 - e0) <= 1e-9 * max(1.0, abs(e0))
    assert abs(n1 - n0) <= 1e-9 * abs(n0)


def test_full_model_conserves_excitations():
    p = params_from_effective(3.0, 0.05, 60)
    psi = hb.tensor(hb.StateVector(hb.Basis((hb.FockMode(3),)), [1, 1, 0, 0]).normalized(), hb.atomic_coherent_state(60, 1.5))
    H = full_hamiltonian(p, 3)
    X = full_excitation_op(3, 60)
    out = propagate(H, psi, 11.0, leakage_tol=None)
    assert out.norm() == pytest.approx(1.0, abs=1e-10)
    assert out.expect(X).real == pytest.approx(psi.expect(X).real, rel=1e-9)


def test_leakage_monitor():
    p = params_from_effective(0.0, 0.5, 4)
    cutoff = 6
    H = jc_hamiltonian(p, cutoff)
    psi = hb.tensor(hb.qubit_state(0, 1), hb.fock_state(4, cutoff))
    with pytest.raises(LeakageError):
        propagate(H, psi, 1.0)
    out = propagate(H, psi, 1.0, leakage_tol=None)
    assert leakage(out) > 1e-8


def test_rejects_non_hermitian_and_basis_mismatch():
    _, H, psi = _jc_setup()
    bad = hb.Operator(H.basis, H.dense() + 0.1j * np.eye(H.dim))
    with pytest.raises(NonHermitianError):
        propagate(bad, psi, 1.0)
    with pytest.raises(BasisMismatchError):
        propagate(H, hb.tensor(pr.photon_plus(), hb.coherent_state(2, 40)), 1.0)


def test_adiabatic_phases_are_dressed_energies():
    p, H, psi = _jc_setup()
    E = dressed_energies(H)
    cutoff = psi.basis.factors[1].size
    for n in (1, 3, 7):
        e_plus, e_minus = exact_doublet(p, n)
        assert E[1 * (cutoff + 1) + n - 1] == pytest.approx(e_plus, abs=1e-10)
        assert E[n] == pytest.approx(e_minus, abs=1e-10)
    out = propagate_adiabatic(H, psi, 3.0)
    assert np.allclose(np.abs(out.amplitudes), np.abs(psi.amplitudes))


def test_adiabatic_refuses_resonance():
    p = params_from_effective(0.0, 0.1, 4)
    H = jc_hamiltonian(p, 4)
    with pytest.raises(NotDispersiveError):
        dressed_energies(H)


def test_empty_schedule():
    _, _, psi = _jc_setup()
    tr = propagate_schedule([], psi)
    assert tr.times == [0.0] and tr.final is psi


def test_schedule_semigroup_and_sampling():
    _, H, psi = _jc_setup()
    one = propagate_schedule([Segment(H, 4.0)], psi)
    two = propagate_schedule([Segment(H, 2.0), Segment(H, 2.0)], psi, samples_per_segment=5)
    assert np.max(np.abs(one.final.amplitudes - two.final.amplitudes)) <= 1e-10
    assert np.all(np.diff(two.times) > 0)
    assert len(two.states) == 11
    assert all(abs(s.norm() - 1) <= 1e-10 for s in two.states)


def test_segment_validation():
    _, H, _ = _jc_setup()
    with pytest.raises(ValueError):
        Segment(H, -1.0)
    with pytest.raises(NonHermitianError):
        Segment(hb.Operator(H.basis, H.matrix), 1.0)


def test_schedule_reproduces_cat_protocol():
    p = params_at_ratio(0.005)
    res = pr.cat_protocol(p, 2.0)
    cutoff = hb.default_cutoff(2.0)
    psi0 = hb.tensor(pr.photon_plus(), hb.coherent_state(2.0, cutoff))
    t = p.t_cat()
    tr = propagate_schedule([Segment(jc_hamiltonian(p, cutoff), t, adiabatic=True)], psi0)
    final = pr.u_pi2(pr.photon_phase(tr.final, p.phase(t)))
    assert np.max(np.abs(final.amplitudes - res.final_state.amplitudes)) <= 1e-9


def test_large_block_uses_krylov_path():
    n = 2500  # one connected block above the eigendecomposition limit
    rng = np.random.default_rng(3)
    off = rng.uniform(0.5, 1.0, n - 1)
    m = sp.diags([off, rng.uniform(-1, 1, n), off], [-1, 0, 1], format="csr")
    H = hb.Operator(hb.Basis((hb.CollectiveSpin(n - 1),)), m, hermitian=True)
    psi = hb.dicke_state(n - 1, n // 2)
    auto = propagate(H, psi, 3.0)
    exact = propagate(H, psi, 3.0, method="eig")
    assert np.max(np.abs(auto.amplitudes - exact.amplitudes)) <= 1e-10
    assert auto.norm() == pytest.approx(1.0, abs=1e-10)
