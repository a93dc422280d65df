import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavitycat import analysis as an
from cavitycat import hilbert as hb
from cavitycat import protocols as pr
from cavitycat.errors import ContractViolation, DomainError, SingularityError

from conftest import params_at_ratio


def test_fidelity_basics():
    psi = hb.coherent_state(1 + 1j, 30)
    assert an.fidelity(psi, psi) == pytest.approx(1.0)
    assert an.fidelity(hb.fock_state(0, 3), hb.fock_state(1, 3)) == 0.0
    a = 1.5
    f = an.fidelity(hb.coherent_state(a), hb.coherent_state(-a))
    assert f == pytest.approx(math.exp(-4 * a**2), abs=1e-8)


@given(st.complex_numbers(max_magnitude=2, allow_nan=False), st.complex_numbers(max_magnitude=2, allow_nan=False), st.floats(0, 6.3))
@settings(max_examples=30, deadline=None)
def test_fidelity_symmetric_bounded_phase_blind(a, b, theta):
    x, y = hb.coherent_state(a, 35), hb.coherent_state(b, 35)
    f = an.fidelity(x, y)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(an.fidelity(y, x), abs=1e-14)
    rotated = hb.StateVector(x.basis, np.exp(1j * theta) * x.amplitudes)
    assert an.fidelity(x, rotated) == pytest.approx(1.0, abs=1e-10)


def test_lifetime_examples():
    est = an.cat_lifetime(1.0, 10.0)  # |alpha~|^2 = 100
    assert est.t == pytest.approx(5e-3)
    assert 1e-3 <= est.t <= 1e-2
    assert an.cat_lifetime(2.0, 20.0).t == pytest.approx(2.5e-3)
    assert an.cat_lifetime(1.0, 6.0).t == pytest.approx(an.cat_lifetime(1.0, 3.0).t / 4)


@given(st.floats(1.0, 30.0), st.floats(0, 6.3))
@settings(max_examples=20, deadline=None)
def test_lifetime_depends_on_modulus_only(r, theta):
    assert an.cat_lifetime(1.0, r * np.exp(1j * theta)).t == pytest.approx(an.cat_lifetime(1.0, r).t)


def test_lifetime_domain():
    with pytest.raises(SingularityError):
        an.cat_lifetime(1.0, 0.0)
    with pytest.raises(DomainError):
        an.cat_lifetime(1.0, 0.3)
    with pytest.warns(UserWarning):
        an.cat_lifetime(1.0, 0.75)


def test_wigner_vacuum():
    grid = an.wigner(hb.fock_state(0, 5))
    centre = grid.values[grid.p.size // 2, grid.x.size // 2]
    assert centre == pytest.approx(1 / math.pi, abs=1e-6)
    assert grid.integral() == pytest.approx(1.0, abs=1e-3)


def test_wigner_matches_closed_form_cat():
    # even cat |a> + |-a> with real a: closed-form Wigner in x + ip = sqrt(2) beta
    a = 2.0
    psi = pr.analytic_cat(a, math.pi / 2, 2, 40)  # phases +-pi/2 of alpha~=2 -> |2i> + |-2i>
    grid = an.wigner(psi, an.GridSpec(points=121))
    X, P = np.meshgrid(grid.x, grid.p)
    b0 = 2j * math.sqrt(2)  # component centre in quadrature units
    g_plus = np.exp(-((X - b0.real) ** 2) - (P - b0.imag) ** 2)
    g_minus = np.exp(-((X + b0.real) ** 2) - (P + b0.imag) ** 2)
    fringe = np.exp(-(X**2) - P**2) * np.cos(2 * (X * b0.imag - P * b0.real))
    norm = 2 * (1 + math.exp(-2 * a**2))
    W = (g_plus + g_minus + 2 * fringe) / (math.pi * norm)
    assert np.max(np.abs(grid.values - W)) < 1e-8
    assert grid.values.min() <= -0.05


@given(st.complex_numbers(max_magnitude=4, allow_nan=False))
@settings(max_examples=10, deadline=None)
def test_wigner_normalization(alpha):
    assert an.wigner(hb.coherent_state(alpha)).integral() == pytest.approx(1.0, abs=1e-3)


def test_husimi_coherent_peak():
    alpha = 1.5 - 0.5j
    grid = an.husimi(hb.coherent_state(alpha))
    (beta, value), = an.local_maxima(grid, 0.5)
    cell = grid.x[1] - grid.x[0]
    assert abs(beta.real - alpha.real) <= cell and abs(beta.imag - alpha.imag) <= cell
    assert grid.values.min() >= 0
    assert grid.values.max() <= 1 / math.pi + 1e-12


def test_husimi_compass_has_four_peaks():
    grid = an.husimi(pr.analytic_compass(3.0, 1))
    assert len(an.local_maxima(grid, 0.5)) == 4
    assert grid.values.min() >= 0


def test_phase_space_rejects_joint_states():
    psi = hb.tensor(pr.photon_plus(), hb.coherent_state(1, 20))
    with pytest.raises(ContractViolation):
        an.wigner(psi)
    with pytest.raises(ContractViolation):
        an.husimi(psi)


@pytest.fixture(scope="module")
def hp_params():
    return params_at_ratio(0.005, 2.0, N=100)


def test_hp_vacuum_is_exact(hp_params):
    rows = an.hp_convergence([20, 40], 0.0, hp_params, hp_params.t_cat())
    assert all(r.fidelity == pytest.approx(1.0, abs=1e-10) for r in rows)


def test_hp_improves_with_atom_number(hp_params):
    rows = an.hp_convergence([50, 100, 200], 2.0, hp_params, hp_params.t_cat())
    assert rows[0].fidelity < rows[1].fidelity < rows[2].fidelity
    assert [r.excitation_fraction for r in rows] == pytest.approx([4 / 50, 4 / 100, 4 / 200])


def test_hp_nonincreasing_in_excitation(hp_params):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f = [an.hp_convergence([100], eta, hp_params, hp_params.t_cat())[0].fidelity for eta in (0.5, 1.0, 2.0)]
    assert f[0] >= f[1] >= f[2]


def test_hp_rejects_dense_excitation(hp_params):
    with pytest.raises(DomainError):
        an.hp_convergence([6], 2.0, hp_params, 1.0)


def test_loglog_slope():
    x = np.array([1.0, 2.0, 4.0])
    assert an.loglog_slope(x, 3 * x**1.5) == pytest.approx(1.5)
