"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Lines are also collected into an "acceptance criteria" section of the pytest
terminal summary.
"""
import math
import time

import numpy as np
import pytest

from cavitycat import analysis as an
from cavitycat import hilbert as hb
from cavitycat import protocols as pr
from cavitycat.evolution import propagate, propagate_adiabatic
from cavitycat.hamiltonians import (
    detuning_for_ratio,
    dispersive_eigen,
    exact_doublet,
    full_excitation_op,
    full_hamiltonian,
    jc_excitation_op,
    jc_hamiltonian,
    params_from_effective,
)

from conftest import G_EFF, N_ATOMS, params_at_ratio

TWO_PI = 2 * math.pi


def _cat_fidelities(ratio, alpha=2.0):
    res = pr.cat_protocol(params_at_ratio(ratio, alpha), alpha)
    cutoff = res.branch(1).basis.factors[0].size
    return res, [an.fidelity(pr.analytic_cat(res.alpha_tilde, res.phi, k, cutoff), res.branch(k)) for k in (1, 2)]


def test_criterion_1_cat_fidelity(record_criterion):
    _, at_005 = _cat_fidelities(0.005)
    ladder = [min(_cat_fidelities(r)[1]) for r in (0.04, 0.01, 0.0025)]
    ok_level = min(at_005) >= 0.99
    ok_mono = ladder[0] < ladder[1] < ladder[2]
    record_criterion(
        1,
        ok_level and ok_mono,
        f"F(ratio 0.005) = {at_005[0]:.5f}, {at_005[1]:.5f} (>= 0.99); "
        f"F at 0.04/0.01/0.0025 = {ladder[0]:.5f}/{ladder[1]:.5f}/{ladder[2]:.5f} (increasing)",
    )
    assert ok_level and ok_mono


def test_criterion_2_branch_statistics(record_criterion):
    worst = 0.0
    for r in (0.005, 0.0025):
        for alpha in (1.0, 2.0, 3.0):
            res = pr.cat_protocol(params_at_ratio(r, alpha), alpha)
            worst = max(worst, np.max(np.abs(np.subtract(res.probabilities, res.expected_probabilities))))
    n1 = pr.cat_norm_sq(2.0, math.pi / 2, 1)
    ok = worst <= 0.01 and abs(n1 - (2 - 2 * math.exp(-8))) <= 1e-9
    record_criterion(2, ok, f"max |p - N^2/4| = {worst:.2e} (<= 0.01); N1^2(2, pi/2) = {n1:.9f}")
    assert ok


def _detection_sweep(alpha, delta_prime, points=64):
    p = params_at_ratio(0.005, alpha)
    period = math.pi / (alpha**2 * delta_prime)
    dts = np.linspace(0.0, period, points)
    sim = np.array([pr.detection_protocol(p, alpha, delta_prime, dt) for dt in dts])
    ana = np.array([pr.analytic_p1(alpha, delta_prime, dt) for dt in dts])
    return dts, sim, ana


def _fit_frequency(dts, p1, w_max):
    """Least-squares angular frequency of ``(1 - cos w t)/2``, scanned over ``(0, w_max]``.

    A scan rather than a local fit so the result never defaults to a starting guess.
    """
    ws = np.linspace(w_max / 4000, w_max, 4000)
    model = 0.5 * (1 - np.cos(np.outer(ws, dts)))
    return float(ws[np.argmin(np.sum((model - p1) ** 2, axis=1))])


def test_criterion_3_detection_law(record_criterion):
    delta_prime = TWO_PI * 1.0e4
    dts2, sim2, ana2 = _detection_sweep(2.0, delta_prime)
    rms = float(np.sqrt(np.mean((sim2 - ana2) ** 2)))
    half = int(np.argmin(np.abs(2 * 4.0 * delta_prime * dts2 - math.pi)))
    dts1, sim1, _ = _detection_sweep(1.0, delta_prime)
    w_max = 3 * 2 * 4.0 * delta_prime
    w2 = _fit_frequency(dts2, sim2, w_max)
    w1 = _fit_frequency(dts1, sim1, w_max)
    freq_ratio = w2 / w1
    ok = rms <= 0.02 and abs(sim2[half] - 1.0) <= 0.02 and abs(freq_ratio - 4.0) <= 0.2
    record_criterion(
        3,
        ok,
        f"RMS vs closed form = {rms:.3f} (<= 0.02); P1 at half period = {sim2[half]:.4f} (1 +- 0.02); "
        f"fitted frequency ratio alpha 2:1 = {freq_ratio:.3f} (4 +- 5%); simulated P1 range "
        f"[{sim2.min():.2e}, {sim2.max():.2e}]",
    )
    assert ok


def test_criterion_4_compass(record_criterion):
    alpha = 2.5
    res = pr.compass_protocol(params_at_ratio(0.005, alpha), alpha)
    psi = res.state(0)
    fid = an.fidelity(pr.analytic_compass(res.alpha_star, 1, psi.basis.factors[0].size), psi)
    peaks = an.local_maxima(an.husimi(psi), 0.5)
    targets = [res.alpha_star * np.exp(1j * th) for th in pr.COMPASS_PHASES]
    offsets = [min(abs(b - t) for b, _ in peaks) / abs(res.alpha_star) for t in targets]
    ok = fid >= 0.98 and len(peaks) == 4 and max(offsets) <= 0.05
    record_criterion(
        4, ok, f"fidelity = {fid:.5f} (>= 0.98); Husimi peaks = {len(peaks)} (4); max offset = {max(offsets):.3%} (<= 5%)"
    )
    assert ok


def test_criterion_5_dispersive_scaling(record_criterion):
    n, ratios, errs = 4, (0.04, 0.01, 0.0025), []
    for r in ratios:
        p = params_from_effective(detuning_for_ratio(G_EFF, n, r), G_EFF / math.sqrt(N_ATOMS), N_ATOMS)
        exact = np.array(exact_doublet(p, n))
        approx = dispersive_eigen(p, n)
        # error in units of the detuning, the natural energy scale of the doublet
        errs.append(np.max(np.abs(exact - [approx.e_plus, approx.e_minus])) / abs(p.delta))
    slope = an.loglog_slope(ratios, errs)
    ok = abs(slope - 2.0) <= 0.2
    record_criterion(5, ok, f"log-log slope of |E_exact - E_approx|/Delta vs ratio = {slope:.4f} (2 +- 0.2)")
    assert ok


def test_criterion_6_hp_convergence(record_criterion):
    eta, Ns = 2.0, [50, 100, 200, 400]
    p = params_at_ratio(0.005, eta)
    rows = an.hp_convergence(Ns, eta, p, p.t_cat())
    fid = [r.fidelity for r in rows]
    slope = an.loglog_slope([r.excitation_fraction for r in rows], [r.infidelity for r in rows])
    start = time.perf_counter()
    an.hp_convergence(Ns, eta, p, p.t_cat(), photon_cutoff=4, leakage_tol=None)
    runtime = time.perf_counter() - start
    mono = all(a < b for a, b in zip(fid, fid[1:]))
    ok = mono and abs(slope - 1.0) <= 0.3 and runtime <= 300
    record_criterion(
        6,
        ok,
        "fidelity " + "/".join(f"{f:.4f}" for f in fid) + f" (increasing: {mono}); "
        f"slope of 1-F vs |eta|^2/N = {slope:.3f} (1 +- 0.3); runtime at photon cutoff 4 = {runtime:.2f} s (<= 300)",
    )
    assert ok


def test_criterion_7_numerical_hygiene(record_criterion):
    worst_norm = worst_exc = worst_comp = worst_rev = 0.0
    p = params_at_ratio(0.005, 2.0)
    cutoff = hb.default_cutoff(2.0)
    H = jc_hamiltonian(p, cutoff)
    X = jc_excitation_op(cutoff)
    psi = hb.tensor(pr.photon_plus(), hb.coherent_state(2.0, cutoff))
    t = p.t_cat()
    for s in (0.1, 0.5, 1.0, 3.0):
        for step in (propagate, propagate_adiabatic):
            out = step(H, psi, s * t)
            worst_norm = max(worst_norm, abs(out.norm() - 1))
            worst_exc = max(worst_exc, abs(out.expect(X).real - psi.expect(X).real) / psi.expect(X).real)
        a = propagate(H, psi, s * t + 0.3 * t)
        b = propagate(H, propagate(H, psi, s * t), 0.3 * t)
        worst_comp = max(worst_comp, np.max(np.abs(a.amplitudes - b.amplitudes)))
        back = propagate(H, propagate(H, psi, s * t), -s * t)
        worst_rev = max(worst_rev, np.max(np.abs(back.amplitudes - psi.amplitudes)))
    pf = params_from_effective(p.delta, p.g_eff / math.sqrt(100), 100)
    spin = hb.tensor(hb.StateVector(hb.Basis((hb.FockMode(4),)), [1, 1, 0, 0, 0]).normalized(), hb.atomic_coherent_state(100, 2.0))
    Xf = full_excitation_op(4, 100)
    outf = propagate(full_hamiltonian(pf, 4), spin, t, leakage_tol=None)
    worst_norm = max(worst_norm, abs(outf.norm() - 1))
    worst_exc = max(worst_exc, abs(outf.expect(Xf).real - spin.expect(Xf).real) / abs(spin.expect(Xf).real))

    cat = pr.analytic_cat(2.0, math.pi / 2, 2)
    w_cat = an.wigner(cat)
    w_vac = an.wigner(hb.fock_state(0, 10))
    w_comp = an.wigner(pr.analytic_compass(2.5, 1))
    norm_err = max(abs(g.integral() - 1) for g in (w_cat, w_vac, w_comp))
    ok = (
        worst_norm <= 1e-10
        and worst_exc <= 1e-9
        and worst_comp <= 1e-10
        and worst_rev <= 1e-10
        and norm_err <= 1e-3
        and w_cat.values.min() <= -0.05
    )
    record_criterion(
        7,
        ok,
        f"norm {worst_norm:.1e}, excitation {worst_exc:.1e}, composition {worst_comp:.1e}, "
        f"reversal {worst_rev:.1e}; Wigner normalization {norm_err:.1e}; cat Wigner min {w_cat.values.min():.4f}",
    )
    assert ok


def test_criterion_8_timing(record_criterion):
    g = TWO_PI * 1.0e3
    p = params_at_ratio(0.005, 2.0, N=10_000, g_eff=g * 100)
    t_star = pr.cat_protocol(p, 2.0).t_star
    lifetimes = [an.cat_lifetime(1.0, math.sqrt(n)).t for n in (50, 100, 200, 400)]
    ok_t = 10 ** -4.5 <= t_star <= 10 ** -3.5  # within half a decade of 100 us
    ok_life = all(1e-3 - 1e-15 <= x <= 1e-2 + 1e-15 for x in lifetimes)
    record_criterion(
        8,
        ok_t and ok_life,
        f"g sqrt(N) = {p.g_eff / TWO_PI / 1e3:.0f} kHz, t* = {t_star * 1e6:.1f} us (order 100 us); "
        f"lifetimes for |alpha~|^2 = 50..400: " + ", ".join(f"{x * 1e3:.2f}" for x in lifetimes) + " ms (1-10 ms)",
    )
    assert ok_t and ok_life
