import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambdakerr.blocks import (
    BlockPotentials,
    BlockSolution,
    CubicRoots,
    DegenerateRootsError,
    FockBlock,
    _spectral_roots_and_upsilon,
    amplitudes_at,
    block_matrix,
    block_potentials,
    cubic_coefficients,
    initial_residuals,
    solve_block,
    solve_cubic,
    upsilon,
    with_upsilon,
)
from lambdakerr.model import EffectiveModel

RNG = np.random.default_rng(7)


def random_model(rng=RNG, gamma_range=(0.0, 2.5)):
    return EffectiveModel(
        mu=rng.uniform(0.8, 1.6),
        gamma=rng.uniform(*gamma_range),
        delta2=rng.uniform(-15, 15),
        delta3=rng.uniform(-15, 15),
        chi=rng.choice([0.0, rng.uniform(0, 0.5)]),
    )


def rhs(sol, t, y):
    """Right-hand side of the block equations ``i y' = M(t) y``."""
    p = sol.potentials
    a, b, c = y
    return (
        -1j * (p.v1 * a + p.f1 * np.exp(-1j * sol.delta2 * t) * b + p.f2 * np.exp(-1j * sol.delta3 * t) * c),
        -1j * (p.v2 * b + p.f1 * np.exp(1j * sol.delta2 * t) * a),
        -1j * (p.v2 * c + p.f2 * np.exp(1j * sol.delta3 * t) * a),
    )


# --- potentials and cubic coefficients ---------------------------------------------------------


def test_potentials_vanish_without_kerr():
    p = block_potentials(EffectiveModel(chi=0.0), FockBlock(5, 7))
    assert p.v1 == 0.0 and p.v2 == 0.0


def test_potentials_with_kerr():
    p = block_potentials(EffectiveModel(chi=0.4), FockBlock(1, 2))
    assert p.v1 == pytest.approx(2.4, abs=1e-14)
    assert p.v2 == pytest.approx(4.8, abs=1e-14)


def test_couplings():
    p = block_potentials(EffectiveModel(mu=1.0, gamma=2.0), FockBlock(0, 2))
    assert p.f1 == pytest.approx(math.sqrt(3), abs=1e-15)
    assert p.f2 == pytest.approx(2 * math.sqrt(3), abs=1e-15)


def test_coefficients_without_nonlinear_terms():
    p = BlockPotentials(0.0, 0.0, 1.5, 2.0)
    assert cubic_coefficients(p, 0.0, 0.0) == (0.0, -(1.5**2 + 2.0**2), 0.0)


def test_coefficients_equal_detunings_kill_constant_term():
    p = BlockPotentials(0.0, 0.0, 1.1, 0.7)
    assert cubic_coefficients(p, 3.3, 3.3)[2] == 0.0


@pytest.mark.parametrize("eff", [
    EffectiveModel(mu=1.0, gamma=2.0, delta2=7.0, delta3=15.0, chi=0.4),
    EffectiveModel(mu=1.3, gamma=0.5, delta2=-2.0, delta3=4.0, chi=0.1),
])
def test_coefficients_match_characteristic_polynomial(eff):
    p = block_potentials(eff, FockBlock(1, 2))
    x = cubic_coefficients(p, eff.delta2, eff.delta3)
    # the roots are minus the eigenvalues of the constant-frame block matrix
    poly = np.poly(-block_matrix(p, eff.delta2, eff.delta3))
    np.testing.assert_allclose(poly, [1.0, *x], rtol=1e-12, atol=1e-10)


# --- cubic solver ------------------------------------------------------------------------------


def test_symmetric_cubic_roots():
    om = math.sqrt(1.5**2 + 2.0**2)
    r = solve_cubic(0.0, -om * om, 0.0).theta_m
    np.testing.assert_allclose(sorted(r), [-om, 0.0, om], atol=1e-12)


def test_triple_root_is_degenerate():
    with pytest.raises(DegenerateRootsError):
        solve_cubic(-3.0, 3.0, -1.0)


def test_complex_roots_rejected():
    with pytest.raises(ArithmeticError):
        solve_cubic(0.0, 1.0, 0.0)


def test_roots_match_companion_eigenvalues():
    for _ in range(100):
        eff = random_model()
        p = block_potentials(eff, FockBlock(int(RNG.integers(0, 20)), int(RNG.integers(0, 20))))
        x = cubic_coefficients(p, eff.delta2, eff.delta3)
        r = np.sort(solve_cubic(*x).theta_m)
        companion = np.array([[-x[0], -x[1], -x[2]], [1, 0, 0], [0, 1, 0]])
        oracle = np.sort(np.linalg.eigvals(companion).real)
        scale = max(1.0, np.max(np.abs(r)))
        assert np.max(np.abs(r - oracle)) <= 1e-9 * scale
        assert abs(x[0] + r.sum()) <= 1e-9 * scale
        assert abs(x[1] - (r[0] * r[1] + r[1] * r[2] + r[2] * r[0])) <= 1e-9 * scale**2
        assert abs(x[2] + r.prod()) <= 1e-9 * scale**3


def test_solve_block_roots_match_eigenvalues_absolutely():
    # the shifted cubic keeps absolute accuracy despite Kerr shifts in the hundreds
    eff = EffectiveModel(gamma=2.0, delta2=7.0, delta3=15.0, chi=0.4)
    blocks = FockBlock(np.arange(43).repeat(43), np.tile(np.arange(43), 43))
    sol = solve_block(eff, blocks)
    lam = np.linalg.eigvalsh(block_matrix(sol.potentials, eff.delta2, eff.delta3))
    np.testing.assert_allclose(np.sort(-sol.roots.theta_m, axis=-1), lam, atol=1e-9)


# --- weights and amplitudes --------------------------------------------------------------------


def test_resonant_upsilon_reconstructs_initial_state():
    eff = EffectiveModel(gamma=1.0)
    p = block_potentials(eff, FockBlock(0, 3))
    roots = solve_cubic(*cubic_coefficients(p, 0.0, 0.0))
    ups = upsilon(roots, p, 0.0)
    u = roots.theta_m + p.v2
    assert -np.sum(u * ups) == pytest.approx(1.0, abs=1e-12)
    assert p.f1 * np.sum(ups) == pytest.approx(0.0, abs=1e-12)
    sol = solve_block(eff, FockBlock(0, 3))
    a, b, c = amplitudes_at(sol, 0.0)
    assert (a, b, c) == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)


def test_unshifted_weights_agree_with_shifted_form():
    eff = EffectiveModel(mu=1.2, gamma=1.5, delta2=2.0, delta3=-3.0, chi=0.05)
    block = FockBlock(3, 4)
    sol = solve_block(eff, block)
    direct = upsilon(sol.roots, sol.potentials, eff.delta2)
    np.testing.assert_allclose(direct, sol.upsilon, rtol=1e-9, atol=1e-12)


def test_initial_conditions_random_blocks():
    eff = random_model()
    n = RNG.integers(0, 60, size=(2, 500))
    sol = solve_block(eff, FockBlock(n[0], n[1]))
    for r in initial_residuals(sol):
        assert np.max(np.abs(r)) <= 1e-10
    a, b, c = amplitudes_at(sol, 0.0)
    np.testing.assert_allclose(a, 1.0, atol=1e-10)
    np.testing.assert_allclose(b, 0.0, atol=1e-10)
    np.testing.assert_allclose(c, 0.0, atol=1e-10)


@pytest.mark.parametrize("gamma", [0.0, 1.0, 2.0])
def test_resonant_no_kerr_is_cosine(gamma):
    eff = EffectiveModel(mu=1.3, gamma=gamma)
    t = np.linspace(0, 40, 801)
    for n2 in range(11):
        sol = solve_block(eff, FockBlock(2, n2))
        a, _, _ = amplitudes_at(sol, t)
        om = 1.3 * math.sqrt((n2 + 1) * (1 + gamma**2))
        np.testing.assert_allclose(np.abs(a) ** 2, np.cos(om * t) ** 2, atol=1e-10)


def test_amplitudes_satisfy_block_equations():
    # central differences of the closed form against the right-hand side
    h = 1e-5
    for _ in range(20):
        eff = random_model()
        sol = solve_block(eff, FockBlock(int(RNG.integers(0, 15)), int(RNG.integers(0, 15))))
        t = RNG.uniform(0, 20)
        plus, minus, mid = amplitudes_at(sol, t + h), amplitudes_at(sol, t - h), amplitudes_at(sol, t)
        deriv = [(p - m) / (2 * h) for p, m in zip(plus, minus)]
        # truncation error of the difference quotient is about h**2 w**3 / 6
        w = float(np.max(np.abs(sol.roots.theta_m))) + abs(eff.delta2) + abs(eff.delta3) + 1.0
        for d, r in zip(deriv, rhs(sol, t, mid)):
            assert abs(d - r) <= h * h * w**3 + 1e-8


def test_gamma_zero_decouples_level_three():
    eff = EffectiveModel(gamma=0.0, delta2=1.5, delta3=4.0, chi=0.2)
    sol = solve_block(eff, FockBlock(2, 3))
    a, b, c = amplitudes_at(sol, np.linspace(0, 30, 301))
    assert np.max(np.abs(c)) == 0.0
    np.testing.assert_allclose(np.abs(a) ** 2 + np.abs(b) ** 2, 1.0, atol=1e-12)


def test_weak_level_three_coupling_stays_unitary():
    for gamma in [1e-3, 1e-6, 1e-9, 1e-12]:
        eff = EffectiveModel(gamma=gamma, delta2=0.3, delta3=-2.0, chi=0.1)
        sol = solve_block(eff, FockBlock(np.arange(20), np.arange(20)[::-1]))
        a, b, c = amplitudes_at(sol, np.linspace(0, 50, 101))
        np.testing.assert_allclose(np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(c) ** 2, 1.0, atol=1e-10)
        assert np.max(np.abs(c)) <= 10 * gamma * 1.0


def test_spectral_fallback_matches_cardano():
    eff = EffectiveModel(mu=1.1, gamma=1.7, delta2=-1.0, delta3=2.5, chi=0.3)
    block = FockBlock(np.arange(10), np.arange(10))
    sol = solve_block(eff, block)
    u, ups = _spectral_roots_and_upsilon(sol.potentials, eff.delta2, eff.delta3)
    v2 = np.asarray(sol.potentials.v2)[..., None]
    alt = BlockSolution(block, sol.potentials, CubicRoots(u - v2, sol.roots.phi), ups, eff.delta2, eff.delta3, u)
    t = np.linspace(0, 25, 251)
    for x, y in zip(amplitudes_at(sol, t), amplitudes_at(alt, t)):
        np.testing.assert_allclose(x, y, atol=1e-11)


def test_degenerate_block_uses_fallback():
    # f1 = f2 = tiny with equal detuning offsets makes two roots coincide to round-off
    eff = EffectiveModel(mu=1e-9, gamma=1.0, delta2=0.0, delta3=0.0, chi=0.0)
    sol = solve_block(eff, FockBlock(0, 0))
    assert np.all(np.isfinite(sol.upsilon))
    a, b, c = amplitudes_at(sol, np.linspace(0, 10, 11))
    np.testing.assert_allclose(np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(c) ** 2, 1.0, atol=1e-12)


def test_upsilon_rejects_coincident_roots():
    p = BlockPotentials(0.0, 0.0, 1.0, 1.0)
    with pytest.raises(DegenerateRootsError):
        upsilon(CubicRoots(np.array([1.0, 1.0, -2.0]), 0.0), p, 0.0)


def test_corrupted_weights_break_initial_conditions():
    sol = solve_block(EffectiveModel(gamma=2.0), FockBlock(3, 4))
    bad = with_upsilon(sol, sol.upsilon + np.array([1e-3, 0.0, 0.0]))
    assert abs(initial_residuals(bad)[1]) >= 1e-3


def test_time_array_shape():
    sol = solve_block(EffectiveModel(), FockBlock(np.arange(4), np.arange(4)))
    a, b, c = amplitudes_at(sol, np.linspace(0, 1, 7))
    assert a.shape == b.shape == c.shape == (4, 7)


@settings(max_examples=60, deadline=None)
@given(
    n1=st.integers(0, 60),
    n2=st.integers(0, 60),
    t=st.floats(0, 200),
    mu=st.floats(0.5, 2.0),
    gamma=st.floats(0.0, 3.0),
    d2=st.floats(-20, 20),
    d3=st.floats(-20, 20),
    chi=st.floats(0.0, 0.6),
)
def test_block_unitarity_property(n1, n2, t, mu, gamma, d2, d3, chi):
    eff = EffectiveModel(mu=mu, gamma=gamma, delta2=d2, delta3=d3, chi=chi)
    a, b, c = amplitudes_at(solve_block(eff, FockBlock(n1, n2)), t)
    assert abs(abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2 - 1.0) <= 1e-10


def test_fock_block_rejects_negative():
    with pytest.raises(ValueError):
        FockBlock(-1, 0)


def test_solution_fills_shifted_roots():
    sol = solve_block(EffectiveModel(chi=0.4), FockBlock(2, 2))
    plain = replace(sol, shifted=None)
    np.testing.assert_allclose(plain.shifted, sol.shifted, atol=1e-12)
