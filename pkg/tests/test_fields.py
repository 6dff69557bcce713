import math

import numpy as np
import pytest

from oscfluct import chain, fields, gibbs, potential as pot
from oscfluct.chain import ChainState, ScalingParams, Trajectory
from oscfluct.errors import WindowOverflowError
from oscfluct.fields import (
    Centering,
    FieldKind,
    bg2_bound,
    bg2_diagnostic,
    bg2_integral,
    compact_bump,
    discrete_derivatives,
    fluctuation_field,
    gaussian_bump,
    hermite_gaussian,
    local_average,
    martingale_qv,
    regime_parameters,
)


def test_discrete_derivatives_linear_and_quadratic():
    ident = fields.TestFunction(lambda x, o: x if o == 0 else
                                (np.ones_like(x) if o == 1 else np.zeros_like(x)),
                                support_radius=10, center=0.0)
    g1, g2, lap = discrete_derivatives(ident, 7, 3)
    assert (g1, g2, lap) == pytest.approx((1.0, 1.0, 0.0), abs=1e-12)
    sq = fields.TestFunction(lambda x, o: {0: x * x, 1: 2 * x, 2: 2 * np.ones_like(x),
                                           3: np.zeros_like(x)}[o],
                             support_radius=10, center=0.0)
    g1, g2, lap = discrete_derivatives(sq, 10, 0)
    assert (g1, g2, lap) == pytest.approx((0.1, 0.0, 2.0), abs=1e-10)


def test_discrete_derivative_convergence_rates():
    # |grad1 - phi'| = O(1/n), |grad2 - phi'| = O(1/n^2)
    phi = gaussian_bump(0.07, center=0.0)
    x0 = 0.03
    errs1, errs2 = [], []
    ns = [2**k for k in range(6, 13)]
    for n in ns:
        j = int(round(x0 * n))
        g1, g2, _ = discrete_derivatives(phi, n, j)
        d = float(phi(np.array([j / n]), order=1)[0])
        errs1.append(abs(g1 - d))
        errs2.append(abs(g2 - d))
    r1 = np.polyfit(np.log(ns), np.log(errs1), 1)[0]
    r2 = np.polyfit(np.log(ns), np.log(errs2), 1)[0]
    assert r1 == pytest.approx(-1.0, abs=0.2)
    assert r2 == pytest.approx(-2.0, abs=0.3)


def test_test_function_derivatives_consistency():
    for phi in (gaussian_bump(0.1), compact_bump(0.3), hermite_gaussian(2, 0.08)):
        xs = np.linspace(-0.2, 0.2, 41)
        for order in (1, 2, 3):
            h = 1e-4
            fd = (phi.eval(xs + h, order - 1) - phi.eval(xs - h, order - 1)) / (2 * h)
            got = phi.eval(xs, order)
            np.testing.assert_allclose(got, fd, rtol=1e-5, atol=1e-4 * np.max(np.abs(got)) + 1e-12)


def test_field_vanishes_at_exact_centering():
    n = 64
    p = ScalingParams(a=1.0, beta_exp=0.5, lam=0.0)
    cent = Centering(eta=0.7, zeta=0.0, xi=0.0)
    st = ChainState(np.full(n, 0.7))
    phi = gaussian_bump(0.08)
    fs = fluctuation_field(st, pot.harmonic(), p, phi, FieldKind.VOLUME, t=0.0,
                           centering=cent)
    assert fs.value == 0.0


def test_field_combined_linearity():
    rng = np.random.default_rng(0)
    n = 128
    st = ChainState(rng.normal(size=n))
    p = ScalingParams(a=1.0, beta_exp=0.5, lam=2.0)
    spec = pot.toda()
    cent = Centering.from_measure(p.gibbs(n), spec)
    phi = gaussian_bump(0.06)
    u = -1.0 / p.lam
    comb = fluctuation_field(st, spec, p, phi, FieldKind.COMBINED, 0.0,
                             u_n=u, centering=cent)
    vol = fluctuation_field(st, spec, p, phi, FieldKind.VOLUME, 0.0, centering=cent)
    en = fluctuation_field(st, spec, p, phi, FieldKind.ENERGY, 0.0, centering=cent)
    # eta + u zeta = -(1/lam)(zeta - lam eta)
    assert comb.value == pytest.approx(-(1 / p.lam) * (en.value - p.lam * vol.value),
                                       rel=1e-12)
    assert comb.value == pytest.approx(vol.value + u * en.value, rel=1e-12)


def test_field_variance_white_noise_limit():
    # lam=0, harmonic: Var V^n_0(phi) -> ||phi||_L2^2, within 5%
    # 500 members puts the 5% tolerance below one MC sigma; 4000 makes it 2.3
    rng = np.random.default_rng(42)
    n, members = 512, 4000
    p = ScalingParams(a=1.0, beta_exp=0.5, lam=0.0)
    cent = Centering(eta=0.0, zeta=0.5, xi=0.0)
    phi = gaussian_bump(0.05)
    vals = []
    for _ in range(members):
        st = ChainState(rng.normal(size=n))
        vals.append(fluctuation_field(st, pot.harmonic(), p, phi,
                                      FieldKind.VOLUME, 0.0, centering=cent).value)
    target = phi.l2_norm_sq()
    assert np.var(vals) == pytest.approx(target, rel=0.05)


def test_field_lattice_aligned_shift_is_permutation():
    rng = np.random.default_rng(1)
    n = 64
    eta = rng.normal(size=n)
    p = ScalingParams(a=1.0, beta_exp=0.5)
    cent = Centering(0.0, 0.5, 0.0)
    phi = gaussian_bump(0.06)
    spec = pot.harmonic()
    # shift by 5 whole sites: field of shifted state = field with shifted phi
    f1 = fluctuation_field(ChainState(np.roll(eta, 5)), spec, p, phi,
                           FieldKind.VOLUME, 1.0, frame_velocity=5.0, centering=cent)
    f0 = fluctuation_field(ChainState(eta), spec, p, phi, FieldKind.VOLUME, 0.0,
                           centering=cent)
    assert f1.value == f0.value  # bit-level for lattice-aligned shifts


def test_window_guard():
    n = 64
    p = ScalingParams(a=1.0)
    st = ChainState(np.zeros(n))
    with pytest.raises(WindowOverflowError):
        fluctuation_field(st, pot.harmonic(), p, gaussian_bump(0.05),
                          FieldKind.VOLUME, t=1.0, frame_velocity=20.0,
                          centering=Centering(0.0, 0.0, 0.0))


def test_regime_parameters():
    p0 = ScalingParams(a=2.0, kappa=0.6, gamma=1.0, beta_exp=0.5, lam=0.0)
    n = 256
    u, v = regime_parameters("I", n, p0, c3=0.0)
    assert u == 0.0
    assert v == pytest.approx(2 * p0.drift_prefactor(n))
    p2 = ScalingParams(a=2.0, kappa=0.6, gamma=1.0, beta_exp=0.5, lam=2.0)
    u2, v2 = regime_parameters("II", n, p2, c3=-1.0)
    assert (u2, v2) == (-0.5, 0.0)
    with pytest.raises(ValueError):
        regime_parameters("II", n, p0, c3=1.0)
    # both solve the cancellation system u(2+2 lam u) = c3 beta (2+2 lam u)
    for case in ("I", "II"):
        lamp = ScalingParams(a=2.0, kappa=0.6, gamma=1.0, beta_exp=0.5, lam=0.7)
        u, v = regime_parameters(case, n, lamp, c3=-1.0)
        c3b = -1.0 * lamp.beta(n)
        assert u * (2 + 2 * lamp.lam * u) == pytest.approx(
            c3b * (2 + 2 * lamp.lam * u), abs=1e-12
        )


def test_local_average():
    g = np.array([1.0, 2.0, 3.0, 4.0])
    assert local_average(g, 0, 1) == 1.0
    assert local_average(np.full(7, 2.5), 3, 4) == 2.5
    assert local_average(g, 0, 2) == 1.5
    assert local_average(g, 0, 2, side="left") == pytest.approx((4 + 3) / 2)
    # periodic wrap
    assert local_average(g, 3, 2) == pytest.approx((4 + 1) / 2)
    with pytest.raises(ValueError):
        local_average(g, 0, 9)


def test_right_averages_match_local_average():
    rng = np.random.default_rng(3)
    g = rng.normal(size=37)
    for ell in (1, 2, 5, 17):
        ra = fields.right_averages(g, ell)
        for j in (0, 5, 30, 36):
            assert ra[j] == pytest.approx(local_average(g, j, ell), rel=1e-12)


def test_qv_zero_function_and_positivity_additivity():
    rng = np.random.default_rng(9)
    n = 32
    p = ScalingParams(a=2.0, kappa=0.0, gamma=0.0, beta_exp=0.5)
    times = np.linspace(0, 0.02, 21)
    traj = chain.simulate(ChainState(rng.normal(size=n)), pot.harmonic(), p,
                          T=0.02, ode_tol=1e-8, rng=rng, snapshot_times=times)
    zero = fields.TestFunction(lambda x, o: np.zeros_like(x), 0.1)
    phi = gaussian_bump(0.08)
    assert martingale_qv(traj, pot.harmonic(), p, zero, zero) == 0.0
    qv = martingale_qv(traj, pot.harmonic(), p, phi, phi)
    assert qv >= 0.0
    # additivity over disjoint intervals
    half1 = Trajectory(times[:11], traj.snapshots[:11])
    half2 = Trajectory(times[10:], traj.snapshots[10:])
    q1 = martingale_qv(half1, pot.harmonic(), p, phi, phi)
    q2 = martingale_qv(half2, pot.harmonic(), p, phi, phi)
    assert q1 + q2 == pytest.approx(qv, rel=1e-12)


def test_bg2_constant_configuration_vanishes():
    n = 64
    p = ScalingParams(a=2.0, kappa=0.0, gamma=0.0, beta_exp=0.5, lam=0.0)
    cent = Centering(eta=0.7, zeta=0.0, xi=0.7)  # xi = eta for harmonic
    times = np.array([0.0, 1e-4])
    traj = Trajectory(times, np.tile(np.full(n, 0.7), (2, 1)))
    val = bg2_integral(traj, pot.harmonic(), p, gaussian_bump(0.06), ell=4,
                       centering=cent)
    assert val == pytest.approx(0.0, abs=1e-15)


def test_bg2_engine_matches_trajectory_quadrature():
    """The O(1)-per-event compiled accumulator and the snapshot quadrature
    estimate the same integral (statistically, independent streams)."""
    from oscfluct._engines import exchange_only_bg2

    n, T, ell = 64, 0.2, 4
    p = ScalingParams(a=1.0, kappa=0.0, gamma=0.0, beta_exp=0.5, lam=0.0)
    phi = gaussian_bump(0.07)
    g = fields.grad1_ring(phi.on_ring(n), n)
    rate = p.exchange_rate(n)
    rng = np.random.default_rng(17)
    cent = Centering(0.0, 0.5, 0.0)
    a_vals, b_vals = [], []
    for _ in range(300):
        eta0 = rng.normal(size=n)
        seed = rng.integers(0, 2**64, dtype=np.uint64)
        a_vals.append(exchange_only_bg2(eta0.copy(), g, ell, rate, T, seed))
        times = np.linspace(0, T, 161)
        traj = chain.simulate(ChainState(eta0), pot.harmonic(), p, T=T,
                              ode_tol=1e-8, rng=rng, snapshot_times=times)
        b_vals.append(bg2_integral(traj, pot.harmonic(), p, phi, ell,
                                   centering=cent))
    da, db = bg2_diagnostic(a_vals), bg2_diagnostic(b_vals)
    se = math.sqrt(np.var(np.square(a_vals)) / len(a_vals)
                   + np.var(np.square(b_vals)) / len(b_vals))
    assert abs(da - db) < 4 * se + 0.05 * max(da, db)


def test_bg2_bound_shape():
    phi = gaussian_bump(0.05)
    b1 = bg2_bound(0.5, 256, 8, phi)
    b2 = bg2_bound(0.5, 256, 64, phi)
    norm = phi.l2_norm_sq(1)
    assert b1 == pytest.approx((0.5 * 8 / 256 + 0.25 * 256 / 64) * norm)
    assert b2 < b1
