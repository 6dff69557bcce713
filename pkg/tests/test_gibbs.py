import math

import numpy as np
import pytest
from scipy import special

from oscfluct import gibbs, potential as pot
from oscfluct.errors import DivergenceError


def test_log_density_trivia():
    h = pot.harmonic()
    assert gibbs.log_density(gibbs.GibbsParams(0.5, 1.0, 0.0), h, 0.0) == 0.0
    # harmonic scaling identity: -V(1) + lam = -0.5 + 0.5
    p = gibbs.GibbsParams(beta=0.1, b=1.0, lam=0.5)
    assert gibbs.log_density(p, h, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_log_density_toda_formula_oracle():
    p = gibbs.GibbsParams(beta=0.2, b=1.0, lam=1.0)
    spec = pot.toda()
    x = 2.0
    direct = -(math.exp(-0.2 * x) - 1 + 0.2 * x) / 0.2**2 + 1.0 * x
    assert gibbs.log_density(p, spec, x) == pytest.approx(direct, rel=1e-12)


def test_partition_function_gaussian_limits():
    # beta -> 0: Z -> sqrt(2 pi) e^{lam^2/2}; the proof in the source states
    # the limit without the sqrt(2 pi) factor, quadrature decides
    for spec in (pot.toda(), pot.fpu_alpha(0.3)):
        p = gibbs.GibbsParams(beta=1e-4, b=1.0, lam=1.0)
        assert gibbs.partition_function(p, spec) == pytest.approx(
            math.sqrt(2 * math.pi) * math.exp(0.5), abs=1e-3
        )
        p0 = gibbs.GibbsParams(beta=1e-4, b=1.0, lam=0.0)
        assert gibbs.partition_function(p0, spec) == pytest.approx(
            math.sqrt(2 * math.pi), abs=1e-3
        )


def test_partition_function_divergence_toda():
    # Toda measure needs 1/beta > |lam|/b; here 1/beta = 0.5 < 1
    with pytest.raises(DivergenceError):
        gibbs.partition_function(gibbs.GibbsParams(beta=2.0, b=1.0, lam=1.0), pot.toda())


def test_xi_mean_identity():
    # E[V_beta'] = lam/b by integration by parts, to 1e-8
    for spec, beta, b, lam in [
        (pot.toda(), 0.3, 1.0, 0.7),
        (pot.fpu_alpha(0.2), 0.2, 2.0, -0.4),
        (pot.harmonic(), 0.5, 1.5, 1.2),
    ]:
        p = gibbs.GibbsParams(beta, b, lam)
        assert gibbs.mean_xi(p, spec) == pytest.approx(lam / b, abs=1e-8)


def test_exp_moment_trivial_and_gaussian():
    p = gibbs.GibbsParams(beta=0.2, b=1.0, lam=0.0)
    assert gibbs.exp_moment(p, pot.toda(), 0.0) == pytest.approx(1.0, abs=1e-9)
    # standard Gaussian: E e^{|x|} = e^{1/2}(1 + erf(1/sqrt 2))
    ph = gibbs.GibbsParams(beta=1e-3, b=1.0, lam=0.0)
    target = math.exp(0.5) * (1 + special.erf(1 / math.sqrt(2)))
    assert gibbs.exp_moment(ph, pot.harmonic(), 1.0) == pytest.approx(target, abs=1e-6)


def test_exp_moment_uniform_in_beta_below_critical():
    # Toda with b=1, lam=0.5, gamma=1: bounded uniformly for beta < 1/(gamma+|lam|)
    vals = [
        gibbs.exp_moment(gibbs.GibbsParams(beta, 1.0, 0.5), pot.toda(), 1.0)
        for beta in (1e-1, 1e-2, 1e-3)
    ]
    assert max(vals) < 2.0 * vals[-1] + 5.0  # a single constant bounds the family


def test_exp_moment_divergence():
    with pytest.raises(DivergenceError):
        gibbs.exp_moment(gibbs.GibbsParams(0.9, 1.0, 0.5), pot.toda(), 1.0)


def test_sampler_standard_gaussian_limit():
    rng = np.random.default_rng(1234)
    p = gibbs.GibbsParams(beta=1e-3, b=1.0, lam=0.0)
    s = gibbs.GibbsSampler(p, pot.harmonic())
    x = s.sample(rng, 100_000)
    assert np.mean(x) == pytest.approx(0.0, abs=0.01)
    assert np.var(x) == pytest.approx(1.0, abs=0.02)
    assert s.acceptance_rate > 0.5


def test_sampler_xi_mean_toda():
    rng = np.random.default_rng(7)
    p = gibbs.GibbsParams(beta=0.3, b=1.0, lam=0.7)
    spec = pot.toda()
    x = gibbs.sample(p, spec, rng, 60_000)
    xi = np.asarray(pot.eval_scaled(spec, p.beta, 1, x))
    se = np.std(xi) / math.sqrt(len(xi))
    assert abs(np.mean(xi) - 0.7) < 3 * se + 1e-12


def test_sampler_odd_observable_symmetrized_fpu():
    rng = np.random.default_rng(99)
    p = gibbs.GibbsParams(beta=0.3, b=1.0, lam=0.0)
    spec = pot.fpu_alpha(0.2)
    x = gibbs.sample(p, spec, rng, 60_000)
    obs = x**3
    target = gibbs.moment(p, spec, lambda y: y**3)
    se = np.std(obs) / math.sqrt(len(obs))
    assert abs(np.mean(obs) - target) < 3 * se


@pytest.mark.parametrize(
    "spec,beta,lam",
    [
        (pot.harmonic(), 0.5, 0.8),
        (pot.toda(), 0.2, 0.4),
        (pot.fpu_alpha(0.25), 0.15, -0.3),
        (pot.fpu_alpha(-0.2), 0.2, 0.0),
        (pot.toda(), 0.4, 0.0),
    ],
)
def test_sampler_first_four_moments_match_quadrature(spec, beta, lam):
    rng = np.random.default_rng(hash((beta, lam)) % 2**32)
    p = gibbs.GibbsParams(beta, 1.0, lam)
    x = gibbs.sample(p, spec, rng, 100_000)
    for k in (1, 2, 3, 4):
        mk = gibbs.moment(p, spec, lambda y, k=k: y**k)
        emp = np.mean(x**k)
        se = np.std(x**k) / math.sqrt(len(x))
        assert abs(emp - mk) < 4 * se + 1e-12, f"moment {k}"


def test_sampler_determinism_and_stream_splitting():
    p = gibbs.GibbsParams(beta=0.3, b=1.0, lam=0.2)
    spec = pot.toda()
    a = gibbs.sample(p, spec, np.random.default_rng(42), 1000)
    b = gibbs.sample(p, spec, np.random.default_rng(42), 1000)
    np.testing.assert_array_equal(a, b)
    # spawned streams are deterministic and distinct
    ss = np.random.SeedSequence(42).spawn(2)
    c = gibbs.sample(p, spec, np.random.default_rng(ss[0]), 100)
    d = gibbs.sample(p, spec, np.random.default_rng(ss[1]), 100)
    c2 = gibbs.sample(p, spec, np.random.default_rng(np.random.SeedSequence(42).spawn(2)[0]), 100)
    np.testing.assert_array_equal(c, c2)
    assert not np.array_equal(c, d)
