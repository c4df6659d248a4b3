import math

import numpy as np
import pytest

from perspective_rsa.bda.model import PHI_HI, PHI_LO, ModelSpec, Theta, build_tables
from perspective_rsa.bda.sampling import (
    EvidenceResult,
    PosteriorSamples,
    cyclic_walk,
    find_start,
    geometric_ladder,
    hdi,
    log_mean_exp,
    marginal_likelihood_ais,
    metropolis_hastings,
    posterior_hdis,
    proposal_scales,
    run_mcmc,
)
from perspective_rsa.bda.synthetic import generate_trials
from perspective_rsa.rng import substream

TRUTH = Theta(5.0, 1.0, 0.01, 0.1, 0.2)
WS_ONLY = ModelSpec("mixture", fixed=(("alpha", 5.0), ("c_shape", 0.01), ("c_color", 0.1), ("c_texture", 0.2)))


@pytest.fixture(scope="module")
def trials():
    return generate_trials(TRUTH, ModelSpec("occlusion_sensitive"), substream(0, "synthetic/trials"))


@pytest.fixture(scope="module")
def tiny():
    return build_tables(generate_trials(TRUTH, ModelSpec("occlusion_sensitive"), np.random.default_rng(9),
                                        n_speakers=2))


@pytest.fixture(scope="module")
def posterior(trials):
    return run_mcmc(trials, ModelSpec("mixture"), n_samples=1000, burn_in=1000, seed=0)


# -- generic Metropolis-Hastings ------------------------------------------------------


def test_discrete_chain_matches_target():
    weights = np.array([1, 2, 3, 4, 5, 6, 5, 4, 3, 2, 1, 8], dtype=float)
    target = weights / weights.sum()
    logp = np.log(target)
    draws = metropolis_hastings(lambda x: logp[x], 0, cyclic_walk(len(target), 2), 100_000,
                                np.random.default_rng(0))
    freq = np.bincount(draws, minlength=len(target)) / len(draws)
    assert np.abs(freq - target).max() < 0.02


def test_mh_rejects_impossible_start():
    with pytest.raises(FloatingPointError):
        metropolis_hastings(lambda x: -math.inf, 0, cyclic_walk(3), 10, np.random.default_rng(0))


# -- MCMC over the production model --------------------------------------------------


def test_chain_is_bit_reproducible(trials):
    a = run_mcmc(trials, n_samples=200, burn_in=200, seed=3)
    b = run_mcmc(trials, n_samples=200, burn_in=200, seed=3)
    assert np.array_equal(a.phi, b.phi) and np.array_equal(a.loglik, b.loglik)
    c = run_mcmc(trials, n_samples=200, burn_in=200, seed=4)
    assert not np.array_equal(a.phi, c.phi)


def test_samples_stay_in_support_and_respect_pins(trials):
    post = run_mcmc(trials, ModelSpec("egocentric"), n_samples=300, burn_in=100, lag=2, seed=1, init="prior")
    assert isinstance(post, PosteriorSamples) and len(post) == 300
    assert (post.phi >= PHI_LO).all() and (post.phi <= PHI_HI).all()
    assert (post.phi[:, 1] == 0.0).all()
    assert 0 < post.overall_acceptance < 1
    assert np.isfinite(post.ridge_acceptance)


def test_mcmc_argument_errors(trials):
    with pytest.raises(ValueError):
        run_mcmc([], n_samples=10)
    with pytest.raises(ValueError):
        run_mcmc(trials, n_samples=0)
    with pytest.raises(ValueError):
        run_mcmc(trials, init="random")
    with pytest.raises(FloatingPointError):
        run_mcmc(trials, init=[math.nan, 0.5, -4, -2, -2], n_samples=5, burn_in=0)


def test_mode_start_is_near_the_generating_likelihood(trials):
    tables = build_tables(trials)
    start = find_start(tables)
    assert tables.loglik(start) >= tables.loglik(ModelSpec().complete(TRUTH.to_phi())) - 5.0


def test_texture_cost_recovered_above_color(posterior):
    p = np.mean(posterior.column("c_texture") > posterior.column("c_color"))
    assert p > 0.95


def test_alpha_twenty_recovery_covers_ws():
    # flat-ish costs, full perspective-taking speaker
    theta = Theta(20.0, 1.0, 0.05, 0.05, 0.05)
    data = generate_trials(theta, ModelSpec("occlusion_sensitive"), substream(0, "synthetic/trials"))
    post = run_mcmc(data, ModelSpec("mixture"), seed=0)
    lo, hi = posterior_hdis(post)["ws"]
    assert lo <= 1.0 <= hi


def test_map_and_natural_units(posterior):
    nat = posterior.natural
    np.testing.assert_allclose(nat[:, 2:], np.exp(posterior.phi[:, 2:]))
    assert posterior.map_theta.in_support()
    assert set(posterior_hdis(posterior)) == {"alpha", "ws", "c_shape", "c_color", "c_texture"}


def test_proposal_scales():
    np.testing.assert_allclose(proposal_scales(0.05), 0.05 * (PHI_HI - PHI_LO))
    with pytest.raises(ValueError):
        proposal_scales(-1.0)


# -- HDI ------------------------------------------------------------------------------------


def test_hdi_unbounded_is_shortest_interval():
    x = np.concatenate([np.zeros(5), np.linspace(10, 11, 95)])
    lo, hi = hdi(x, 0.9)
    assert (lo, hi) == (10.0, pytest.approx(10 + 89 / 94))


def test_hdi_bounded_reaches_the_bound():
    x = 1 - np.random.default_rng(0).exponential(0.1, 5000).clip(0, 1)
    lo, hi = hdi(x, 0.95, 0.0, 1.0)
    assert hi == 1.0 and 0.55 < lo < 0.8


def test_hdi_on_normal_draws():
    x = np.random.default_rng(1).normal(size=20000)
    lo, hi = hdi(x, 0.95)
    assert lo == pytest.approx(-1.96, abs=0.06) and hi == pytest.approx(1.96, abs=0.06)
    with pytest.raises(ValueError):
        hdi(np.array([]))


# -- AIS ------------------------------------------------------------------------------------


def test_ladder():
    b = geometric_ladder(5, 1e-4)
    assert b[0] == 0 and b[-1] == 1 and (np.diff(b) > 0).all()
    assert list(geometric_ladder(2)) == [0.0, 1.0]
    with pytest.raises(ValueError):
        geometric_ladder(1)


def test_log_mean_exp():
    assert log_mean_exp(np.array([0.0, 0.0])) == 0.0
    assert log_mean_exp(np.array([1000.0, -math.inf])) == pytest.approx(1000 - math.log(2))
    with pytest.raises(FloatingPointError):
        log_mean_exp(np.array([-math.inf]))


def test_ais_on_empty_data_is_zero():
    r = marginal_likelihood_ais([], ModelSpec(), runs=3, steps=20, seed=0)
    assert isinstance(r, EvidenceResult)
    assert r.log_z == 0.0 and r.per_run == (0.0, 0.0, 0.0)


def quadrature(tables, n=10_000):
    ws = (np.arange(n) + 0.5) / n
    ll = np.array([tables.loglik(WS_ONLY.complete([5.0, w, 0, 0, 0])) for w in ws])
    return log_mean_exp(ll)


def test_ais_matches_quadrature_on_reduced_model(tiny):
    exact = quadrature(tiny)
    est = marginal_likelihood_ais(tiny, WS_ONLY, runs=10, steps=1000, seed=0)
    assert abs(est.log_z - exact) < 1.0


def test_ais_run_variance_shrinks_with_steps(tiny):
    medians = []
    for steps in (100, 1000, 10_000):
        var = [np.var(marginal_likelihood_ais(tiny, WS_ONLY, runs=8, steps=steps, seed=s).per_run)
               for s in range(20)]
        medians.append(np.median(var))
    assert medians[0] > medians[1] > medians[2]


def test_ais_is_reproducible_and_validates(tiny):
    a = marginal_likelihood_ais(tiny, ModelSpec("egocentric"), runs=2, steps=50, seed=5)
    b = marginal_likelihood_ais(tiny, ModelSpec("egocentric"), runs=2, steps=50, seed=5)
    assert a == b
    with pytest.raises(ValueError):
        marginal_likelihood_ais(tiny, runs=0)
