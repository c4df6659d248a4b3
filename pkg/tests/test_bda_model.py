import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from perspective_rsa.bda.data import CONDITIONS, TrialRecord
from perspective_rsa.bda.model import (
    CELLS,
    PHI_HI,
    PHI_LO,
    ModelSpec,
    Theta,
    build_tables,
    cell_contexts,
    cell_speaker_probs,
    expected_features,
    log_likelihood,
    trial_likelihood,
)
from perspective_rsa.bda.synthetic import design, generate_ratings, generate_trials
from perspective_rsa.semantics import ALL_UTTERANCES

trial_records = st.builds(TrialRecord, st.just("s"), st.sampled_from(CONDITIONS), st.booleans(),
                          st.sampled_from(ALL_UTTERANCES))
phis = st.tuples(st.floats(PHI_LO[0] + 1e-6, PHI_HI[0]), st.floats(0.0, 1.0),
                 *(st.floats(-10.0, 1.0) for _ in range(3)))


def theta_of(phi):
    return Theta.from_phi(np.array(phi))


LAPSE_FLOOR = math.log(0.05 / 7)
LAPSE_CEIL = math.log(0.95 + 0.05 / 7)


@settings(max_examples=100, deadline=None)
@given(trial_records, phis)
def test_trial_likelihood_matches_naive_oracle(t, phi):
    theta = theta_of(phi)
    got = trial_likelihood(t, theta)
    want = oracles.trial_loglik(t.condition, t.occluded, t.mentioned.mask, tuple(theta))
    assert got == pytest.approx(want, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(trial_records, phis, st.sampled_from(["egocentric", "occlusion_sensitive", "mixture"]))
def test_trial_likelihood_bounds(t, phi, variant):
    ll = trial_likelihood(t, theta_of(phi), ModelSpec(variant))
    assert LAPSE_FLOOR - 1e-12 <= ll <= LAPSE_CEIL + 1e-12


@settings(max_examples=100, deadline=None)
@given(phis)
def test_egocentric_model_is_occlusion_blind(phi):
    p = cell_speaker_probs(theta_of(phi), ModelSpec("egocentric"))
    for cond in CONDITIONS:
        np.testing.assert_array_equal(p[CELLS.index((cond, False))], p[CELLS.index((cond, True))])


def test_cell_probabilities_are_distributions():
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = cell_speaker_probs(ModelSpec().sample_prior(rng))
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
        assert (p >= 0).all()


def test_log_likelihood_is_sum_of_trials():
    trials = generate_trials(Theta(5, 1, 0.01, 0.1, 0.2), ModelSpec("occlusion_sensitive"),
                             np.random.default_rng(1), n_speakers=3)
    theta = Theta(12.0, 0.4, 0.05, 0.02, 0.3)
    total = sum(trial_likelihood(t, theta) for t in trials)
    assert log_likelihood(trials, theta) == pytest.approx(total, abs=1e-9)


def test_model_specs():
    assert [ModelSpec(v).n_params for v in ("egocentric", "occlusion_sensitive", "mixture")] == [4, 4, 5]
    assert ModelSpec.parse("occlusion-sensitive").variant == "occlusion_sensitive"
    spec = ModelSpec("mixture", fixed=(("alpha", 5.0), ("c_shape", 0.01)))
    assert spec.n_params == 3
    phi = spec.complete(np.zeros(5))
    assert phi[0] == 5.0 and phi[2] == pytest.approx(math.log(0.01))
    with pytest.raises(ValueError):
        ModelSpec("oracle")
    with pytest.raises(ValueError):
        ModelSpec(fixed=(("beta", 1.0),))
    assert spec.log_prior_volume() == pytest.approx(math.log(1.0 * 11.0 * 11.0))


def test_prior_draws_stay_in_support():
    rng = np.random.default_rng(5)
    for _ in range(500):
        phi = ModelSpec().sample_prior(rng)
        assert Theta.from_phi(phi).in_support()


def test_context_reconstruction():
    for cond in CONDITIONS:
        ctxs = cell_contexts(cond, True)
        assert [w for _, w in ctxs] == [0.5, 0.5]
        for ctx, _ in ctxs:
            assert ctx.occluded
            assert len(ctx.shared) == (1 if cond == "distractor_absent" else 2)
    masks = {ctx.shared_masks for ctx, _ in cell_contexts("same_shape_color", False)}
    assert {tuple(sorted(m)) for m in masks} == {(2, 3), (3, 4)}


def test_expected_features_occlusion_effect():
    theta = Theta(5.0, 1.0, 0.01, 0.1, 0.2)
    sens = expected_features(theta, ModelSpec("occlusion_sensitive"))
    ego = expected_features(theta, ModelSpec("egocentric"))
    assert sens[(False, True)] > sens[(False, False)]
    assert ego[(False, True)] == ego[(False, False)]
    assert ego[(True, True)] == ego[(True, False)]


def test_tables_cache_is_not_shared_mutably():
    a = build_tables([])
    a.info_asym[...] = 0
    b = build_tables([])
    assert b.info_asym.any()


def test_synthetic_design_is_balanced():
    cells = design(np.random.default_rng(0))
    assert len(cells) == 24
    present = [c != "distractor_absent" for c, _ in cells]
    occluded = [o for _, o in cells]
    assert sum(present) == 12 and sum(occluded) == 12
    with pytest.raises(ValueError):
        design(np.random.default_rng(0), 10)


def test_synthetic_trials_shape_and_determinism():
    th = Theta(5, 1, 0.01, 0.1, 0.2)
    a = generate_trials(th, ModelSpec("occlusion_sensitive"), np.random.default_rng(3))
    b = generate_trials(th, ModelSpec("occlusion_sensitive"), np.random.default_rng(3))
    assert a == b and len(a) == 83 * 24
    assert len({t.speaker_id for t in a}) == 83


def test_synthetic_ratings_shape():
    r = generate_ratings(np.random.default_rng(0), gap=5.0, n_judges=2, n_items=3, n_speakers=4)
    assert len(r) == 2 * 4 * 3 * 2
    assert all(0 <= x.target_fit <= 100 for x in r)
