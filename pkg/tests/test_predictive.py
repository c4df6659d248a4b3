import numpy as np
import pytest

import oracles
from perspective_rsa.bda.data import CONDITIONS
from perspective_rsa.bda.model import ModelSpec, Theta
from perspective_rsa.bda.predictive import CellPrediction, draw_features, posterior_predictive_features
from perspective_rsa.bda.sampling import run_mcmc
from perspective_rsa.bda.synthetic import generate_trials
from perspective_rsa.rng import substream

TRUTH = Theta(5.0, 1.0, 0.01, 0.1, 0.2)


def fit(variant):
    data = generate_trials(TRUTH, ModelSpec(variant), substream(2, "synthetic/trials"))
    return run_mcmc(data, ModelSpec(variant), n_samples=300, burn_in=300, seed=2)


def by_cell(preds):
    return {(p.distractor_present, p.occluded): p for p in preds}


def test_sensitive_model_mentions_more_under_occlusion():
    cells = by_cell(posterior_predictive_features(fit("occlusion_sensitive")))
    assert cells[(False, True)].mean > cells[(False, False)].mean
    for p in cells.values():
        assert isinstance(p, CellPrediction) and p.lo <= p.mean <= p.hi


def test_egocentric_model_ignores_occlusion():
    cells = by_cell(posterior_predictive_features(fit("egocentric")))
    for present in (False, True):
        assert cells[(present, True)].mean == cells[(present, False)].mean
        assert (cells[(present, True)].lo, cells[(present, True)].hi) == \
               (cells[(present, False)].lo, cells[(present, False)].hi)


def test_single_draw_against_enumeration():
    phi = TRUTH.to_phi()
    got = draw_features(phi, ModelSpec("mixture"))[0]
    lengths = [bin(m).count("1") for m in oracles.UTTERANCE_MASKS]
    grid = [i / 20 for i in range(21)]
    for g, (cond, occ) in enumerate((c, o) for c in CONDITIONS for o in (False, True)):
        crit = oracles.CRITICAL[cond]
        want = 0.0
        for filler in (2, 4):
            shared = ([crit] if crit is not None else []) + [filler]
            dist = oracles.speaker(shared, occ, [1 / 8] * 8, 0.0, TRUTH.alpha,
                                   ("per_feature", TRUTH[2:]), TRUTH.ws, grid)
            want += 0.5 * sum(p * n for p, n in zip(dist, lengths))
        assert got[g] == pytest.approx(want, abs=1e-12)


def test_predictive_requires_draws():
    with pytest.raises(ValueError):
        draw_features(np.empty((0, 5)), ModelSpec())
