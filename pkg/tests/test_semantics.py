import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perspective_rsa.semantics import (
    ALL_DIFF,
    ALL_OBJECTS,
    ALL_PATTERNS,
    ALL_UTTERANCES,
    TARGET,
    ConcreteObject,
    ContextSpec,
    Exp1Condition,
    HiddenPrior,
    MatchPattern,
    Utterance,
    extension,
    generate_exp1_context,
    is_more_specific,
    project,
    reference_context,
    sample_exp1_display,
    truth,
)

SHAPE = Utterance.of("shape")
SHAPE_COLOR = Utterance.of("shape", "color")
patterns = st.sampled_from(ALL_PATTERNS)
utterances = st.sampled_from(ALL_UTTERANCES)


def test_truth_examples():
    assert truth(SHAPE, TARGET)
    assert not truth(SHAPE_COLOR, MatchPattern(True, False, True))


def test_truth_table_true_cell_count():
    # each utterance of length k is true of 2**(3-k) patterns: 3*4 + 3*2 + 1
    independent = sum(1 for u in range(1, 8) for o in range(8) if u & o == u)
    assert independent == 19
    assert sum(truth(u, o) for u in ALL_UTTERANCES for o in ALL_PATTERNS) == independent


def test_target_satisfies_everything():
    assert all(truth(u, TARGET) for u in ALL_UTTERANCES)


@given(utterances, utterances, patterns)
def test_truth_is_monotone(u0, u1, o):
    if set(u1.dims) <= set(u0.dims) and truth(u0, o):
        assert truth(u1, o)


def test_extension_examples():
    assert extension(SHAPE, [TARGET, ALL_DIFF]) == [TARGET]
    same_same_diff = MatchPattern(True, True, False)
    assert extension(SHAPE, [TARGET, same_same_diff]) == [TARGET, same_same_diff]


@settings(max_examples=1000)
@given(st.lists(patterns, max_size=12))
def test_extension_nesting_and_multiplicity(objs):
    narrow = extension(SHAPE_COLOR, objs)
    wide = extension(SHAPE, objs)
    for o in set(narrow):
        assert narrow.count(o) <= wide.count(o)
    assert len(wide) <= len(objs)
    assert (len(wide) == len(objs)) == all(truth(SHAPE, o) for o in objs)


def test_is_more_specific_examples():
    assert is_more_specific(SHAPE_COLOR, SHAPE)
    assert not is_more_specific(SHAPE, Utterance.of("color"))
    assert not is_more_specific(SHAPE, SHAPE)


def test_more_specific_means_strictly_smaller_extension():
    flagged = 0
    for u0, u1 in itertools.product(ALL_UTTERANCES, repeat=2):
        if is_more_specific(u0, u1):
            flagged += 1
            e0, e1 = set(extension(u0, ALL_PATTERNS)), set(extension(u1, ALL_PATTERNS))
            assert e0 < e1
    assert flagged == 12


def test_utterance_order_and_parsing():
    assert [str(u) for u in ALL_UTTERANCES] == [
        "shape", "color", "texture", "shape+color", "shape+texture", "color+texture", "shape+color+texture"]
    assert Utterance.parse("color+shape") == SHAPE_COLOR
    for bad in ("", "size", "+"):
        with pytest.raises(ValueError):
            Utterance.parse(bad)
    with pytest.raises(ValueError):
        Utterance(0)


def test_project_examples():
    x = ConcreteObject(1, 2, 3)
    assert project(x, x) == TARGET
    assert project(x, ConcreteObject(0, 0, 0)) == ALL_DIFF


def test_project_agrees_with_value_comparison():
    for t in ALL_OBJECTS:
        for o in ALL_OBJECTS:
            pat = project(t, o)
            for u in ALL_UTTERANCES:
                assert truth(u, pat) == all(t[d] == o[d] for d in u.dims)


def test_hidden_prior_validation():
    assert sum(HiddenPrior().weights) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        HiddenPrior((0.5,) * 8)
    with pytest.raises(ValueError):
        HiddenPrior((-0.1, 0.3, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1))
    p = HiddenPrior.over([ALL_DIFF], empty=0.5)
    assert p.outcomes() == [(0, 0.5), (None, 0.5)]


def test_context_is_a_canonical_multiset():
    a = ContextSpec((ALL_DIFF, TARGET, ALL_DIFF))
    b = ContextSpec((TARGET, ALL_DIFF, ALL_DIFF))
    assert a == b and hash(a) == hash(b)
    assert a.shared.count(ALL_DIFF) == 2


@given(st.lists(patterns, max_size=6), st.booleans(),
       st.lists(st.floats(0.01, 1.0), min_size=8, max_size=8))
def test_context_json_round_trip(shared, occluded, w):
    prior = HiddenPrior(tuple(np.array(w) / sum(w)))
    ctx = ContextSpec(tuple(shared), occluded, prior)
    back = ContextSpec.from_json(ctx.to_json())
    assert back.shared == ctx.shared and back.occluded == ctx.occluded
    np.testing.assert_allclose(back.hidden_prior.weights, prior.weights, rtol=0, atol=1e-15)


def test_context_json_rejects_bad_flags():
    with pytest.raises(ValueError):
        ContextSpec.from_dict({"shared": [[0, 2, 1]]})
    with pytest.raises(ValueError):
        ContextSpec.from_dict(json.loads('{"shared": [[0, 1]]}'))


def test_reference_context():
    ctx = reference_context()
    assert ctx.shared == (ALL_DIFF, ALL_DIFF) and ctx.occluded
    assert ctx.hidden_prior.weights == (1 / 8,) * 8


@pytest.mark.parametrize("seed", range(50))
def test_exp1_generator_conditions(seed):
    absent = generate_exp1_context((False, False), seed)
    assert not absent.occluded
    assert all(not p.shape for p in absent.shared)
    assert 2 <= len(absent.shared) <= 4

    present = generate_exp1_context((True, False), seed)
    same_shape = [p for p in present.shared if p.shape]
    assert len(same_shape) == 1
    assert same_shape[0].color + same_shape[0].texture == 1
    assert generate_exp1_context((True, True), seed).occluded


@pytest.mark.parametrize("seed", range(50))
def test_exp1_never_hides_a_same_shape_distractor(seed):
    rng = np.random.default_rng(seed)
    for cond in itertools.product((False, True), repeat=2):
        display = sample_exp1_display(Exp1Condition(*cond), rng)
        assert all(h.shape != display.target.shape for h in display.hidden)
        assert bool(display.hidden) == cond[1]
        assert len(set(display.visible + display.hidden + (display.target,))) == len(display.visible) + len(display.hidden) + 1


def test_exp1_generator_is_deterministic():
    for cond in itertools.product((False, True), repeat=2):
        assert generate_exp1_context(cond, 7) == generate_exp1_context(cond, 7)
