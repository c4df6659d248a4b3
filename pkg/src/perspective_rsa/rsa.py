"""Recursive speaker/listener models with probabilistic perspective weighting.

The literal listener, speaker and pragmatic listener come in an egocentric
variant (the partner sees exactly what I see) and an occlusion-aware variant
(the listener may see a hidden object; the speaker cannot), mixed with a
perspective weight in [0, 1].  Each agent also marginalizes over a discrete
prior on its partner's weight.

All results are exact enumerations over the 8 match patterns and 7
utterances.  Speaker distributions are memoized on (context, params, w_S).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Hashable, Sequence

import numpy as np

from .semantics import (
    ALL_UTTERANCES,
    N_DIMS,
    N_UTTERANCES,
    TARGET,
    UTTERANCE_INDEX,
    ContextSpec,
    MatchPattern,
    Utterance,
    reframe,
    truth,
    truth_mask,
)

NEG_INF = -math.inf
NORMALIZATION_TOL = 1e-9


# -- parameters ----------------------------------------------------------------


@dataclass(frozen=True)
class CostModel:
    """Production cost of an utterance.

    ``flat`` charges ``per_utterance`` regardless of length; ``per_feature``
    sums one cost per mentioned dimension (shape, color, texture).
    """

    mode: str = "per_feature"
    per_utterance: float = 0.01
    feature_costs: tuple[float, float, float] = (0.01, 0.01, 0.01)

    def __post_init__(self):
        if self.mode not in ("flat", "per_feature"):
            raise ValueError(f"unknown cost mode {self.mode!r}")
        costs = tuple(float(c) for c in self.feature_costs)
        if len(costs) != N_DIMS:
            raise ValueError("need one cost per feature dimension")
        if self.per_utterance < 0 or min(costs) < 0:
            raise ValueError("costs must be nonnegative")
        object.__setattr__(self, "feature_costs", costs)
        object.__setattr__(self, "per_utterance", float(self.per_utterance))

    @classmethod
    def flat(cls, cost: float) -> "CostModel":
        return cls("flat", per_utterance=cost)

    @classmethod
    def per_feature(cls, shape: float, color: float, texture: float) -> "CostModel":
        return cls("per_feature", feature_costs=(shape, color, texture))

    def __call__(self, u: Utterance) -> float:
        if self.mode == "flat":
            return self.per_utterance
        return sum(self.feature_costs[d] for d in u.dims)

    def vector(self) -> np.ndarray:
        return np.array([self(u) for u in ALL_UTTERANCES])


def weight_grid(step: float) -> tuple[float, ...]:
    """Evenly spaced weights from 0 to 1 inclusive."""
    n = int(round(1.0 / step))
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"grid step must divide 1 evenly, got {step}")
    return tuple(round(i / n, 12) for i in range(n + 1))


def uniform_prior(grid: Sequence[float]) -> tuple[float, ...]:
    return (1.0 / len(grid),) * len(grid)


@dataclass(frozen=True)
class RSAParams:
    """Model parameters.

    ``w_grid`` is the support of both weight priors: ``wl_prior`` is the
    speaker's belief about the listener's weight and ``ws_prior`` the
    listener's belief about the speaker's.  ``listener_mixing`` selects how
    the pragmatic listener combines its two perspectives: ``"joint"`` mixes
    unnormalized posterior scores, ``"normalized"`` mixes the two normalized
    posteriors.
    """

    alpha: float = 5.0
    cost: CostModel = field(default_factory=CostModel)
    w_grid: tuple[float, ...] = weight_grid(0.05)
    wl_prior: tuple[float, ...] | None = None
    ws_prior: tuple[float, ...] | None = None
    listener_mixing: str = "joint"

    def __post_init__(self):
        if not self.alpha > 0 or not math.isfinite(self.alpha):
            raise ValueError("alpha must be positive and finite")
        grid = tuple(float(w) for w in self.w_grid)
        if len(grid) < 2 or grid[0] != 0.0 or grid[-1] != 1.0:
            raise ValueError("weight grid must include both endpoints 0 and 1")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("weight grid must be strictly increasing")
        object.__setattr__(self, "w_grid", grid)
        for name in ("wl_prior", "ws_prior"):
            prior = getattr(self, name)
            prior = uniform_prior(grid) if prior is None else tuple(float(p) for p in prior)
            if len(prior) != len(grid) or min(prior) < 0 or abs(sum(prior) - 1.0) > 1e-9:
                raise ValueError(f"{name} must be a distribution over the weight grid")
            object.__setattr__(self, name, prior)
        if self.listener_mixing not in ("joint", "normalized"):
            raise ValueError(f"unknown listener mixing {self.listener_mixing!r}")

    def with_ws_prior(self, prior: Sequence[float]) -> "RSAParams":
        return replace(self, ws_prior=tuple(float(p) for p in prior))


# -- distributions -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Distribution:
    """A finite distribution; ``support`` may contain repeated items (object tokens)."""

    support: tuple[Any, ...]
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (len(self.support),):
            raise ValueError("support and probabilities differ in length")
        if (p < 0).any() or abs(p.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"not a distribution (sum={p.sum()!r})")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self) -> int:
        return len(self.support)

    def __getitem__(self, i: int) -> float:
        return float(self.probs[i])

    def prob(self, item: Hashable) -> float:
        """Total probability of every token equal to ``item``."""
        return float(sum(p for s, p in zip(self.support, self.probs) if s == item))

    def argmax(self) -> int:
        """Index of the most probable token; the first one wins ties."""
        return int(np.argmax(self.probs))

    def argmax_set(self) -> list[int]:
        top = self.probs.max()
        return [i for i, p in enumerate(self.probs) if p == top]

    def expectation(self, f) -> float:
        return float(sum(p * f(s) for s, p in zip(self.support, self.probs)))

    def items(self):
        return zip(self.support, self.probs.tolist())


def _normalize(scores: np.ndarray) -> np.ndarray:
    return scores / scores.sum()


# -- literal listener ---------------------------------------------------------------


def _check_weight(w: float, name: str) -> float:
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {w}")
    return float(w)


def _l0_component(u_mask: int, view: Sequence[int]) -> np.ndarray:
    """Literal listener over one view (pattern masks); uniform if nothing fits."""
    fits = np.array([truth_mask(u_mask, o) for o in view], dtype=float)
    if fits.sum() == 0:
        return np.full(len(view), 1.0 / len(view))
    return fits / fits.sum()


def literal_listener_mix(u: Utterance, ctx: ContextSpec, hidden: MatchPattern | None,
                         wl: float) -> Distribution:
    """Literal listener mixing the common-ground view with its own full view.

    Support is the listener's view: target, shared distractors, then the hidden
    object if there is one.  With weight ``wl`` the listener interprets ``u``
    against common ground only (the hidden object is never chosen); with
    ``1 - wl`` against everything it sees.
    """
    wl = _check_weight(wl, "w_L")
    cg = (TARGET.mask,) + ctx.shared_masks
    full = cg + ((hidden.mask,) if hidden is not None else ())
    asym = np.zeros(len(full))
    asym[:len(cg)] = _l0_component(u.mask, cg)
    ego = _l0_component(u.mask, full)
    support = (TARGET,) + ctx.shared + ((hidden,) if hidden is not None else ())
    return Distribution(support, wl * asym + (1.0 - wl) * ego)


def _l0_target_prob(u_mask: int, n_common: int, hidden_mask: int | None, wl: float) -> float:
    # target sits in common ground and satisfies u; n_common counts its satisfiers
    ego_n = n_common + (1 if hidden_mask is not None and truth_mask(u_mask, hidden_mask) else 0)
    return wl * (1.0 / n_common) + (1.0 - wl) * (1.0 / ego_n)


# -- speaker --------------------------------------------------------------------------


def _count_satisfiers(u_mask: int, masks: Sequence[int]) -> int:
    return sum(1 for m in masks if truth_mask(u_mask, m))


def _hidden_outcomes(ctx: ContextSpec) -> list[tuple[int | None, float]]:
    if not ctx.occluded:
        return [(None, 1.0)]
    return ctx.hidden_prior.outcomes()


def _ego_info(u_mask: int, ctx: ContextSpec, target: int = TARGET.mask) -> float:
    if not truth_mask(u_mask, target):
        return NEG_INF
    return -math.log(_count_satisfiers(u_mask, (TARGET.mask,) + ctx.shared_masks))


def _asym_info(u_mask: int, ctx: ContextSpec, wl: float, target: int = TARGET.mask) -> float:
    if not truth_mask(u_mask, target):
        return NEG_INF
    n = _count_satisfiers(u_mask, (TARGET.mask,) + ctx.shared_masks)
    return sum(p * math.log(_l0_target_prob(u_mask, n, h, wl)) for h, p in _hidden_outcomes(ctx))


def speaker_utility_ego(u: Utterance, ctx: ContextSpec, params: RSAParams,
                        target: MatchPattern = TARGET) -> float:
    """Log literal-listener probability of ``target`` in the visible context, minus cost.

    Returns ``-inf`` when ``u`` is false of ``target`` (speakers never lie).
    ``target`` other than the default must be one of the shared tokens.
    """
    info = _ego_info(u.mask, ctx, target.mask)
    return info if info == NEG_INF else info - params.cost(u)


def speaker_utility_asym(u: Utterance, ctx: ContextSpec, params: RSAParams, wl: float,
                         target: MatchPattern = TARGET) -> float:
    """Expected log probability that a weight-``wl`` literal listener picks ``target``.

    The expectation runs over the hidden prior (a single occluded cell); an
    unoccluded context reduces to :func:`speaker_utility_ego`.
    """
    wl = _check_weight(wl, "w_L")
    info = _asym_info(u.mask, ctx, wl, target.mask)
    return info if info == NEG_INF else info - params.cost(u)


@dataclass(frozen=True, eq=False)
class SpeakerTables:
    """Cost-free informativity terms for every utterance in one context.

    ``asym[u, w]`` is the occlusion-aware term at listener weight ``w_grid[w]``
    and ``ego[u]`` the egocentric term; ``valid[u]`` marks utterances true of
    the target.
    """

    asym: np.ndarray
    ego: np.ndarray
    valid: np.ndarray


@lru_cache(maxsize=None)
def speaker_tables(ctx: ContextSpec, w_grid: tuple[float, ...]) -> SpeakerTables:
    W = len(w_grid)
    asym = np.full((N_UTTERANCES, W), NEG_INF)
    ego = np.full(N_UTTERANCES, NEG_INF)
    valid = np.zeros(N_UTTERANCES, dtype=bool)
    outcomes = _hidden_outcomes(ctx)
    cg = (TARGET.mask,) + ctx.shared_masks
    wl = np.asarray(w_grid)
    for i, u in enumerate(ALL_UTTERANCES):
        if not truth_mask(u.mask, TARGET.mask):
            continue
        valid[i] = True
        n = _count_satisfiers(u.mask, cg)
        ego[i] = -math.log(n)
        row = np.zeros(W)
        for h, p in outcomes:
            bump = 1 if h is not None and truth_mask(u.mask, h) else 0
            row += p * np.log(wl * (1.0 / n) + (1.0 - wl) * (1.0 / (n + bump)))
        asym[i] = row
    for a in (asym, ego, valid):
        a.setflags(write=False)
    return SpeakerTables(asym, ego, valid)


def _speaker_from_utilities(util: np.ndarray, valid: np.ndarray, params: RSAParams) -> Distribution:
    """``P(u) ∝ sum_w P(w_L) exp(alpha * util[u, w])`` with invalid utterances at zero."""
    with np.errstate(divide="ignore"):  # zero prior mass -> -inf, dropped below
        logw = np.log(np.asarray(params.wl_prior))
    z = np.full(util.shape, NEG_INF)
    z[valid] = params.alpha * util[valid] + logw[None, :]
    zv = z[valid]
    zmax = zv.max(axis=1, keepdims=True)
    per_u = np.full(N_UTTERANCES, NEG_INF)
    per_u[valid] = np.log(np.exp(zv - zmax).sum(axis=1)) + zmax[:, 0]
    top = per_u[valid].max()
    probs = np.zeros(N_UTTERANCES)
    probs[valid] = np.exp(per_u[valid] - top)
    return Distribution(ALL_UTTERANCES, _normalize(probs))


def _utilities(ctx: ContextSpec, params: RSAParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    tables = speaker_tables(ctx, params.w_grid)
    cost = params.cost.vector()
    ua = np.where(tables.valid[:, None], tables.asym - cost[:, None], NEG_INF)
    ue = np.where(tables.valid, tables.ego - cost, NEG_INF)
    return ua, np.broadcast_to(ue[:, None], ua.shape), tables.valid


@lru_cache(maxsize=1 << 16)
def speaker_distribution(ctx: ContextSpec, params: RSAParams, ws: float) -> Distribution:
    """Pragmatic speaker for the (implicit) target at perspective weight ``ws``.

    Utilities are mixed ``ws * U_asym + (1 - ws) * U_ego`` for each listener
    weight, exponentiated with ``alpha`` and averaged over the listener-weight
    prior before normalizing over utterances.
    """
    ws = _check_weight(ws, "w_S")
    ua, ue, valid = _utilities(ctx, params)
    util = np.full(ua.shape, NEG_INF)
    util[valid] = ws * ua[valid] + (1.0 - ws) * ue[valid]
    return _speaker_from_utilities(util, valid, params)


def speaker_distribution_ego(ctx: ContextSpec, params: RSAParams) -> Distribution:
    """The purely egocentric (occlusion-blind) speaker."""
    ua, ue, valid = _utilities(ctx, params)
    return _speaker_from_utilities(np.array(ue), valid, params)


def speaker_distribution_asym(ctx: ContextSpec, params: RSAParams) -> Distribution:
    """The purely occlusion-aware speaker."""
    ua, ue, valid = _utilities(ctx, params)
    return _speaker_from_utilities(ua, valid, params)


def speaker_argmax(ctx: ContextSpec, params: RSAParams, ws: float) -> Utterance:
    """Most probable utterance; ties go to the shortest, then first in dimension order."""
    dist = speaker_distribution(ctx, params, ws)
    return dist.support[dist.argmax()]


# -- pragmatic listener -------------------------------------------------------------


def _reframed_context(view: tuple[int, ...], i: int, occluded: bool, prior) -> ContextSpec:
    """Context as seen by a speaker whose target is ``view[i]``."""
    new_target = view[i]
    others = tuple(reframe(m, new_target) for j, m in enumerate(view) if j != i)
    return ContextSpec(others, occluded=occluded, hidden_prior=prior)


@lru_cache(maxsize=1 << 16)
def _listener_scores(u: Utterance, ctx: ContextSpec, hidden: MatchPattern | None,
                     params: RSAParams) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized posterior scores over the listener's view for both perspectives.

    Common-ground scores average the occlusion-aware speaker over the
    listener's prior on w_S; egocentric scores use a speaker who shares the
    listener's full view.  Each includes the uniform object prior of its view.
    """
    cg = (TARGET.mask,) + ctx.shared_masks
    full = cg + ((hidden.mask,) if hidden is not None else ())
    ui = UTTERANCE_INDEX[u.mask]
    asym = np.zeros(len(full))
    ego = np.zeros(len(full))
    for i, o in enumerate(cg):
        if not truth_mask(u.mask, o):
            continue
        rctx = _reframed_context(cg, i, ctx.occluded, ctx.hidden_prior)
        s = 0.0
        for ws, pw in zip(params.w_grid, params.ws_prior):
            if pw > 0:
                s += pw * speaker_distribution(rctx, params, ws).probs[ui]
        asym[i] = s / len(cg)
    for i, o in enumerate(full):
        if not truth_mask(u.mask, o):
            continue
        rctx = _reframed_context(full, i, False, ctx.hidden_prior)
        ego[i] = speaker_distribution(rctx, params, 0.0).probs[ui] / len(full)
    asym.setflags(write=False)
    ego.setflags(write=False)
    return asym, ego


def pragmatic_listener_components(u: Utterance, ctx: ContextSpec, hidden: MatchPattern | None,
                                  params: RSAParams) -> tuple[np.ndarray, np.ndarray]:
    """Normalized common-ground and egocentric listener posteriors (the mixture endpoints).

    A perspective under which ``u`` has zero probability for every object falls
    back to the literal listener of that perspective.
    """
    asym, ego = _listener_scores(u, ctx, hidden, params)
    l0_asym = literal_listener_mix(u, ctx, hidden, 1.0).probs
    l0_ego = literal_listener_mix(u, ctx, hidden, 0.0).probs
    pa = _normalize(asym) if asym.sum() > 0 else np.array(l0_asym)
    pe = _normalize(ego) if ego.sum() > 0 else np.array(l0_ego)
    return pa, pe


def pragmatic_listener_distribution(u: Utterance, ctx: ContextSpec, hidden: MatchPattern | None,
                                    params: RSAParams, wl: float) -> Distribution:
    """Pragmatic listener at perspective weight ``wl``.

    Support is the listener's view (target, shared tokens, hidden object).
    Weight 1 reproduces the common-ground listener and weight 0 the egocentric
    one exactly.
    """
    wl = _check_weight(wl, "w_L")
    support = (TARGET,) + ctx.shared + ((hidden,) if hidden is not None else ())
    asym, ego = _listener_scores(u, ctx, hidden, params)
    if asym.sum() == 0 and ego.sum() == 0:
        return literal_listener_mix(u, ctx, hidden, wl)
    pa, pe = pragmatic_listener_components(u, ctx, hidden, params)
    if params.listener_mixing == "normalized" or asym.sum() == 0 or ego.sum() == 0:
        return Distribution(support, wl * pa + (1.0 - wl) * pe)
    if wl == 1.0:
        return Distribution(support, pa)
    if wl == 0.0:
        return Distribution(support, pe)
    return Distribution(support, _normalize(wl * asym + (1.0 - wl) * ego))


def pragmatic_listener_curve(u: Utterance, ctx: ContextSpec, hidden: MatchPattern | None,
                             params: RSAParams, wls: Sequence[float], index: int = 0) -> np.ndarray:
    """Probability of object ``index`` under the pragmatic listener at each weight in ``wls``.

    Vectorized form of :func:`pragmatic_listener_distribution` for sweeps.
    """
    wl = np.asarray(wls, dtype=float)
    if ((wl < 0) | (wl > 1)).any():
        raise ValueError("w_L must lie in [0, 1]")
    asym, ego = _listener_scores(u, ctx, hidden, params)
    if asym.sum() == 0 and ego.sum() == 0:
        a = literal_listener_mix(u, ctx, hidden, 1.0).probs[index]
        e = literal_listener_mix(u, ctx, hidden, 0.0).probs[index]
        return wl * a + (1.0 - wl) * e
    pa, pe = pragmatic_listener_components(u, ctx, hidden, params)
    if params.listener_mixing == "normalized" or asym.sum() == 0 or ego.sum() == 0:
        return wl * pa[index] + (1.0 - wl) * pe[index]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (wl * asym[index] + (1.0 - wl) * ego[index]) / (wl * asym.sum() + (1.0 - wl) * ego.sum())
    out[wl == 1.0] = pa[index]
    out[wl == 0.0] = pe[index]
    return out


def clear_caches() -> None:
    speaker_tables.cache_clear()
    speaker_distribution.cache_clear()
    _listener_scores.cache_clear()
