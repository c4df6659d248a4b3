"""Resource-rational choice of perspective weight.

For each candidate weight an agent scores the expected probability that the
listener picks the target, minus a linear effort cost ``beta * w``, and keeps
the best weight.  The speaker's accuracy is that of a literal listener hearing
the speaker's preferred utterance; the listener's is its own pragmatic
accuracy, averaged over what speakers of each weight would say.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .rsa import (
    CostModel,
    RSAParams,
    _hidden_outcomes,
    _l0_target_prob,
    pragmatic_listener_curve,
    speaker_argmax,
    weight_grid,
)
from .semantics import TARGET, ContextSpec, MatchPattern, Utterance, reference_context, truth_mask

SIDES = ("speaker", "listener")


@dataclass(frozen=True)
class RRConfig:
    params: RSAParams = field(default_factory=lambda: RSAParams(alpha=5.0, cost=CostModel.per_feature(0.01, 0.01, 0.01)))
    beta: float = 0.1
    sweep_grid: tuple[float, ...] = weight_grid(0.005)
    reference_context: ContextSpec = field(default_factory=reference_context)

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError("beta must be finite and nonnegative")
        grid = tuple(float(w) for w in self.sweep_grid)
        if not grid or min(grid) < 0 or max(grid) > 1:
            raise ValueError("sweep grid must lie within [0, 1]")
        object.__setattr__(self, "sweep_grid", grid)


@dataclass(frozen=True, eq=False)
class SweepResult:
    side: str
    beta: float
    weights: np.ndarray
    expected_accuracy: np.ndarray
    rr_utility: np.ndarray
    utterances: tuple[Utterance, ...] | None
    star_index: int

    @property
    def w_star(self) -> float:
        return float(self.weights[self.star_index])

    @property
    def u_star(self) -> Utterance | None:
        return None if self.utterances is None else self.utterances[self.star_index]

    def rows(self) -> list[dict]:
        out = []
        for i, w in enumerate(self.weights):
            out.append({
                "side": self.side,
                "beta": self.beta,
                "w": float(w),
                "expected_accuracy": float(self.expected_accuracy[i]),
                "rr_utility": float(self.rr_utility[i]),
                "chosen_utterance": "" if self.utterances is None else str(self.utterances[i]),
                "is_argmax": int(i == self.star_index),
            })
        return out


def argmax_weight(utility: np.ndarray) -> int:
    """Index of the best weight; exact ties go to the largest weight."""
    top = utility.max()
    return int(np.flatnonzero(utility == top)[-1])


def _with_cost(side: str, beta: float, weights: np.ndarray, acc: np.ndarray,
               utterances) -> SweepResult:
    util = acc - beta * weights
    return SweepResult(side, float(beta), weights, acc, util, utterances, argmax_weight(util))


def speaker_expected_accuracy(u: Utterance, ctx: ContextSpec, params: RSAParams) -> float:
    """Probability a literal listener picks the target after ``u``.

    Averages over the speaker's prior on the listener's weight and over the
    hidden-object prior.
    """
    n = sum(1 for m in (TARGET.mask,) + ctx.shared_masks if truth_mask(u.mask, m))
    total = 0.0
    for wl, pw in zip(params.w_grid, params.wl_prior):
        for h, ph in _hidden_outcomes(ctx):
            total += pw * ph * _l0_target_prob(u.mask, n, h, wl)
    return total


def speaker_accuracy_curve(cfg: RRConfig) -> tuple[np.ndarray, tuple[Utterance, ...]]:
    ctx, params = cfg.reference_context, cfg.params
    utts = tuple(speaker_argmax(ctx, params, w) for w in cfg.sweep_grid)
    cache: dict[Utterance, float] = {}
    acc = np.array([cache.setdefault(u, speaker_expected_accuracy(u, ctx, params)) if u not in cache
                    else cache[u] for u in utts])
    return acc, utts


def speaker_sweep(cfg: RRConfig) -> SweepResult:
    acc, utts = speaker_accuracy_curve(cfg)
    return _with_cost("speaker", cfg.beta, np.asarray(cfg.sweep_grid), acc, utts)


def _hidden_pattern(h: int | None) -> MatchPattern | None:
    return None if h is None else MatchPattern.from_mask(h)


def listener_accuracy_curve(cfg: RRConfig, ws_prior: Sequence[float] | None = None) -> np.ndarray:
    """Expected pragmatic-listener accuracy at each weight of the sweep grid.

    ``ws_prior`` replaces the listener's belief over the speaker's weight (both
    inside the pragmatic listener and in the outer expectation).
    """
    params = cfg.params if ws_prior is None else cfg.params.with_ws_prior(ws_prior)
    ctx = cfg.reference_context
    mass: dict[Utterance, float] = {}
    for ws, pw in zip(params.w_grid, params.ws_prior):
        if pw > 0:
            u = speaker_argmax(ctx, params, ws)
            mass[u] = mass.get(u, 0.0) + pw
    acc = np.zeros(len(cfg.sweep_grid))
    for u in sorted(mass):
        for h, ph in _hidden_outcomes(ctx):
            hp = _hidden_pattern(h)
            acc += mass[u] * ph * pragmatic_listener_curve(u, ctx, hp, params, cfg.sweep_grid)
    return acc


def listener_sweep(cfg: RRConfig, ws_prior: Sequence[float] | None = None) -> SweepResult:
    acc = listener_accuracy_curve(cfg, ws_prior)
    return _with_cost("listener", cfg.beta, np.asarray(cfg.sweep_grid), acc, None)


@dataclass(frozen=True)
class BetaOptimum:
    beta: float
    ws_star: float
    wl_star: float


def beta_sweep(cfg: RRConfig, betas: Iterable[float],
               sides: Sequence[str] = SIDES) -> tuple[list[BetaOptimum], list[SweepResult]]:
    """Optimal weights for each beta, plus every sweep curve (for plotting)."""
    betas = [float(b) for b in betas]
    if not betas:
        raise ValueError("need at least one beta")
    weights = np.asarray(cfg.sweep_grid)
    s_acc = s_utts = l_acc = None
    if "speaker" in sides:
        s_acc, s_utts = speaker_accuracy_curve(cfg)
    if "listener" in sides:
        l_acc = listener_accuracy_curve(cfg)
    optima, curves = [], []
    for b in betas:
        if b < 0 or not math.isfinite(b):
            raise ValueError(f"bad beta {b}")
        ws_star = wl_star = math.nan
        if s_acc is not None:
            s = _with_cost("speaker", b, weights, s_acc, s_utts)
            curves.append(s)
            ws_star = s.w_star
        if l_acc is not None:
            lres = _with_cost("listener", b, weights, l_acc, None)
            curves.append(lres)
            wl_star = lres.w_star
        optima.append(BetaOptimum(b, ws_star, wl_star))
    return optima, curves


@dataclass(frozen=True)
class Breakpoint:
    ws: float
    before: Utterance
    after: Utterance


def find_utterance_breakpoints(cfg: RRConfig) -> list[Breakpoint]:
    """Weights at which the speaker's preferred utterance changes (first grid point after)."""
    grid = cfg.sweep_grid
    if len(grid) > 1 and max(b - a for a, b in zip(grid, grid[1:])) > 0.005 + 1e-12:
        raise ValueError("breakpoint search needs a sweep grid step of at most 0.005")
    ctx, params = cfg.reference_context, cfg.params
    out = []
    prev = None
    for w in grid:
        u = speaker_argmax(ctx, params, w)
        if prev is not None and u != prev:
            out.append(Breakpoint(w, prev, u))
        prev = u
    return out


CSV_COLUMNS = ("side", "beta", "w", "expected_accuracy", "rr_utility", "chosen_utterance", "is_argmax")


def fmt_float(x: float) -> str:
    return f"{x:.12g}"


def write_sweep_csv(curves: Iterable[SweepResult], fh: io.TextIOBase) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for c in curves:
        for r in c.rows():
            writer.writerow([r["side"], fmt_float(r["beta"]), fmt_float(r["w"]),
                             fmt_float(r["expected_accuracy"]), fmt_float(r["rr_utility"]),
                             r["chosen_utterance"], r["is_argmax"]])
