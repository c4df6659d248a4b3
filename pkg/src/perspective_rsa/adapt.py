"""Round-by-round inference of a partner's perspective weight.

A listener keeps a posterior over the speaker's weight on the weight grid,
updates it with every observed utterance, and re-optimizes its own weight
against that posterior after each round.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .rr import RRConfig, argmax_weight, fmt_float, listener_accuracy_curve
from .rsa import RSAParams, pragmatic_listener_distribution, speaker_argmax, speaker_distribution
from .rng import as_generator
from .semantics import ALL_SAME_MASK, ContextSpec, MatchPattern, Utterance, UTTERANCE_INDEX


class DegenerateEvidenceError(ValueError):
    """Observations have zero likelihood under every weight with prior mass."""


@dataclass(frozen=True)
class SpeakerPolicy:
    """How a simulated speaker chooses utterances.

    ``model`` plays the pragmatic speaker's most probable utterance at weight
    ``ws``; ``shape_only`` always names only the shape; ``exhaustive`` always
    names all three dimensions.
    """

    kind: str
    ws: float | None = None

    def __post_init__(self):
        if self.kind not in ("model", "shape_only", "exhaustive"):
            raise ValueError(f"unknown policy {self.kind!r}")
        if self.kind == "model" and (self.ws is None or not 0.0 <= self.ws <= 1.0):
            raise ValueError("model policy needs a weight in [0, 1]")

    @classmethod
    def shape_only(cls) -> "SpeakerPolicy":
        return cls("shape_only")

    @classmethod
    def exhaustive(cls) -> "SpeakerPolicy":
        return cls("exhaustive")

    @classmethod
    def model(cls, ws: float) -> "SpeakerPolicy":
        return cls("model", float(ws))

    @classmethod
    def parse(cls, text: str) -> "SpeakerPolicy":
        """``shape_only``, ``exhaustive`` or ``model:<w>``."""
        if text.startswith("model:"):
            try:
                ws = float(text.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"bad model weight in {text!r}") from None
            return cls.model(ws)
        return cls(text)

    def utterance(self, ctx: ContextSpec, params: RSAParams) -> Utterance:
        if self.kind == "shape_only":
            return Utterance.of("shape")
        if self.kind == "exhaustive":
            return Utterance.of("shape", "color", "texture")
        return speaker_argmax(ctx, params, self.ws)

    def __str__(self) -> str:
        return f"model:{self.ws:g}" if self.kind == "model" else self.kind


class ObservationLog:
    """Append-only sequence of (utterance, context) observations."""

    def __init__(self, items: Iterable[tuple[Utterance, ContextSpec]] = ()):
        self._items: list[tuple[Utterance, ContextSpec]] = []
        for u, ctx in items:
            self.append(u, ctx)

    def append(self, u: Utterance, ctx: ContextSpec) -> None:
        self._items.append((u, ctx))

    def __iter__(self) -> Iterator[tuple[Utterance, ContextSpec]]:
        return iter(tuple(self._items))

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]


@dataclass(frozen=True, eq=False)
class WeightPosterior:
    grid: tuple[float, ...]
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.shape != (len(self.grid),) or (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("posterior must be a distribution over the grid")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def prior(cls, params: RSAParams) -> "WeightPosterior":
        return cls(params.w_grid, np.asarray(params.ws_prior))

    @property
    def mean(self) -> float:
        return float(np.dot(self.grid, self.probs))

    @property
    def sd(self) -> float:
        g = np.asarray(self.grid)
        var = float(np.dot((g - self.mean) ** 2, self.probs))
        return math.sqrt(max(var, 0.0))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)


def observation_loglik(u: Utterance, ctx: ContextSpec, params: RSAParams) -> np.ndarray:
    """``log P_S1(u | ctx, w)`` for every grid weight."""
    ui = UTTERANCE_INDEX[u.mask]
    with np.errstate(divide="ignore"):
        return np.log(np.array([speaker_distribution(ctx, params, w).probs[ui] for w in params.w_grid]))


def update_posterior(prior: WeightPosterior, obs: Iterable[tuple[Utterance, ContextSpec]],
                     params: RSAParams) -> WeightPosterior:
    """Posterior over the speaker's weight after the observations (product likelihood)."""
    if tuple(prior.grid) != params.w_grid:
        raise ValueError("posterior grid differs from the model's weight grid")
    with np.errstate(divide="ignore"):
        logp = np.log(prior.probs)
    for i, (u, ctx) in enumerate(obs):
        ll = observation_loglik(u, ctx, params)
        if not np.isfinite(ll).any():
            raise DegenerateEvidenceError(f"observation {i} ({u}) has zero likelihood at every weight")
        logp = logp + ll
    if not np.isfinite(logp).any():
        raise DegenerateEvidenceError("evidence has zero likelihood wherever the prior has mass")
    p = np.exp(logp - logp.max())
    return WeightPosterior(prior.grid, p / p.sum())


@dataclass(frozen=True)
class TrajectoryRow:
    round: int
    posterior_mean_ws: float
    posterior_sd_ws: float
    wl_star: float
    error: int | None = None


def _wl_star(cfg: RRConfig, post: WeightPosterior) -> float:
    acc = listener_accuracy_curve(cfg, post.probs)
    util = acc - cfg.beta * np.asarray(cfg.sweep_grid)
    return cfg.sweep_grid[argmax_weight(util)]


def adaptive_listener_trajectory(rounds: int, policy: SpeakerPolicy, cfg: RRConfig) -> list[TrajectoryRow]:
    """Listener's state after 0..rounds observations of ``policy`` in the reference context."""
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    params, ctx = cfg.params, cfg.reference_context
    log = ObservationLog()
    prior = WeightPosterior.prior(params)
    post = prior
    rows = []
    for r in range(rounds + 1):
        rows.append(TrajectoryRow(r, post.mean, post.sd, _wl_star(cfg, post)))
        if r == rounds:
            break
        u = policy.utterance(ctx, params)
        log.append(u, ctx)
        post = update_posterior(post, [(u, ctx)], params)
    return rows


CRITICAL_HIDDEN = (1, 3, 5)
NONCRITICAL_HIDDEN = (0, 2, 4, 6)


@dataclass(frozen=True)
class HiddenSampler:
    """Draws the occluded object: a same-shape competitor with ``critical_rate``."""

    critical_rate: float = 0.25
    critical: tuple[int, ...] = CRITICAL_HIDDEN
    noncritical: tuple[int, ...] = NONCRITICAL_HIDDEN

    def __call__(self, rng: np.random.Generator) -> MatchPattern:
        pool = self.critical if rng.random() < self.critical_rate else self.noncritical
        return MatchPattern.from_mask(pool[int(rng.integers(len(pool)))])


def simulate_dyad(rounds: int, speaker: SpeakerPolicy, listener_beta: float,
                  rng: int | np.random.Generator | None = None, cfg: RRConfig | None = None,
                  listener_wl: float | None = None,
                  hidden_sampler: HiddenSampler = HiddenSampler()) -> list[TrajectoryRow]:
    """Play ``rounds`` trials between a policy speaker and an adapting listener.

    Row ``r`` holds the listener's state after ``r`` observations and the
    outcome of the trial played in that state (``error`` is ``None`` on the
    final row, which has no trial).  ``listener_wl`` pins the listener's weight
    instead of re-optimizing it.  The listener picks the most probable object,
    breaking exact ties uniformly at random.
    """
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    base = cfg or RRConfig()
    cfg = RRConfig(base.params, listener_beta, base.sweep_grid, base.reference_context)
    rng = as_generator(rng, "dyad")
    params, ctx = cfg.params, cfg.reference_context
    post = WeightPosterior.prior(params)
    rows = []
    for r in range(rounds + 1):
        wl = _wl_star(cfg, post) if listener_wl is None else float(listener_wl)
        if r == rounds:
            rows.append(TrajectoryRow(r, post.mean, post.sd, wl, None))
            break
        hidden = hidden_sampler(rng)
        u = speaker.utterance(ctx, params)
        dist = pragmatic_listener_distribution(u, ctx, hidden, params.with_ws_prior(post.probs), wl)
        ties = dist.argmax_set()
        pick = ties[int(rng.integers(len(ties)))] if len(ties) > 1 else ties[0]
        rows.append(TrajectoryRow(r, post.mean, post.sd, wl, int(pick != 0)))
        post = update_posterior(post, [(u, ctx)], params)
    return rows


CSV_COLUMNS = ("round", "posterior_mean_ws", "posterior_sd_ws", "wl_star", "error")


def write_trajectory_csv(rows: Sequence[TrajectoryRow], fh: io.TextIOBase, seed: int | None = None) -> None:
    if seed is not None:
        fh.write(f"# seed={seed}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([row.round, fmt_float(row.posterior_mean_ws), fmt_float(row.posterior_sd_ws),
                         fmt_float(row.wl_star), "" if row.error is None else row.error])
