"""Object and utterance spaces, the truth-conditional lexicon, and context generators.

Objects are abstracted as *match patterns*: one same/different flag per
feature dimension, relative to the target.  A pattern is stored as a 3-bit
mask (bit ``d`` set when the object matches the target on dimension ``d``), so
the all-same pattern is ``7`` and the all-different pattern is ``0``.

Utterances are nonempty sets of mentioned dimensions, stored the same way.
An utterance mentions the *target's* value on each of its dimensions, so it is
true of an object exactly when the object matches the target there.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import total_ordering
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence

import numpy as np

DIMS = ("shape", "color", "texture")
N_DIMS = len(DIMS)
N_VALUES = 4
N_PATTERNS = 1 << N_DIMS
ALL_SAME_MASK = N_PATTERNS - 1


class MatchPattern(NamedTuple):
    """Same/different flags per dimension, relative to the target."""

    shape: bool
    color: bool
    texture: bool

    @property
    def mask(self) -> int:
        return int(self.shape) | (int(self.color) << 1) | (int(self.texture) << 2)

    @classmethod
    def from_mask(cls, mask: int) -> "MatchPattern":
        if not 0 <= mask < N_PATTERNS:
            raise ValueError(f"pattern mask out of range: {mask}")
        return cls(bool(mask & 1), bool(mask & 2), bool(mask & 4))

    def __str__(self) -> str:
        return "(" + ",".join("same" if s else "diff" for s in self) + ")"


ALL_PATTERNS = tuple(MatchPattern.from_mask(m) for m in range(N_PATTERNS))
TARGET = MatchPattern(True, True, True)
ALL_DIFF = MatchPattern(False, False, False)


@total_ordering
@dataclass(frozen=True)
class Utterance:
    """A nonempty set of mentioned feature dimensions.

    Utterances sort by number of mentioned dimensions, then lexicographically by
    dimension order; this is also the tie-breaking order used for argmaxes.
    """

    mask: int

    def __post_init__(self):
        if not 0 < self.mask < N_PATTERNS:
            raise ValueError(f"utterance must mention 1-{N_DIMS} dimensions, got mask {self.mask}")

    def __lt__(self, other: "Utterance") -> bool:
        return (self.length, self.dims) < (other.length, other.dims)

    @classmethod
    def of(cls, *names: str) -> "Utterance":
        mask = 0
        for name in names:
            mask |= 1 << DIMS.index(name)
        return cls(mask)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for d in range(N_DIMS) if self.mask >> d & 1)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(DIMS[d] for d in self.dims)

    @property
    def length(self) -> int:
        return len(self.dims)

    def __repr__(self) -> str:
        return "Utterance(" + "+".join(self.names) + ")"

    def __str__(self) -> str:
        return "+".join(self.names)

    @classmethod
    def parse(cls, text: str) -> "Utterance":
        names = [t.strip() for t in text.replace(",", "+").split("+") if t.strip()]
        if not names:
            raise ValueError("empty utterance")
        for name in names:
            if name not in DIMS:
                raise ValueError(f"unknown dimension {name!r}")
        return cls.of(*names)


ALL_UTTERANCES = tuple(
    Utterance(sum(1 << d for d in dims))
    for k in range(1, N_DIMS + 1)
    for dims in combinations(range(N_DIMS), k)
)
N_UTTERANCES = len(ALL_UTTERANCES)
# index of each utterance (by mask) in ALL_UTTERANCES
UTTERANCE_INDEX = {u.mask: i for i, u in enumerate(ALL_UTTERANCES)}


def truth(u: Utterance, o: MatchPattern) -> bool:
    """True iff ``o`` matches the target on every dimension ``u`` mentions."""
    return (u.mask & o.mask) == u.mask


def truth_mask(u_mask: int, o_mask: int) -> bool:
    return (u_mask & o_mask) == u_mask


def extension(u: Utterance, objects: Iterable[MatchPattern]) -> list[MatchPattern]:
    """Sub-multiset of ``objects`` the utterance is true of (order and multiplicity kept)."""
    return [o for o in objects if truth(u, o)]


def is_more_specific(u0: Utterance, u1: Utterance) -> bool:
    """Whether ``u0`` mentions a strict superset of ``u1``'s dimensions."""
    return u0.mask != u1.mask and (u0.mask & u1.mask) == u1.mask


def reframe(pattern: int, new_target: int) -> int:
    """Pattern of an object relative to ``new_target`` instead of the target.

    Two objects that both differ from the target on a dimension are treated as
    differing from each other there as well (objects are in general position).
    """
    return pattern & new_target


@dataclass(frozen=True)
class HiddenPrior:
    """Prior over the contents of a single occluded cell.

    ``weights[m]`` is the probability that the hidden object has pattern mask
    ``m``; ``empty`` is the probability that the cell holds no object.
    """

    weights: tuple[float, ...] = (1.0 / N_PATTERNS,) * N_PATTERNS
    empty: float = 0.0

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) != N_PATTERNS:
            raise ValueError(f"hidden prior needs {N_PATTERNS} pattern weights")
        if min(w) < 0 or self.empty < 0:
            raise ValueError("hidden prior weights must be nonnegative")
        total = sum(w) + self.empty
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"hidden prior must sum to 1, got {total}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "empty", float(self.empty))

    @classmethod
    def uniform(cls, empty: float = 0.0) -> "HiddenPrior":
        return cls((1.0 - empty) / N_PATTERNS * np.ones(N_PATTERNS), empty)

    @classmethod
    def over(cls, patterns: Iterable[MatchPattern | int], empty: float = 0.0) -> "HiddenPrior":
        masks = [p.mask if isinstance(p, MatchPattern) else int(p) for p in patterns]
        w = np.zeros(N_PATTERNS)
        for m in masks:
            w[m] += (1.0 - empty) / len(masks)
        return cls(tuple(w), empty)

    def outcomes(self) -> list[tuple[int | None, float]]:
        """(pattern mask or None for an empty cell, probability) with positive mass."""
        out: list[tuple[int | None, float]] = [(m, p) for m, p in enumerate(self.weights) if p > 0]
        if self.empty > 0:
            out.append((None, self.empty))
        return out


@dataclass(frozen=True)
class ContextSpec:
    """What the speaker sees: the shared distractors and whether a cell is occluded.

    The target is implicit (the all-same pattern).  ``shared`` is a multiset and
    is stored in canonical (sorted) order so equal contexts hash equally.
    """

    shared: tuple[MatchPattern, ...] = ()
    occluded: bool = False
    hidden_prior: HiddenPrior = field(default_factory=HiddenPrior)

    def __post_init__(self):
        pats = tuple(sorted(p if isinstance(p, MatchPattern) else MatchPattern.from_mask(int(p))
                            for p in self.shared))
        object.__setattr__(self, "shared", pats)

    @property
    def shared_masks(self) -> tuple[int, ...]:
        return tuple(p.mask for p in self.shared)

    @property
    def view(self) -> tuple[MatchPattern, ...]:
        """Objects in common ground, target first."""
        return (TARGET,) + self.shared

    def to_dict(self) -> dict:
        return {
            "shared": [[int(s) for s in p] for p in self.shared],
            "occluded": self.occluded,
            "hidden_prior": {"patterns": list(self.hidden_prior.weights),
                             "empty": self.hidden_prior.empty},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContextSpec":
        shared = []
        for row in d.get("shared", []):
            if len(row) != N_DIMS or any(v not in (0, 1) for v in row):
                raise ValueError(f"bad shared pattern {row!r}: need three 0/1 flags")
            shared.append(MatchPattern(*(bool(v) for v in row)))
        hp = d.get("hidden_prior")
        prior = HiddenPrior() if hp is None else HiddenPrior(tuple(hp["patterns"]), hp.get("empty", 0.0))
        return cls(tuple(shared), bool(d.get("occluded", False)), prior)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ContextSpec":
        return cls.from_dict(json.loads(text))


def reference_context() -> ContextSpec:
    """Target, two visible all-different fillers, one occluded cell with a uniform prior."""
    return ContextSpec((ALL_DIFF, ALL_DIFF), occluded=True, hidden_prior=HiddenPrior.uniform())


# -- concrete 64-object layer -------------------------------------------------


class ConcreteObject(NamedTuple):
    shape: int
    color: int
    texture: int

    @classmethod
    def checked(cls, shape: int, color: int, texture: int) -> "ConcreteObject":
        for v in (shape, color, texture):
            if not 0 <= v < N_VALUES:
                raise ValueError(f"feature value out of range: {v}")
        return cls(shape, color, texture)


ALL_OBJECTS = tuple(ConcreteObject(s, c, t) for s in range(N_VALUES)
                    for c in range(N_VALUES) for t in range(N_VALUES))


def project(target: ConcreteObject, other: ConcreteObject) -> MatchPattern:
    return MatchPattern(*(a == b for a, b in zip(target, other)))


class Exp1Condition(NamedTuple):
    distractor_present: bool
    occlusion_present: bool


@dataclass(frozen=True)
class Exp1Display:
    target: ConcreteObject
    visible: tuple[ConcreteObject, ...]
    hidden: tuple[ConcreteObject, ...]
    condition: Exp1Condition

    def context(self, hidden_prior: HiddenPrior | None = None) -> ContextSpec:
        return ContextSpec(tuple(project(self.target, o) for o in self.visible),
                           occluded=self.condition.occlusion_present,
                           hidden_prior=hidden_prior or HiddenPrior())


def sample_exp1_display(condition: Exp1Condition, rng: np.random.Generator) -> Exp1Display:
    """Draw one display following the Experiment 1 construction rules."""
    target = ALL_OBJECTS[rng.integers(len(ALL_OBJECTS))]
    used = {target}
    critical = None
    if condition.distractor_present:
        # same shape, and exactly one of color/texture differs
        dim = 1 + int(rng.integers(2))
        vals = list(target)
        vals[dim] = int(rng.choice([v for v in range(N_VALUES) if v != target[dim]]))
        critical = ConcreteObject(*vals)
        used.add(critical)
    n_fillers = int(rng.integers(2, 5))
    candidates = [o for o in ALL_OBJECTS if o.shape != target.shape and o not in used]
    picks = rng.choice(len(candidates), size=n_fillers, replace=False)
    fillers = [candidates[i] for i in picks]

    hidden: list[ConcreteObject] = []
    if condition.occlusion_present:
        n_distractors = n_fillers + (critical is not None)
        n_hidden = min(int(rng.integers(1, 3)), n_distractors - 1, n_fillers)
        hide = set(int(i) for i in rng.choice(n_fillers, size=n_hidden, replace=False))
        hidden = [f for i, f in enumerate(fillers) if i in hide]
        fillers = [f for i, f in enumerate(fillers) if i not in hide]
    visible = ([critical] if critical is not None else []) + fillers
    return Exp1Display(target, tuple(visible), tuple(hidden), condition)


def generate_exp1_context(condition: Exp1Condition | Sequence[bool], seed: int | np.random.Generator) -> ContextSpec:
    """Speaker-view context for one Experiment 1 trial of the given 2x2 cell."""
    condition = Exp1Condition(*condition)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return sample_exp1_display(condition, rng).context()
