"""Slow, independent reimplementations used as test oracles.

Everything here works on plain integer masks and Python lists, with no
memoization, vectorization or shared helpers from the package, so agreement
with the library is meaningful.
"""
from __future__ import annotations

import math

# utterance masks in the library's canonical order: singles, pairs, triple
UTTERANCE_MASKS = (1, 2, 4, 3, 5, 6, 7)
TARGET = 7


def is_true(u: int, o: int) -> bool:
    return all(not (u >> d & 1) or (o >> d & 1) for d in range(3))


def literal(u: int, view: list[int]) -> list[float]:
    hits = [1.0 if is_true(u, o) else 0.0 for o in view]
    total = sum(hits)
    if total == 0:
        return [1.0 / len(view)] * len(view)
    return [h / total for h in hits]


def utterance_cost(u: int, cost) -> float:
    """``cost`` is ("flat", c) or ("per_feature", (cs, cc, ct))."""
    kind, value = cost
    if kind == "flat":
        return value
    return sum(value[d] for d in range(3) if u >> d & 1)


def speaker(shared: list[int], occluded: bool, hidden_w: list[float], empty: float, alpha: float,
            cost, ws: float, grid: list[float], wl_prior: list[float] | None = None) -> list[float]:
    """Speaker distribution over ``UTTERANCE_MASKS`` by a literal triple loop."""
    wl_prior = wl_prior or [1.0 / len(grid)] * len(grid)
    common = [TARGET] + list(shared)
    terms = []  # (utterance index, prior weight, exponent)
    for k, u in enumerate(UTTERANCE_MASKS):
        if not is_true(u, TARGET):
            continue
        c = utterance_cost(u, cost)
        u_ego = math.log(literal(u, common)[0]) - c
        for wl, pw in zip(grid, wl_prior):
            if occluded:
                info = 0.0
                for h in range(8):
                    if hidden_w[h] == 0:
                        continue
                    asym = literal(u, common)[0]
                    ego = literal(u, common + [h])[0]
                    info += hidden_w[h] * math.log(wl * asym + (1 - wl) * ego)
                if empty > 0:
                    info += empty * math.log(literal(u, common)[0])
                u_asym = info - c
            else:
                u_asym = u_ego
            terms.append((k, pw, alpha * (ws * u_asym + (1 - ws) * u_ego)))
    # shift by the largest exponent so large alpha does not underflow
    top = max(e for _, _, e in terms)
    scores = [0.0] * len(UTTERANCE_MASKS)
    for k, pw, e in terms:
        scores[k] += pw * math.exp(e - top)
    z = sum(scores)
    return [s / z for s in scores]


def _concrete(masks: list[int]) -> list[tuple[int, int, int]]:
    """Concrete objects in general position: 0 where same as target, else a fresh value."""
    out = []
    fresh = 1
    for m in masks:
        obj = []
        for d in range(3):
            if m >> d & 1:
                obj.append(0)
            else:
                obj.append(fresh)
                fresh += 1
        out.append(tuple(obj))
    return out


def _relative(target, other) -> int:
    return sum(1 << d for d in range(3) if target[d] == other[d])


def pragmatic_listener(u: int, shared: list[int], occluded: bool, hidden: int | None,
                       hidden_w: list[float], alpha: float, cost, grid: list[float],
                       wl: float, ws_prior: list[float] | None = None, mixing: str = "joint") -> list[float]:
    """Pragmatic listener over (target, shared..., hidden) from concrete objects."""
    ws_prior = ws_prior or [1.0 / len(grid)] * len(grid)
    ui = UTTERANCE_MASKS.index(u)
    common = [TARGET] + list(shared)
    full = common + ([hidden] if hidden is not None else [])
    objs = _concrete(full)
    n_cg = len(common)
    asym = [0.0] * len(full)
    ego = [0.0] * len(full)
    for i in range(n_cg):
        if not is_true(u, full[i]):
            continue
        rel = [_relative(objs[i], objs[j]) for j in range(n_cg) if j != i]
        s = sum(pw * speaker(rel, occluded, hidden_w, 0.0, alpha, cost, ws, grid)[ui]
                for ws, pw in zip(grid, ws_prior))
        asym[i] = s / n_cg
    for i in range(len(full)):
        if not is_true(u, full[i]):
            continue
        rel = [_relative(objs[i], objs[j]) for j in range(len(full)) if j != i]
        ego[i] = speaker(rel, False, hidden_w, 0.0, alpha, cost, 0.0, grid)[ui] / len(full)
    pa = [a / sum(asym) for a in asym]
    pe = [e / sum(ego) for e in ego]
    if mixing == "normalized":
        return [wl * a + (1 - wl) * e for a, e in zip(pa, pe)]
    if wl == 1.0:
        return pa
    if wl == 0.0:
        return pe
    mixed = [wl * a + (1 - wl) * e for a, e in zip(asym, ego)]
    return [m / sum(mixed) for m in mixed]


CRITICAL = {"distractor_absent": None, "same_shape": 1, "same_shape_color": 3, "same_shape_texture": 5}


def trial_loglik(condition: str, occluded: bool, mention_mask: int, theta, lapse: float = 0.05) -> float:
    """Log-likelihood of one trial: two filler contexts mixed 50/50, then the lapse."""
    alpha, ws, cs, cc, ct = theta
    grid = [i / 20 for i in range(21)]
    crit = CRITICAL[condition]
    p = 0.0
    for filler in (2, 4):
        shared = ([crit] if crit is not None else []) + [filler]
        dist = speaker(shared, occluded, [1 / 8] * 8, 0.0, alpha, ("per_feature", (cs, cc, ct)), ws, grid)
        p += 0.5 * dist[UTTERANCE_MASKS.index(mention_mask)]
    return math.log((1 - lapse) * p + lapse / 7)


def posterior(prior: list[float], likelihoods: list[list[float]]) -> list[float]:
    """Prior times each observation's likelihood column, normalized once at the end."""
    post = list(prior)
    for lik in likelihoods:
        post = [p * l for p, l in zip(post, lik)]
    z = sum(post)
    return [p / z for p in post]
