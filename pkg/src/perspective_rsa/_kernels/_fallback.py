"""Pure-Python/numpy implementations of the hot kernels.

Semantics and random-number consumption match the compiled module exactly, so
either backend yields the same chains up to floating-point rounding.

Parameter vectors use the sampler's coordinates
``phi = (alpha, w_s, log c_shape, log c_color, log c_texture)``.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def _utterance_costs(umask, phi):
    c = np.exp(np.asarray(phi[2:5], dtype=float))
    bits = (umask[:, None] >> np.arange(3)) & 1
    return bits @ c


def _logsumexp_rows(z):
    m = z.max(axis=-1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return (m + np.log(np.exp(z - m).sum(axis=-1, keepdims=True)))[..., 0]


def weight_marginals(info_asym, info_ego, occluded, log_wprior, scale):
    """``M[k, u] = log sum_w P(w) exp(scale * A[k, u, w])`` with ``scale = alpha * w_s``.

    Unoccluded contexts have ``A = E`` for every weight, so their marginal is
    ``scale * E`` exactly.
    """
    K, U, W = info_asym.shape
    lw_total = _logsumexp_rows(log_wprior[None, :])[0]
    out = np.empty((K, U))
    for k in range(K):
        if occluded[k]:
            z = scale * info_asym[k] + log_wprior[None, :]
            out[k] = _logsumexp_rows(z)
        else:
            out[k] = scale * info_ego[k] + lw_total
    return out


def speaker_logp_from_marginals(marg, info_ego, valid, umask, phi):
    alpha, ws = float(phi[0]), float(phi[1])
    cost = _utterance_costs(umask, phi)
    z = marg + alpha * (1.0 - ws) * info_ego - alpha * cost[None, :]
    z = np.where(valid.astype(bool), z, -np.inf)
    return z - _logsumexp_rows(z)[:, None]


def speaker_logp(info_asym, info_ego, valid, occluded, log_wprior, umask, phi):
    """Log speaker probabilities ``[K, U]`` for every context at parameters ``phi``."""
    marg = weight_marginals(info_asym, info_ego, occluded, log_wprior, float(phi[0]) * float(phi[1]))
    return speaker_logp_from_marginals(marg, info_ego, valid, umask, phi)


def loglik_from_logp(logp, group_weights, counts, lapse):
    U = logp.shape[1]
    pg = group_weights @ np.exp(logp)
    lp = np.log((1.0 - lapse) * pg + lapse / U)
    return float((counts * lp).sum())


def loglik(info_asym, info_ego, valid, occluded, log_wprior, umask,
           group_weights, counts, lapse, phi):
    logp = speaker_logp(info_asym, info_ego, valid, occluded, log_wprior, umask, phi)
    return loglik_from_logp(logp, group_weights, counts, lapse)


class _Target:
    """Tempered log-likelihood with the weight marginals cached on ``alpha * w_s``."""

    def __init__(self, tables):
        (self.ia, self.ie, self.valid, self.occ, self.lw, self.umask,
         self.gw, self.counts, self.lapse) = tables
        self._scale = None
        self._marg = None

    def __call__(self, phi):
        scale = float(phi[0]) * float(phi[1])
        if scale != self._scale:
            self._marg = weight_marginals(self.ia, self.ie, self.occ, self.lw, scale)
            self._scale = scale
        logp = speaker_logp_from_marginals(self._marg, self.ie, self.valid, self.umask, phi)
        return loglik_from_logp(logp, self.gw, self.counts, self.lapse)


def reflect(x, lo, hi):
    width = hi - lo
    if width <= 0:
        return lo
    while x < lo or x > hi:
        if x < lo:
            x = 2.0 * lo - x
        if x > hi:
            x = 2.0 * hi - x
    return x


def _sweep(target, phi, ll, beta, free, scale, factor, lo, hi, normals, uniforms, n_accept):
    """One Metropolis sweep at inverse temperature ``beta``.

    Coordinates are updated one at a time with reflected Gaussian steps.  When
    ``normals`` has one entry more than ``phi``, a final joint move follows:
    ``alpha`` is multiplied by ``exp(d)`` and every free log-cost shifted by
    ``-d``, which walks along the ridge where only ``alpha * cost`` is
    identified.  The move is a translation in ``(log alpha, log c)``, so its
    acceptance ratio carries the Jacobian ``exp(d)`` of the flat prior on alpha.
    """
    p = phi.shape[0]
    for j in range(p):
        if not free[j]:
            continue
        old = phi[j]
        phi[j] = reflect(old + factor * scale[j] * normals[j], lo[j], hi[j])
        ll_new = target(phi)
        if math.log(uniforms[j]) < beta * (ll_new - ll):
            ll = ll_new
            n_accept[j] += 1
        else:
            phi[j] = old
    if normals.shape[0] > p and _ridge_ok(phi, free, scale):
        d = factor * scale[p] * normals[p]
        old = phi.copy()
        phi[0] = phi[0] * math.exp(d)
        for j in range(2, 5):
            if free[j]:
                phi[j] -= d
        if all(lo[j] <= phi[j] <= hi[j] for j in range(p)):
            ll_new = target(phi)
            if math.log(uniforms[p]) < beta * (ll_new - ll) + d:
                n_accept[p] += 1
                return ll_new
        phi[:] = old
    return ll


def _ridge_ok(phi, free, scale):
    return scale[phi.shape[0]] > 0 and free[0] and phi[0] > 0 and (free[2] or free[3] or free[4])


def _factors(factors):
    return np.ones(1) if factors is None else np.asarray(factors, dtype=float)


def mh_chain(tables, phi0, free, scale, lo, hi, normals, uniforms, temperature=1.0, factors=None):
    """Per-parameter random-walk Metropolis sweeps.

    Sweep ``i`` multiplies every step size by ``factors[i % len(factors)]``
    (cycling step sizes; each sweep alone leaves the target invariant).
    Returns ``(samples[N, P], loglik[N], n_accept)``; row ``i`` is the state
    after sweep ``i``.  ``n_accept`` has one count per column of ``normals``
    (the last one belongs to the ridge move when it is enabled).
    """
    factors = _factors(factors)
    target = _Target(tables)
    phi = np.array(phi0, dtype=float)
    n, m = normals.shape
    samples = np.empty((n, phi.shape[0]))
    lls = np.empty(n)
    n_accept = np.zeros(m, dtype=np.int64)
    ll = target(phi)
    if not math.isfinite(ll):
        raise FloatingPointError("non-finite log-likelihood at chain start")
    for i in range(n):
        ll = _sweep(target, phi, ll, temperature, free, scale, factors[i % len(factors)], lo, hi,
                    normals[i], uniforms[i], n_accept)
        samples[i] = phi
        lls[i] = ll
    return samples, lls, n_accept


def ais_run(tables, phi0, free, scale, lo, hi, betas, normals, uniforms, factors=None):
    """One annealed importance sampling run; returns ``(log_weight, n_accept, final_phi)``.

    ``betas[0]`` must be 0 (``phi0`` is a prior draw); ``normals``/``uniforms``
    supply one sweep per remaining temperature.
    """
    factors = _factors(factors)
    target = _Target(tables)
    phi = np.array(phi0, dtype=float)
    n_accept = np.zeros(normals.shape[1], dtype=np.int64)
    ll = target(phi)
    logw = 0.0
    for t in range(1, betas.shape[0]):
        logw += (betas[t] - betas[t - 1]) * ll
        ll = _sweep(target, phi, ll, betas[t], free, scale, factors[(t - 1) % len(factors)], lo, hi,
                    normals[t - 1], uniforms[t - 1], n_accept)
    return logw, n_accept, phi
