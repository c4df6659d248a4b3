"""Posterior sampling and marginal likelihoods for the production model.

Both the sampler and annealed importance sampling use per-parameter
Gaussian random-walk Metropolis updates in sampler coordinates, reflected at
the prior bounds, followed by one joint move that rescales ``alpha`` against
the costs (only their product is well identified once ``alpha`` is large).
All randomness is drawn up front from named sub-streams, so
a seed fully determines every chain and run.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .._kernels import kernels
from ..rng import substream
from .data import TrialRecord
from .model import PARAM_NAMES, PHI_HI, PHI_LO, LikelihoodTables, ModelSpec, Theta, build_tables

log = logging.getLogger(__name__)

DEFAULT_PROPOSAL_FRAC = 0.05
DEFAULT_BETA_MIN = 1e-5
# each sweep cycles through these multiples of the base step size
DEFAULT_STEP_FACTORS = (1.0, 0.1, 0.01)
# sd of the joint alpha/cost move, in log-alpha units (0 disables it)
DEFAULT_RIDGE_STEP = 2.0


def _tables(data, spec: ModelSpec) -> LikelihoodTables:
    if isinstance(data, LikelihoodTables):
        return data
    return build_tables(data, spec)


def proposal_scales(frac: float | Sequence[float] = DEFAULT_PROPOSAL_FRAC) -> np.ndarray:
    """Random-walk step sizes as a fraction of each prior range."""
    frac = np.broadcast_to(np.asarray(frac, dtype=float), PHI_LO.shape)
    if (frac <= 0).any():
        raise ValueError("proposal fractions must be positive")
    return frac * (PHI_HI - PHI_LO)


def _kernel_scales(frac, ridge_step: float) -> np.ndarray:
    if ridge_step < 0 or not math.isfinite(ridge_step):
        raise ValueError("ridge step must be finite and nonnegative")
    return np.append(proposal_scales(frac), float(ridge_step))


N_MOVES = len(PARAM_NAMES) + 1


@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """Retained draws in sampler coordinates (``phi``), one row per sample."""

    phi: np.ndarray
    loglik: np.ndarray
    spec: ModelSpec
    burn_in: int
    lag: int
    seed: int
    acceptance_rate: np.ndarray
    proposal_scale: np.ndarray
    ridge_acceptance: float = math.nan

    def __len__(self) -> int:
        return self.phi.shape[0]

    @property
    def natural(self) -> np.ndarray:
        """Draws in natural units: alpha, w_S, c_shape, c_color, c_texture."""
        out = self.phi.copy()
        out[:, 2:] = np.exp(out[:, 2:])
        return out

    def column(self, name: str) -> np.ndarray:
        return self.natural[:, PARAM_NAMES.index(name)]

    @property
    def map_theta(self) -> Theta:
        """Highest-posterior retained draw (the prior is flat in sampler coordinates)."""
        return Theta.from_phi(self.phi[int(np.argmax(self.loglik))])

    @property
    def overall_acceptance(self) -> float:
        free = self.spec.free
        return float(self.acceptance_rate[free].mean()) if free.any() else 1.0


def run_mcmc(data: Sequence[TrialRecord] | LikelihoodTables, spec: ModelSpec = ModelSpec(),
             n_samples: int = 1000, burn_in: int = 1000, lag: int = 1, seed: int = 0,
             proposal_frac: float | Sequence[float] = DEFAULT_PROPOSAL_FRAC,
             init: Sequence[float] | str = "mode", adapt: bool = True, chain: int = 0,
             step_factors: Sequence[float] = DEFAULT_STEP_FACTORS,
             ridge_step: float = DEFAULT_RIDGE_STEP, backend=None) -> PosteriorSamples:
    """Random-walk Metropolis chain targeting likelihood times the flat prior.

    Each iteration is one sweep of single-parameter updates over the free
    parameters, with step sizes cycling through ``step_factors`` times the
    base scale, then one joint alpha/cost move of sd ``ridge_step``.  ``init`` is a full phi vector, ``"mode"`` (the default) starts
    at :func:`find_start`'s approximate mode and ``"prior"`` at a prior draw.
    With ``adapt`` the proposal scales are tuned toward a 0.44 acceptance rate
    during burn-in (in blocks of 100 sweeps) and then frozen.
    """
    if n_samples < 1 or burn_in < 0 or lag < 1:
        raise ValueError("need n_samples >= 1, burn_in >= 0 and lag >= 1")
    k = backend or kernels
    tables = _tables(data, spec)
    if tables.n_trials == 0:
        raise ValueError("no trials to fit")
    rng = substream(seed, f"chain/{chain}")
    free = spec.free.astype(np.uint8)
    scale = _kernel_scales(proposal_frac, ridge_step)
    factors = np.asarray(step_factors, dtype=float)
    if isinstance(init, str):
        if init not in ("mode", "prior"):
            raise ValueError(f"unknown init {init!r}")
        phi = find_start(tables, spec, backend=k) if init == "mode" else spec.sample_prior(rng)
    else:
        phi = spec.complete(init)
    n_total = burn_in + n_samples * lag
    normals = rng.standard_normal((n_total, N_MOVES))
    uniforms = rng.random((n_total, N_MOVES))
    tup = tables.as_tuple()
    start_ll = k.loglik(*tup, phi)
    if not math.isfinite(start_ll):
        raise FloatingPointError(f"non-finite log-likelihood {start_ll} at initial point "
                                 f"{dict(zip(PARAM_NAMES, Theta.from_phi(phi)))}")

    done = 0
    if adapt and burn_in > 0:
        block = 100
        while done < burn_in:
            n = min(block, burn_in - done)
            s, _, acc = k.mh_chain(tup, phi, free, scale, PHI_LO, PHI_HI,
                                   normals[done:done + n], uniforms[done:done + n], 1.0, factors)
            phi = s[-1].copy()
            rate = acc / n
            tuned = np.append(free.astype(bool), True)
            scale = scale * np.exp(np.where(tuned, rate - 0.44, 0.0))
            scale[:-1] = np.minimum(scale[:-1], PHI_HI - PHI_LO)
            done += n
    samples, lls, acc = k.mh_chain(tup, phi, free, scale, PHI_LO, PHI_HI,
                                   normals[done:], uniforms[done:], 1.0, factors)
    burn_left = burn_in - done
    keep = slice(burn_left + lag - 1, None, lag)
    rate = acc / max(n_total - done, 1)
    log.info("chain %d (%s): acceptance %s", chain, spec.variant,
             ", ".join(f"{n}={r:.2f}" for n, r, f in zip(PARAM_NAMES, rate, free) if f))
    return PosteriorSamples(samples[keep], lls[keep], spec, burn_in, lag, seed, rate[:-1], scale[:-1],
                            float(rate[-1]))


START_ALPHAS = tuple(float(a) for a in np.geomspace(0.5, 900.0, 12))


def find_start(data: Sequence[TrialRecord] | LikelihoodTables, spec: ModelSpec = ModelSpec(),
               alphas: Sequence[float] = START_ALPHAS, backend=None) -> np.ndarray:
    """Approximate posterior mode, used to start chains.

    The flat prior on alpha spreads most of its mass over a long plateau of
    nearly equal likelihood, so a chain started at a prior draw can spend its
    whole burn-in there.  This runs a bounded Nelder-Mead search from a
    log-spaced set of alpha values (other coordinates at mid-range) and keeps
    the best end point.  Deterministic; it only picks the starting state.
    """
    from scipy.optimize import minimize

    k = backend or kernels
    tables = _tables(data, spec)
    tup = tables.as_tuple()
    free = spec.free
    bounds = list(zip(PHI_LO[free], PHI_HI[free]))
    base = spec.complete(np.array([1.0, 0.5, -3.0, -3.0, -3.0]))

    def full(x):
        phi = base.copy()
        phi[free] = np.clip(x, PHI_LO[free], PHI_HI[free])
        return phi

    def nll(x):
        return -k.loglik(*tup, full(x))

    best, best_f = base, nll(base[free])
    for a in alphas:
        x0 = base.copy()
        if free[0]:
            x0[0] = a
        res = minimize(nll, x0[free], method="Nelder-Mead", bounds=bounds,
                       options={"maxiter": 2000, "xatol": 1e-4, "fatol": 1e-6})
        if res.fun < best_f:
            best, best_f = full(res.x), float(res.fun)
        if not free[0]:
            break
    return best


def hdi(x: np.ndarray, mass: float = 0.95, lo: float | None = None, hi: float | None = None,
        grid_size: int = 2048) -> tuple[float, float]:
    """Highest-density interval holding ``mass`` of the samples.

    Without bounds this is the shortest interval containing ``mass`` of the
    sorted samples.  With support bounds ``lo``/``hi`` the density is estimated
    by a Gaussian kernel estimate reflected at the bounds, so that a posterior
    piling up against a bound gets a region that reaches it; the result spans
    every grid point whose density clears the ``mass`` threshold.
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("no samples")
    if lo is None and hi is None:
        m = max(1, int(math.ceil(mass * n)))
        widths = x[m - 1:] - x[:n - m + 1]
        i = int(np.argmin(widths))
        return float(x[i]), float(x[i + m - 1])
    lo = -math.inf if lo is None else float(lo)
    hi = math.inf if hi is None else float(hi)
    sd = float(x.std())
    if n < 2 or sd == 0.0:
        return float(x[0]), float(x[-1])
    iqr = float(np.subtract(*np.percentile(x, [75, 25])))
    h = 0.9 * min(sd, iqr / 1.34 if iqr > 0 else sd) * n ** -0.2
    a, b = max(lo, x[0] - 4 * h), min(hi, x[-1] + 4 * h)
    grid = np.linspace(a, b, grid_size)
    dens = np.zeros(grid_size)
    centers = [x]
    if math.isfinite(lo):
        centers.append(2 * lo - x)
    if math.isfinite(hi):
        centers.append(2 * hi - x)
    for c in centers:
        for chunk in np.array_split(c, max(1, len(c) // 256)):
            dens += np.exp(-0.5 * ((grid[:, None] - chunk[None, :]) / h) ** 2).sum(axis=1)
    w = dens / dens.sum()
    order = np.argsort(w)[::-1]
    k = int(np.searchsorted(np.cumsum(w[order]), mass)) + 1
    inside = order[:k]
    return float(grid[inside.min()]), float(grid[inside.max()])


NATURAL_BOUNDS = {
    "alpha": (PHI_LO[0], PHI_HI[0]),
    "ws": (PHI_LO[1], PHI_HI[1]),
    "c_shape": (math.exp(PHI_LO[2]), math.exp(PHI_HI[2])),
    "c_color": (math.exp(PHI_LO[3]), math.exp(PHI_HI[3])),
    "c_texture": (math.exp(PHI_LO[4]), math.exp(PHI_HI[4])),
}


def posterior_hdis(post: PosteriorSamples, mass: float = 0.95) -> dict[str, tuple[float, float]]:
    out = {}
    for i, name in enumerate(PARAM_NAMES):
        if post.spec.free[i]:
            out[name] = hdi(post.natural[:, i], mass, *NATURAL_BOUNDS[name])
    return out


# -- annealed importance sampling --------------------------------------------------


def geometric_ladder(steps: int, beta_min: float = DEFAULT_BETA_MIN) -> np.ndarray:
    """Inverse temperatures 0 = b_0 < b_1 < ... < b_{steps-1} = 1, geometric after 0."""
    if steps < 2:
        raise ValueError("need at least 2 annealing steps")
    if steps == 2:
        return np.array([0.0, 1.0])
    b = np.geomspace(beta_min, 1.0, steps - 1)
    b[-1] = 1.0
    return np.concatenate([[0.0], b])


def log_mean_exp(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    m = x.max()
    if not math.isfinite(m):
        raise FloatingPointError("all importance weights are degenerate")
    return float(m + np.log(np.mean(np.exp(x - m))))


@dataclass(frozen=True)
class EvidenceResult:
    log_z: float
    per_run: tuple[float, ...]
    runs: int
    steps: int
    seed: int
    acceptance_rate: float


def marginal_likelihood_ais(data: Sequence[TrialRecord] | LikelihoodTables, spec: ModelSpec = ModelSpec(),
                            runs: int = 39, steps: int = 10000, seed: int = 0,
                            beta_min: float = DEFAULT_BETA_MIN,
                            proposal_frac: float | Sequence[float] = DEFAULT_PROPOSAL_FRAC,
                            step_factors: Sequence[float] = DEFAULT_STEP_FACTORS,
                            ridge_step: float = DEFAULT_RIDGE_STEP,
                            backend=None) -> EvidenceResult:
    """Log marginal likelihood by annealed importance sampling.

    Each run starts from a prior draw and takes one Metropolis sweep per
    temperature of a geometric ladder; the estimate is the log of the mean
    importance weight across runs.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    k = backend or kernels
    tables = _tables(data, spec)
    betas = geometric_ladder(steps, beta_min)
    free = spec.free.astype(np.uint8)
    scale = _kernel_scales(proposal_frac, ridge_step)
    tup = tables.as_tuple()
    per_run, n_acc = [], 0
    for r in range(runs):
        rng = substream(seed, f"ais/{r}")
        phi0 = spec.sample_prior(rng)
        normals = rng.standard_normal((steps - 1, N_MOVES))
        uniforms = rng.random((steps - 1, N_MOVES))
        logw, acc, _ = k.ais_run(tup, phi0, free, scale, PHI_LO, PHI_HI, betas, normals, uniforms,
                                 np.asarray(step_factors, dtype=float))
        per_run.append(float(logw))
        n_acc += int(acc[:-1].sum())
    n_moves = runs * (steps - 1) * max(int(free.sum()), 1)
    return EvidenceResult(log_mean_exp(np.array(per_run)), tuple(per_run), runs, steps, seed, n_acc / n_moves)


# -- generic sampler ------------------------------------------------------------------


def metropolis_hastings(log_target: Callable[[object], float], x0, propose: Callable, n_steps: int,
                        rng: np.random.Generator) -> list:
    """Plain Metropolis-Hastings with a user proposal.

    ``propose(x, rng)`` returns ``(x_new, log_q_ratio)`` where the ratio is
    ``log q(x | x_new) - log q(x_new | x)`` (0 for symmetric proposals).
    """
    x, lp = x0, log_target(x0)
    if not math.isfinite(lp):
        raise FloatingPointError("initial state has zero target density")
    out = []
    for _ in range(n_steps):
        y, lq = propose(x, rng)
        ly = log_target(y)
        if math.log(rng.random()) < ly - lp + lq:
            x, lp = y, ly
        out.append(x)
    return out


def cyclic_walk(n_states: int, max_step: int = 1) -> Callable:
    """Symmetric proposal on ``{0..n_states-1}``: a uniform nonzero step, wrapping around."""
    steps = [s for s in range(-max_step, max_step + 1) if s != 0]

    def propose(x, rng):
        return (x + steps[int(rng.integers(len(steps)))]) % n_states, 0.0

    return propose
