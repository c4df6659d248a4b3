"""Command-line interface.

Every command writes its outputs into ``--out`` together with a manifest
(``<command>.manifest.json``) holding the resolved configuration, seed, tool
version, output paths and wall-clock duration.  Exit codes: 0 success,
1 runtime failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .adapt import DegenerateEvidenceError, SpeakerPolicy, simulate_dyad, write_trajectory_csv
from .bda import (
    BootstrapError,
    DataError,
    ModelSpec,
    Theta,
    build_tables,
    generate_ratings,
    generate_trials,
    marginal_likelihood_ais,
    multistage_bootstrap,
    posterior_hdis,
    read_ratings,
    read_trials,
    run_mcmc,
    write_ratings,
    write_trials,
)
from .bda.model import PARAM_NAMES
from .bda.predictive import posterior_predictive_features
from .bda.sampling import DEFAULT_PROPOSAL_FRAC, DEFAULT_RIDGE_STEP
from .bda.synthetic import N_SPEAKERS, TRIALS_PER_SPEAKER
from .rng import substream
from .rr import RRConfig, beta_sweep, find_utterance_breakpoints, fmt_float, write_sweep_csv
from .rsa import CostModel, RSAParams, weight_grid
from .semantics import ContextSpec, reference_context
from .theorem import HYPOTHESES, check_theorem

log = logging.getLogger("perspective_rsa")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

# generating parameters for gen-synthetic
DEFAULT_THETA = Theta(alpha=5.0, ws=1.0, c_shape=0.01, c_color=0.1, c_texture=0.2)


class ConfigError(ValueError):
    pass


# -- parsing helpers ------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected finite numbers, got {text!r}")
    return vals


def _cost(text: str) -> CostModel:
    """``flat:<c>`` or three per-feature costs ``<shape>,<color>,<texture>``."""
    try:
        if text.startswith("flat:"):
            return CostModel.flat(float(text[5:]))
        vals = _floats(text)
        if len(vals) != 3:
            raise ValueError
        return CostModel.per_feature(*vals)
    except (ValueError, argparse.ArgumentTypeError):
        raise argparse.ArgumentTypeError(f"cost must be flat:<c> or three comma-separated costs, got {text!r}") from None


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {v}")
    return v


def _pos_int(text: str) -> int:
    v = _nonneg_int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def _seed(text: str) -> int:
    v = _nonneg_int(text)
    if v >= 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _policy(text: str) -> SpeakerPolicy:
    try:
        return SpeakerPolicy.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


# -- output plumbing --------------------------------------------------------------------


class Run:
    """Collects outputs of one command and writes its manifest."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.manifest_name = f"{command}.manifest.json"
        self.t0 = time.perf_counter()

    def path(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(str(p))
        return p

    def write_json(self, name: str, obj: dict) -> Path:
        p = self.path(name)
        obj = dict(obj, manifest=self.manifest_name)
        p.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")
        return p

    def open_csv(self, name: str):
        fh = open(self.path(name), "w", newline="")
        fh.write(f"# manifest={self.manifest_name}\n")
        return fh

    def config(self) -> dict:
        skip = {"func", "quiet", "out"}
        cfg = {}
        for k, v in sorted(vars(self.args).items()):
            if k in skip:
                continue
            cfg[k] = v if isinstance(v, (int, float, str, bool, list, type(None))) else str(v)
        return cfg

    def finish(self) -> None:
        manifest = {
            "command": self.command,
            "config": self.config(),
            "seed": self.args.seed,
            "version": __version__,
            "backend": BACKEND,
            "outputs": self.outputs,
            "duration_s": round(time.perf_counter() - self.t0, 3),
        }
        (self.out / self.manifest_name).write_text(json.dumps(manifest, indent=2) + "\n")

    def say(self, msg: str) -> None:
        if not self.args.quiet:
            print(msg)


def _load_context(path: str | None) -> ContextSpec:
    if path is None:
        return reference_context()
    try:
        return ContextSpec.from_json(Path(path).read_text())
    except (OSError, KeyError, TypeError, json.JSONDecodeError, ValueError) as e:
        raise ConfigError(f"bad context file {path}: {e}") from None


def _model(name: str) -> ModelSpec:
    try:
        return ModelSpec.parse(name)
    except ValueError as e:
        raise ConfigError(str(e)) from None


# -- commands -------------------------------------------------------------------------


def cmd_sweep(args: argparse.Namespace) -> int:
    run = Run("sweep", args)
    try:
        params = RSAParams(alpha=args.alpha, cost=args.cost)
        cfg = RRConfig(params, 0.0, weight_grid(args.grid_step), _load_context(args.context))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if any(b < 0 for b in args.beta):
        raise ConfigError("beta must be nonnegative")
    sides = ("speaker", "listener") if args.side == "both" else (args.side,)
    optima, curves = beta_sweep(cfg, args.beta, sides)
    with run.open_csv("sweep.csv") as fh:
        write_sweep_csv(curves, fh)
    with run.open_csv("optima.csv") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("beta", "ws_star", "wl_star"))
        for o in optima:
            w.writerow((fmt_float(o.beta), fmt_float(o.ws_star), fmt_float(o.wl_star)))
    if "speaker" in sides and args.grid_step <= 0.005:
        with run.open_csv("breakpoints.csv") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("ws", "from", "to"))
            for b in find_utterance_breakpoints(cfg):
                w.writerow((fmt_float(b.ws), b.before, b.after))
    for o in optima:
        run.say(f"beta={o.beta:g}  ws*={o.ws_star:g}  wl*={o.wl_star:g}")
    run.finish()
    return EXIT_OK


def cmd_adapt(args: argparse.Namespace) -> int:
    run = Run("adapt", args)
    if args.beta < 0:
        raise ConfigError("beta must be nonnegative")
    base = RRConfig(RSAParams(alpha=args.alpha, cost=args.cost), args.beta, weight_grid(args.grid_step))
    rows = simulate_dyad(args.rounds, args.policy, args.beta, substream(args.seed, "dyad"), base)
    with run.open_csv("adapt.csv") as fh:
        write_trajectory_csv(rows, fh, seed=args.seed)
    for r in rows:
        run.say(f"round {r.round}: E[ws]={r.posterior_mean_ws:.4f} wl*={r.wl_star:g}"
                + ("" if r.error is None else f" error={r.error}"))
    run.finish()
    return EXIT_OK


def _theta_from_args(args: argparse.Namespace) -> Theta:
    cs, cc, ct = args.costs
    theta = Theta(args.alpha, args.ws, cs, cc, ct)
    if not theta.in_support():
        raise ConfigError(f"generating parameters outside the prior support: {theta}")
    return theta


def cmd_gen_synthetic(args: argparse.Namespace) -> int:
    run = Run("gen-synthetic", args)
    if args.kind == "ratings":
        ratings = generate_ratings(substream(args.seed, "synthetic/ratings"), args.gap,
                                   n_speakers=args.speakers)
        with run.open_csv("ratings.csv") as fh:
            write_ratings(ratings, fh)
        run.say(f"{len(ratings)} ratings, true gap {args.gap:g}")
    else:
        if len(args.costs) != 3:
            raise ConfigError("--costs needs three values")
        spec = _model(args.model)
        theta = _theta_from_args(args)
        trials = generate_trials(theta, spec, substream(args.seed, "synthetic/trials"),
                                 args.speakers, args.trials)
        with run.open_csv("trials.csv") as fh:
            write_trials(trials, fh)
        truth = dict(zip(PARAM_NAMES, spec.complete(theta.to_phi())))
        truth.update({k: math.exp(truth[k]) for k in PARAM_NAMES[2:]})
        run.write_json("truth.json", {"model": spec.variant, "theta": truth, "lapse": spec.lapse})
        run.say(f"{len(trials)} trials from {spec.variant} at {theta}")
    run.finish()
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    run = Run("fit", args)
    spec = _model(args.model)
    trials = read_trials(args.data)
    if not trials:
        raise ConfigError(f"{args.data}: no trials to fit")
    tables = build_tables(trials, spec)
    post = run_mcmc(tables, spec, n_samples=args.samples, burn_in=args.burn_in, lag=args.lag,
                    seed=args.seed, proposal_frac=args.proposal_frac, adapt=args.adapt,
                    ridge_step=args.ridge_step, init=args.init)
    samples_path = run.out / "samples.csv"
    with run.open_csv("samples.csv") as fh:
        np.savetxt(fh, post.natural, delimiter=",", header=",".join(PARAM_NAMES), comments="", fmt="%.12g")
    free = [n for n, f in zip(PARAM_NAMES, spec.free) if f]
    hdis = posterior_hdis(post)
    acc = {n: float(r) for n, r, f in zip(PARAM_NAMES, post.acceptance_rate, spec.free) if f}
    acc["ridge"] = post.ridge_acceptance
    run.write_json("fit.json", {
        "model": spec.variant,
        "map": {n: float(v) for n, v in zip(PARAM_NAMES, post.map_theta) if n in free},
        "hdi95": {n: list(v) for n, v in hdis.items()},
        "samples_path": str(samples_path),
        "seed": args.seed,
        "acceptance_rate": acc,
    })
    if args.predictive:
        with run.open_csv("predictive.csv") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("distractor_present", "occluded", "mean", "lo95", "hi95"))
            for c in posterior_predictive_features(post):
                w.writerow((int(c.distractor_present), int(c.occluded), fmt_float(c.mean),
                            fmt_float(c.lo), fmt_float(c.hi)))
    for n, (lo, hi) in hdis.items():
        run.say(f"{n:>10s}: 95% HDI [{lo:.4g}, {hi:.4g}]")
    run.finish()
    return EXIT_OK


def cmd_evidence(args: argparse.Namespace) -> int:
    run = Run("evidence", args)
    spec = _model(args.model)
    if args.steps < 2:
        raise ConfigError("--steps must be at least 2")
    trials = read_trials(args.data)
    res = marginal_likelihood_ais(build_tables(trials, spec), spec, runs=args.runs, steps=args.steps,
                                  seed=args.seed, ridge_step=args.ridge_step)
    run.write_json("evidence.json", {
        "model": spec.variant,
        "log_z": res.log_z,
        "per_run": list(res.per_run),
        "runs": res.runs,
        "steps": res.steps,
        "seed": res.seed,
    })
    run.say(f"log Z ({spec.variant}) = {res.log_z:.4f}")
    run.finish()
    return EXIT_OK


def cmd_bootstrap(args: argparse.Namespace) -> int:
    run = Run("bootstrap", args)
    ratings = read_ratings(args.data)
    res = multistage_bootstrap(ratings, args.replicates, args.seed, args.level)
    run.write_json("bootstrap.json", {
        "difference": res.estimate,
        "ci": [res.ci_low, res.ci_high],
        "level": res.level,
        "replicates": args.replicates,
        "seed": args.seed,
    })
    run.say(f"unscripted - scripted = {res.estimate:.4f}, {100 * res.level:g}% CI "
            f"[{res.ci_low:.4f}, {res.ci_high:.4f}]")
    run.finish()
    return EXIT_OK


def cmd_check_theorem(args: argparse.Namespace) -> int:
    run = Run("check-theorem", args)
    rep = check_theorem(args.n, substream(args.seed, f"theorem/{args.hypothesis}"), args.hypothesis)
    examples = [{
        "shared": [list(map(int, p)) for p in v.instance.ctx.shared],
        "hidden_prior": list(v.instance.ctx.hidden_prior.weights),
        "u0": str(v.instance.u0),
        "u1": str(v.instance.u1),
        "margin": v.margin,
    } for v in rep.examples]
    run.write_json("theorem.json", {
        "hypothesis": rep.hypothesis,
        "n": rep.n,
        "violations": rep.n_violations,
        "min_margin": rep.min_margin,
        "examples": examples,
        "seed": args.seed,
    })
    run.say(f"{rep.n_violations} violations in {rep.n} instances ({rep.hypothesis} hypothesis)")
    run.finish()
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def _globals(p: argparse.ArgumentParser, top: bool) -> None:
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    p.add_argument("--seed", type=_seed, default=d(0), help="64-bit seed (default 0)")
    p.add_argument("--out", default=d("."), help="output directory (default: current)")
    p.add_argument("--quiet", action="store_true", default=d(False), help="suppress progress output")


def _rsa_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=5.0)
    p.add_argument("--cost", type=_cost, default=CostModel.per_feature(0.01, 0.01, 0.01),
                   help="flat:<c> or <shape>,<color>,<texture> (default 0.01,0.01,0.01)")
    p.add_argument("--grid-step", type=float, default=0.005, help="sweep grid step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="perspective-rsa", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    _globals(parser, top=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name: str, func: Callable, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        _globals(p, top=False)
        p.set_defaults(func=func)
        return p

    p = add("sweep", cmd_sweep, "resource-rational weight sweeps")
    p.add_argument("--side", choices=("speaker", "listener", "both"), default="both")
    p.add_argument("--beta", type=_floats, default=[0.1], help="comma-separated effort slopes")
    p.add_argument("--context", help="context JSON (default: reference context)")
    _rsa_flags(p)

    p = add("adapt", cmd_adapt, "listener adaptation to a scripted or model speaker")
    p.add_argument("--rounds", type=_nonneg_int, default=6)
    p.add_argument("--policy", type=_policy, default=SpeakerPolicy.shape_only(),
                   help="shape_only, exhaustive or model:<w>")
    p.add_argument("--beta", type=float, default=0.1)
    _rsa_flags(p)

    p = add("gen-synthetic", cmd_gen_synthetic, "synthetic trials or ratings for recovery checks")
    p.add_argument("--kind", choices=("trials", "ratings"), default="trials")
    p.add_argument("--model", default="occlusion_sensitive")
    p.add_argument("--alpha", type=float, default=DEFAULT_THETA.alpha)
    p.add_argument("--ws", type=float, default=DEFAULT_THETA.ws,
                   help="speaker weight (used by the mixture model only)")
    p.add_argument("--costs", type=_floats, default=list(DEFAULT_THETA[2:]), help="shape,color,texture")
    p.add_argument("--speakers", type=_pos_int, default=N_SPEAKERS)
    p.add_argument("--trials", type=_pos_int, default=TRIALS_PER_SPEAKER, help="trials per speaker")
    p.add_argument("--gap", type=float, default=5.0, help="true informativity gap (ratings)")

    p = add("fit", cmd_fit, "posterior sampling by Metropolis-Hastings")
    p.add_argument("--data", required=True, help="trials CSV")
    p.add_argument("--model", default="mixture")
    p.add_argument("--samples", type=_pos_int, default=1000)
    p.add_argument("--burn-in", type=_nonneg_int, default=1000)
    p.add_argument("--lag", type=_pos_int, default=1)
    p.add_argument("--proposal-frac", type=float, default=DEFAULT_PROPOSAL_FRAC,
                   help="random-walk step as a fraction of each prior range")
    p.add_argument("--ridge-step", type=float, default=DEFAULT_RIDGE_STEP)
    p.add_argument("--init", choices=("mode", "prior"), default="mode")
    p.add_argument("--adapt", action=argparse.BooleanOptionalAction, default=True,
                   help="tune step sizes during burn-in")
    p.add_argument("--predictive", action="store_true", help="also write posterior predictive features")

    p = add("evidence", cmd_evidence, "marginal likelihood by annealed importance sampling")
    p.add_argument("--data", required=True, help="trials CSV")
    p.add_argument("--model", default="mixture")
    p.add_argument("--runs", type=_pos_int, default=39)
    p.add_argument("--steps", type=_pos_int, default=10000)
    p.add_argument("--ridge-step", type=float, default=DEFAULT_RIDGE_STEP)

    p = add("bootstrap", cmd_bootstrap, "multi-stage bootstrap of rating informativity")
    p.add_argument("--data", required=True, help="ratings CSV")
    p.add_argument("--replicates", type=_pos_int, default=1000)
    p.add_argument("--level", type=float, default=0.95)

    p = add("check-theorem", cmd_check_theorem, "randomized check of the specificity inequality")
    p.add_argument("--n", type=_pos_int, default=10000)
    p.add_argument("--hypothesis", choices=HYPOTHESES, default="stated")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, ConfigError, BootstrapError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(e, FileNotFoundError) else EXIT_RUNTIME
    except (DegenerateEvidenceError, FloatingPointError, ArithmeticError) as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
