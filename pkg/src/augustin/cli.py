"""Command-line interface: ``augustin {channel,divergence,mean,info,capacity,gaussian}``.

Channels come from a JSON document or a preset such as ``preset:bsc?delta=0.1``.
Numbers are printed with 12 significant digits in nats; ``--bits`` rescales
information values for display only.  Capacity commands write CSV with the
fixed header ``parameter,value,lambda_star,converged``.

Exit codes: 0 success, 2 invalid input, 3 infinite divergence with
``--finite-required``, 4 solver did not converge, 5 infeasible cost
constraint, 6 cost constraint on the boundary of the feasible set.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence
from urllib.parse import parse_qsl

import numpy as np

from . import gaussian_analytic as ga
from .augustin_mean import solve_augustin_mean
from .capacity_solvers import (
    BoundaryConstraintError,
    CapacityResult,
    InfeasibleConstraintError,
    al_capacity,
    augustin_capacity_unconstrained,
    capacity_lambda_curve,
    cost_constrained_capacities,
)
from .core_model import Channel, CostSpec, Prob, ValidationError, bsc, identity_channel
from .pathological_examples import AFFINE_ARCS, build_affine_example, build_nonusc_example
from .renyi_divergence import renyi_divergence, tilted_measure

SCHEMA = 1
EXIT_OK, EXIT_INPUT, EXIT_INFINITE, EXIT_UNCONVERGED, EXIT_INFEASIBLE, EXIT_BOUNDARY = 0, 2, 3, 4, 5, 6
CHANNEL_FIELDS = {"schema", "name", "inputs", "outputs", "rows", "cost", "metadata"}
DIST_FIELDS = {"schema", "kind", "name", "labels", "weights", "metadata"}
CSV_HEADER = ("parameter", "value", "lambda_star", "converged")
MAX_PRESET_INPUTS = 5000
# the dual search certifies its gap to this by default; see the capacity help text
CLI_DUAL_TOL = 1e-7
BOUNDARY_HINT = (
    "on the non-upper-semicontinuous shift channel (preset:nonusc) C(0) = ln(3/2) "
    "while inf over lambda of C^lambda is ln 2"
)


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def fmt_vec(v) -> str:
    return " ".join(fmt(t) for t in np.atleast_1d(v))


class Display:
    """Scales information values (nats) for printing."""

    def __init__(self, bits: bool):
        self.scale = 1 / math.log(2) if bits else 1.0
        self.unit = "bits" if bits else "nats"

    def info(self, x: float) -> str:
        return fmt(float(x) * self.scale)


# ---------------------------------------------------------------------------
# loading


def _read_json(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise CliError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise CliError(f"{path}: top level must be an object")
    if doc.get("schema") != SCHEMA:
        raise CliError(f'{path}: expected "schema": {SCHEMA}')
    return doc


def _reject_unknown(doc: dict, allowed: set, where: str) -> None:
    extra = sorted(set(doc) - allowed)
    if extra:
        raise CliError(f"{where}: unknown fields {extra}")


class Source:
    """A loaded channel with its optional cost and a name."""

    def __init__(self, name: str, W: Channel, cost: CostSpec | None, metadata: dict | None = None):
        self.name, self.W, self.cost, self.metadata = name, W, cost, metadata or {}


def channel_document(src: Source) -> dict:
    doc = {
        "schema": SCHEMA,
        "name": src.name,
        "inputs": [_json_label(v) for v in src.W.inputs],
        "outputs": [_json_label(v) for v in src.W.outputs],
        "rows": src.W.rows.tolist(),
    }
    if src.cost is not None:
        doc["cost"] = src.cost.costs.tolist()
    if src.metadata:
        doc["metadata"] = src.metadata
    return doc


def _json_label(v):
    if isinstance(v, (str, bool)) or v is None:
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return str(v)


def load_channel_document(doc: dict, where: str) -> Source:
    _reject_unknown(doc, CHANNEL_FIELDS, where)
    for key in ("name", "rows"):
        if key not in doc:
            raise CliError(f'{where}: missing "{key}"')
    W = Channel(doc["rows"], doc.get("inputs"), doc.get("outputs"))
    cost = None
    if doc.get("cost") is not None:
        cost = CostSpec(doc["cost"])
        cost.check(W)
    meta = doc.get("metadata") or {}
    if not isinstance(meta, dict):
        raise CliError(f"{where}: metadata must be an object")
    return Source(str(doc["name"]), W, cost, meta)


def _preset_params(query: str, allowed: dict) -> dict:
    out = dict(allowed)
    for key, value in parse_qsl(query, keep_blank_values=True, strict_parsing=bool(query)):
        if key not in allowed:
            raise CliError(f"unknown preset parameter {key!r}; expected one of {sorted(allowed)}")
        try:
            out[key] = type(allowed[key])(value)
        except ValueError as e:
            raise CliError(f"preset parameter {key}={value!r} is not a {type(allowed[key]).__name__}") from e
    return out


def load_preset(spec: str, seed: int) -> Source:
    body = spec[len("preset:"):]
    kind, _, query = body.partition("?")
    if kind == "bsc":
        p = _preset_params(query, {"delta": 0.1})
        return Source(f"bsc(delta={p['delta']})", bsc(p["delta"]), None, {"preset": spec})
    if kind == "identity":
        p = _preset_params(query, {"n": 4})
        return Source(f"identity(n={p['n']})", identity_channel(p["n"]), None, {"preset": spec})
    if kind == "affine":
        p = _preset_params(query, {"N": 3})
        _check_affine_size(p["N"])
        W, c = build_affine_example(p["N"])
        return Source(f"affine(N={p['N']})", W, c, {"preset": spec})
    if kind == "nonusc":
        p = _preset_params(query, {"N": 4, "neg": 30})
        if 2 ** (p["N"] + 2) + 2 * p["neg"] > MAX_PRESET_INPUTS:
            raise CliError(f"preset:nonusc with N={p['N']} exceeds {MAX_PRESET_INPUTS} inputs")
        W, c = build_nonusc_example(p["N"], p["neg"])
        return Source(f"nonusc(N={p['N']},neg={p['neg']})", W, c, {"preset": spec})
    if kind == "gauss-disc":
        p = _preset_params(query, {"sigma2": 1.0, "cells": 1600, "range": 8.0, "inputs": 41, "input_range": 4.0})
        pts = np.linspace(-p["input_range"], p["input_range"], p["inputs"])
        W, c = ga.discretize_scalar_gaussian(p["sigma2"], pts, (-p["range"], p["range"]), p["cells"])
        return Source(f"gauss-disc(sigma2={p['sigma2']},cells={p['cells']})", W, c, {"preset": spec})
    if kind == "random":
        p = _preset_params(query, {"nx": 4, "ny": 3, "cost": 1})
        rng = np.random.default_rng(seed)
        W = Channel(rng.dirichlet(np.ones(p["ny"]), p["nx"]))
        c = CostSpec(rng.uniform(0, 1, (p["nx"], p["cost"]))) if p["cost"] > 0 else None
        return Source(f"random(nx={p['nx']},ny={p['ny']},seed={seed})", W, c, {"preset": spec, "seed": seed})
    raise CliError(f"unknown preset {kind!r}; expected bsc, identity, affine, nonusc, gauss-disc or random")


def _check_affine_size(N: int) -> None:
    if N < 1:
        raise CliError("preset:affine needs N >= 1")
    # untabulated classes use a chain of ceil(10 e^(i+1)) shifts
    estimate = sum(AFFINE_ARCS.get(i, math.ceil(10 * math.exp(i + 1))) for i in range(N + 1))
    if estimate > MAX_PRESET_INPUTS:
        raise CliError(f"preset:affine with N={N} needs about {estimate} inputs, above {MAX_PRESET_INPUTS}")


def load_source(spec: str, seed: int) -> Source:
    if spec.startswith("preset:"):
        return load_preset(spec, seed)
    return load_channel_document(_read_json(spec), spec)


def load_distribution(spec: str, n: int, where: str, *, seed: int = 0, cost: CostSpec | None = None,
                      labels=None) -> Prob:
    """``uniform``, ``random``, ``cost=k``, comma-separated weights or a distribution JSON file."""
    if spec == "uniform":
        return Prob(np.full(n, 1.0 / n), labels)
    if spec == "random":
        return Prob(np.random.default_rng(seed).dirichlet(np.ones(n)), labels)
    if spec.startswith("cost="):
        if cost is None:
            raise CliError(f"{where}: cost=k needs a channel with a cost")
        try:
            k = float(spec[5:])
        except ValueError as e:
            raise CliError(f"{where}: bad cost level {spec[5:]!r}") from e
        mask = np.isclose(cost.costs[:, 0], k, rtol=0, atol=1e-12)
        if not mask.any():
            raise CliError(f"{where}: no input has cost {fmt(k)}")
        return Prob(mask / mask.sum(), labels)
    if Path(spec).suffix == ".json" or Path(spec).exists():
        doc = _read_json(spec)
        _reject_unknown(doc, DIST_FIELDS, spec)
        if doc.get("kind", "distribution") != "distribution" or "weights" not in doc:
            raise CliError(f'{spec}: expected a distribution document with "weights"')
        w = doc["weights"]
    else:
        try:
            w = [float(t) for t in spec.split(",")]
        except ValueError as e:
            raise CliError(f"{where}: expected uniform, random, cost=k, weights or a JSON file") from e
    if len(w) != n:
        raise CliError(f"{where}: expected {n} weights, got {len(w)}")
    return Prob(w, labels)


def distribution_document(p: Prob, name: str, metadata: dict) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "distribution",
        "name": name,
        "labels": [_json_label(v) for v in p.labels],
        "weights": p.weights.tolist(),
        "metadata": metadata,
    }


def _write_json(path: str, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def parse_grid(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:count`` (inclusive, evenly spaced)."""
    try:
        if ":" in text:
            a, b, k = text.split(":")
            return [float(v) for v in np.linspace(float(a), float(b), int(k))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise CliError(f"bad grid {text!r}; use a,b,c or start:stop:count") from e


def parse_levels(text: str, dim: int) -> list[np.ndarray]:
    """Scalar levels ``a,b`` for one cost; vector levels ``a,b;c,d`` otherwise."""
    if dim == 1:
        return [np.array([v]) for v in parse_grid(text)]
    out = []
    for part in text.split(";"):
        v = parse_grid(part)
        if len(v) != dim:
            raise CliError(f"each constraint needs {dim} components separated by commas, got {part!r}")
        out.append(np.array(v))
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_channel(args, out) -> int:
    src = load_source(args.channel, args.seed)
    print(f"name: {src.name}", file=out)
    print(f"inputs: {src.W.n_inputs}", file=out)
    print(f"outputs: {src.W.n_outputs}", file=out)
    print(f"cost_dimension: {0 if src.cost is None else src.cost.dim}", file=out)
    if args.out:
        _write_json(args.out, channel_document(src))
        print(f"written: {args.out}", file=out)
    return EXIT_OK


def cmd_divergence(args, out, disp: Display) -> int:
    src = load_source(args.channel, args.seed)
    W = src.W
    if not 0 <= args.row < W.n_inputs:
        raise CliError(f"--row must lie in [0, {W.n_inputs - 1}]")
    w = W.row(args.row)
    if args.q.startswith("mean:"):
        P = load_distribution(args.q[5:], W.n_inputs, "--q mean:", seed=args.seed, cost=src.cost, labels=W.inputs)
        sol = solve_augustin_mean(args.alpha, P, W)
        if not sol.converged and not args.allow_unconverged:
            raise CliError("Augustin mean did not converge", EXIT_UNCONVERGED)
        q = sol.mean
    else:
        q = load_distribution(args.q, W.n_outputs, "--q", seed=args.seed, labels=W.outputs)
    d = renyi_divergence(args.alpha, w, q)
    print(f"divergence: {disp.info(d)}", file=out)
    print(f"unit: {disp.unit}", file=out)
    if args.tilted:
        if not d.finite:
            print("tilted: undefined (infinite divergence)", file=out)
        else:
            print(f"tilted: {fmt_vec(tilted_measure(args.alpha, w, q).weights)}", file=out)
    if args.finite_required and not d.finite:
        print("error: divergence is infinite", file=sys.stderr)
        return EXIT_INFINITE
    return EXIT_OK


def cmd_mean(args, out, disp: Display) -> int:
    src = load_source(args.channel, args.seed)
    W = src.W
    P = load_distribution(args.p, W.n_inputs, "--p", seed=args.seed, cost=src.cost, labels=W.inputs)
    sol = solve_augustin_mean(args.alpha, P, W, tol=args.tol, max_iter=args.max_iter)
    print(f"info: {disp.info(sol.info)}", file=out)
    print(f"unit: {disp.unit}", file=out)
    print(f"iterations: {sol.iterations}", file=out)
    print(f"residual: {fmt(sol.residual)}", file=out)
    print(f"converged: {str(sol.converged).lower()}", file=out)
    if args.command == "mean":
        print(f"mean: {fmt_vec(sol.mean.weights)}", file=out)
    if args.out:
        meta = {"channel": src.name, "alpha": args.alpha, "p": args.p, "info": sol.info,
                "iterations": sol.iterations, "converged": sol.converged}
        _write_json(args.out, distribution_document(sol.mean, f"augustin mean of {src.name}", meta))
        print(f"written: {args.out}", file=out)
    if not sol.converged and not args.allow_unconverged:
        print("error: Augustin mean did not converge", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


def _need_cost(src: Source) -> CostSpec:
    if src.cost is None:
        raise CliError(f"channel {src.name} has no cost; --rho and --lambda need one")
    return src.cost


def _row(parameter, res: CapacityResult, lam_star) -> tuple:
    return parameter, res.value, lam_star, res.converged


def _capacity_rows(args, src: Source) -> list[tuple]:
    W = src.W
    tol = args.tol
    if args.sweep == "order":
        if not args.grid:
            raise CliError("--sweep order needs --grid")
        rows = []
        for a in sorted(parse_grid(args.grid)):
            rows.extend((a, v, l, ok) for _, v, l, ok in _fixed_order_rows(a, args, src, tol))
        return rows
    if args.sweep == "lambda":
        if not args.grid:
            raise CliError("--sweep lambda needs --grid")
        cost = _need_cost(src)
        return [(r.parameter, r.value, r.lambda_star, r.converged)
                for r in capacity_lambda_curve(args.alpha, W, cost, parse_grid(args.grid), min(tol, 1e-10))]
    if args.sweep == "cost":
        if not args.grid:
            raise CliError("--sweep cost needs --grid")
        args = argparse.Namespace(**{**vars(args), "rho": args.grid, "lambda_": None})
    return _fixed_order_rows(args.alpha, args, src, tol)


def _fixed_order_rows(alpha, args, src: Source, tol: float) -> list[tuple]:
    W = src.W
    if args.rho is not None:
        cost = _need_cost(src)
        levels = sorted(parse_levels(args.rho, cost.dim), key=lambda v: tuple(v))
        results = cost_constrained_capacities(alpha, W, cost, levels, tol=tol)
        return [_row(_param(r), res, _param(res.dual_multiplier)) for r, res in zip(levels, results)]
    if args.lambda_ is not None:
        cost = _need_cost(src)
        lams = parse_levels(args.lambda_, cost.dim)
        lams.sort(key=lambda v: tuple(v))
        return [_row(_param(l), al_capacity(alpha, W, l if cost.dim > 1 else float(l[0]), cost, min(tol, 1e-10)),
                     _param(l)) for l in lams]
    res = augustin_capacity_unconstrained(alpha, W, min(tol, 1e-10))
    return [_row(alpha, res, None)]


def _param(v):
    v = np.atleast_1d(v)
    return float(v[0]) if v.size == 1 else v


def cmd_capacity(args, out, disp: Display) -> int:
    src = load_source(args.channel, args.seed)
    try:
        rows = _capacity_rows(args, src)
    except InfeasibleConstraintError as e:
        raise CliError(str(e), EXIT_INFEASIBLE) from e
    except BoundaryConstraintError as e:
        raise CliError(f"{e}; {BOUNDARY_HINT}", EXIT_BOUNDARY) from e
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for parameter, value, lam, ok in rows:
        p = fmt_vec(parameter) if isinstance(parameter, np.ndarray) else fmt(parameter)
        l = "" if lam is None else (fmt_vec(lam) if isinstance(lam, np.ndarray) else fmt(lam))
        writer.writerow((p, disp.info(value), l, str(bool(ok)).lower()))
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        out.write(text)
    if not all(ok for *_, ok in rows) and not args.allow_unconverged:
        print("error: a capacity solve did not certify its tolerance", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


def cmd_gaussian(args, out, disp: Display) -> int:
    a, s2 = args.alpha, args.sigma2
    if args.parallel:
        if args.rho is None:
            raise CliError("--parallel needs --rho")
        variances = parse_grid(args.parallel)
        res = ga.parallel_waterfill(a, variances, args.rho)
        print(f"capacity: {disp.info(res.capacity)}", file=out)
        print(f"lambda: {fmt(res.lam)}", file=out)
        print(f"allocations: {fmt_vec(res.allocations)}", file=out)
        print(f"center_variances: {fmt_vec(res.center_variances)}", file=out)
        print(f"unit: {disp.unit}", file=out)
        return EXIT_OK
    if (args.rho is None) == (args.lambda_ is None):
        raise CliError("give exactly one of --rho and --lambda (or --parallel with --rho)")
    if args.rho is not None:
        rho = args.rho
        print(f"capacity: {disp.info(ga.scalar_capacity(a, s2, rho))}", file=out)
        print(f"theta: {fmt(ga.scalar_center_variance(a, s2, rho))}", file=out)
        print(f"derivative: {fmt(ga.scalar_capacity_derivative(a, s2, rho))}", file=out)
    else:
        lam = args.lambda_
        print(f"al_capacity: {disp.info(ga.scalar_al_capacity(a, s2, lam))}", file=out)
        print(f"theta: {fmt(ga.scalar_al_center_variance(a, s2, lam))}", file=out)
        print(f"derivative: {fmt(ga.al_capacity_derivative(a, s2, lam))}", file=out)
    if args.discretize:
        if args.rho is None:
            raise CliError("--discretize compares the information at N(0, rho); give --rho")
        cells, half = args.discretize
        if int(cells) != cells:
            raise CliError("--discretize CELLS must be an integer")
        rep = ga.gaussian_bridge(a, s2, args.rho, int(cells), half, args.inputs, args.input_range)
        print(f"numeric_info: {disp.info(rep.numeric)}", file=out)
        print(f"closed_form_info: {disp.info(rep.closed_form)}", file=out)
        print(f"gap: {disp.info(rep.gap)}", file=out)
    print(f"unit: {disp.unit}", file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from e
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"{text!r} must be positive and finite")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--bits", action="store_true", help="display information values in bits")
    common.add_argument("--seed", type=int, default=0, help="seed for random presets and --p random")
    common.add_argument("--out", help="write the JSON document or CSV table to this path")
    common.add_argument("--allow-unconverged", action="store_true", help="exit 0 even if a solver did not converge")

    parser = argparse.ArgumentParser(prog="augustin", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("channel", parents=[common], help="describe a channel and optionally export its JSON")
    p.add_argument("channel", help="JSON file or preset:NAME?key=value")

    p = sub.add_parser("divergence", parents=[common], help="Renyi divergence of one row from a distribution")
    p.add_argument("channel")
    p.add_argument("--alpha", type=_positive_float, required=True)
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--q", default="uniform", help="uniform, random, weights, a JSON file or mean:P (the Augustin mean of P)")
    p.add_argument("--tilted", action="store_true", help="also print the tilted measure")
    p.add_argument("--finite-required", action="store_true", help="exit 3 when the divergence is infinite")

    for name, text in (("mean", "Augustin mean and information"), ("info", "Augustin information")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("channel")
        p.add_argument("--alpha", type=_positive_float, required=True)
        p.add_argument("--p", default="uniform", help="uniform, random, cost=k, weights or a JSON file")
        p.add_argument("--tol", type=_positive_float, default=1e-12)
        p.add_argument("--max-iter", type=int, default=10000)

    p = sub.add_parser("capacity", parents=[common], help="Augustin, A-L or cost-constrained capacity as CSV")
    p.add_argument("channel")
    p.add_argument("--alpha", type=_positive_float, default=1.0)
    p.add_argument("--lambda", dest="lambda_", help="multipliers a,b (vectors a,b;c,d for several costs)")
    p.add_argument("--rho", help="cost constraints a,b (vectors a,b;c,d for several costs)")
    p.add_argument("--sweep", choices=("order", "cost", "lambda"))
    p.add_argument("--grid", help="sweep grid a,b,c or start:stop:count")
    p.add_argument("--tol", type=_positive_float, default=CLI_DUAL_TOL,
                   help=f"certified gap for cost constraints (default {CLI_DUAL_TOL}); inner solves use min(tol, 1e-10)")

    p = sub.add_parser("gaussian", parents=[common], help="closed forms for scalar and parallel Gaussian channels")
    p.add_argument("--alpha", type=_positive_float, required=True)
    p.add_argument("--sigma2", type=_positive_float, default=1.0)
    p.add_argument("--rho", type=_positive_float)
    p.add_argument("--lambda", dest="lambda_", type=_positive_float)
    p.add_argument("--parallel", help="noise variances s1,s2,... of parallel channels")
    p.add_argument("--discretize", nargs=2, type=_positive_float, metavar=("CELLS", "RANGE"),
                   help="cross-check on a CELLS-cell quantization of [-RANGE, RANGE]")
    p.add_argument("--inputs", type=int, default=41, help="input grid size for --discretize")
    p.add_argument("--input-range", type=_positive_float, default=4.0)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    disp = Display(getattr(args, "bits", False))
    try:
        if args.command == "channel":
            return cmd_channel(args, out)
        if args.command == "divergence":
            return cmd_divergence(args, out, disp)
        if args.command in ("mean", "info"):
            return cmd_mean(args, out, disp)
        if args.command == "capacity":
            return cmd_capacity(args, out, disp)
        return cmd_gaussian(args, out, disp)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
