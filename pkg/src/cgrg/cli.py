"""Command-line front end.

Subcommands: generate, validate, measures, loglik, aep-sweep, wlln-sweep,
rate, encode, decode, oracle-f, report.  Every randomized subcommand needs
an explicit seed (flag or config key), all file writes are atomic, and a
given (config, seed) always reproduces byte-identical output.

Exit codes: 0 success, 1 validation findings, 2 bad config/arguments,
3 scaling-regime error, 4 I/O error, 5 uncodable/undecodable data.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import serialize
from .codec import CodedGraph, DecodeError, UncodableError, decode, encode
from .experiments import aep_sweep, mc_estimate_F, rate_scan, wlln_sweep
from .geometry import MetricMode, ball_volume
from .infotheory import (
    aep_limit,
    aep_statistic,
    code_length_bits,
    log_likelihood,
    loglik_decomposition,
)
from .measures import empirical_pair, measures_to_json
from .model import (
    Instance,
    ModelSpec,
    RegimeError,
    generate,
    instance_from_json,
    instance_to_json,
    validate,
)


class ConfigError(ValueError):
    """Bad configuration file or inconsistent command arguments."""


_CONFIG_KEYS = {
    "d", "alphabet", "nu", "lambda", "metric",
    "n", "ns", "reps", "seed", "epsilon", "tolerance", "out",
}


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = serialize.loads(fh.read())
    except OSError:
        raise
    except ValueError as exc:
        raise ConfigError(f"config {path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path}: expected a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"config {path}: unknown keys {sorted(unknown)}")
    return data


def spec_from_config(config: dict, metric_flag: str | None) -> ModelSpec:
    for key in ("d", "alphabet", "nu", "lambda"):
        if key not in config:
            raise ConfigError(f"config is missing required key {key!r}")
    metric = metric_flag or config.get("metric", "torus")
    try:
        return ModelSpec(
            d=int(config["d"]),
            alphabet=tuple(config["alphabet"]),
            nu=np.asarray(config["nu"], dtype=float),
            lam=np.asarray(config["lambda"], dtype=float),
            metric=MetricMode.parse(metric),
        )
    except RegimeError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid model configuration: {exc}") from None


def _need_seed(args, config: dict) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" in config:
        return int(config["seed"])
    raise ConfigError("this command is randomized: pass an explicit --seed")


def _need(value, config: dict, key: str, caster):
    if value is not None:
        return value
    if key in config:
        return caster(config[key])
    raise ConfigError(f"missing --{key} (flag or config key)")


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        serialize.write_atomic(out_path, text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _read_instance(path: str) -> Instance:
    with open(path) as fh:
        return instance_from_json(fh.read())


def _float_or_marker(x: float):
    if x == -math.inf:
        return "-inf"
    if x == math.inf:
        return "inf"
    return x


def _cmd_generate(args) -> int:
    config = load_config(args.config)
    spec = spec_from_config(config, args.metric)
    n = _need(args.n, config, "n", int)
    seed = _need_seed(args, config)
    instance = generate(spec, n, seed)
    _emit(instance_to_json(instance), args.out)
    return 0


def _cmd_validate(args) -> int:
    violations = validate(_read_instance(args.infile))
    _emit(serialize.dumps({"violations": violations}), args.out)
    return 0 if not violations else 1


def _cmd_measures(args) -> int:
    _emit(measures_to_json(empirical_pair(_read_instance(args.infile))), args.out)
    return 0


def _cmd_loglik(args) -> int:
    instance = _read_instance(args.infile)
    spec = instance.spec
    if spec.metric is MetricMode.CUBE:
        print(
            "warning: cube metric; the likelihood ignores boundary effects "
            "and is approximate",
            file=sys.stderr,
        )
    ll = log_likelihood(instance)
    doc = {
        "n": instance.n,
        "log_likelihood": _float_or_marker(ll),
        "aep_statistic": _float_or_marker(aep_statistic(instance)) if instance.n >= 2 else None,
        "aep_limit": aep_limit(spec.nu, spec.lam, spec.d),
        "neg_log2_likelihood_bits": _float_or_marker(-ll / math.log(2.0)),
        "code_length_bits": code_length_bits(instance.n, spec.nu, spec.lam, spec.d)
        if instance.n >= 2
        else None,
    }
    if ll == -math.inf:
        doc["diagnostic"] = "zero-probability instance: an edge uses a p=0 color pair"
    _emit(serialize.dumps(doc), args.out)
    return 0


def _sweep_common(args, sweep_fn, **extra) -> int:
    config = load_config(args.config)
    spec = spec_from_config(config, args.metric)
    ns = args.ns or config.get("ns")
    if ns is None:
        raise ConfigError("missing --ns (flag or config key)")
    if isinstance(ns, str):
        ns = [int(x) for x in ns.split(",") if x]
    ns = [int(x) for x in ns]
    reps = _need(args.reps, config, "reps", int)
    seed = _need_seed(args, config)
    result = sweep_fn(spec, ns, reps, seed, threads=args.threads, **extra)
    _emit(result.to_csv(), args.out)
    if args.json_out:
        serialize.write_atomic(args.json_out, result.to_json())
    return 0


def _cmd_aep_sweep(args) -> int:
    config = load_config(args.config)
    epsilon = args.epsilon if args.epsilon is not None else config.get("epsilon")
    return _sweep_common(args, aep_sweep, epsilon=epsilon)


def _cmd_wlln_sweep(args) -> int:
    return _sweep_common(args, wlln_sweep)


def _cmd_rate(args) -> int:
    config = load_config(args.config)
    spec = spec_from_config(config, args.metric)
    seed = _need_seed(args, config)
    tol = args.tol if args.tol is not None else float(config.get("tolerance", 1e-9))
    report = rate_scan(spec.nu, spec.lam, spec.d, args.trials, seed, tol=tol)
    _emit(serialize.dumps(report), args.out)
    return 0


def _cmd_encode(args) -> int:
    instance = _read_instance(args.infile)
    coded = encode(instance)
    if not args.out:
        raise ConfigError("encode requires --out for the coded file")
    serialize.write_atomic(args.out, coded.to_bytes())
    ll = log_likelihood(instance)
    summary = {
        "n": instance.n,
        "payload_bits": coded.payload_bits,
        "payload_bytes": len(coded.payload),
        "neg_log2_likelihood_bits": -ll / math.log(2.0),
    }
    sys.stdout.write(serialize.dumps(summary) + "\n")
    return 0


def _cmd_decode(args) -> int:
    try:
        with open(args.infile, "rb") as fh:
            coded = CodedGraph.from_bytes(fh.read())
    except OSError:
        raise
    colors, edges = decode(coded)
    doc = {
        "n": coded.n,
        "colors": colors.tolist(),
        "edges": edges.tolist(),
    }
    _emit(serialize.dumps(doc), args.out)
    return 0


def _cmd_oracle_f(args) -> int:
    seed = args.seed
    if seed is None:
        raise ConfigError("this command is randomized: pass an explicit --seed")
    mode = MetricMode.parse(args.metric or "torus")
    report = mc_estimate_F(args.d, args.t, mode, args.samples, seed)
    if mode is MetricMode.TORUS and args.t <= 0.5:
        report["exact_value"] = ball_volume(args.d) * args.t**args.d
    _emit(serialize.dumps(report), args.out)
    return 0


def _cmd_report(args) -> int:
    instance = _read_instance(args.infile)
    terms = loglik_decomposition(instance)
    lines = [
        f"{'term':<16}{'value':>24}",
        f"{'colors':<16}{terms['term_colors']:>24.12g}",
        f"{'edges':<16}{terms['term_edges']:>24.12g}",
        f"{'pairs':<16}{terms['term_pairs']:>24.12g}",
        f"{'diagonal':<16}{terms['term_diag']:>24.12g}",
        f"{'total':<16}{terms['total']:>24.12g}",
        f"{'statistic':<16}{terms['aep_statistic']:>24.12g}",
        f"{'limit':<16}{terms['aep_limit']:>24.12g}",
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        serialize.write_atomic(args.out, serialize.dumps(terms))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cgrg",
        description="Colored geometric random graph simulator and "
        "information-theory toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--out", help="output path (atomic write); stdout if omitted")
        return p

    def add_model_flags(p, seed_help="master seed (required for randomized runs)"):
        p.add_argument("--config", required=True, help="model config JSON")
        p.add_argument("--seed", type=int, help=seed_help)
        p.add_argument("--metric", choices=["torus", "cube"], help="override config metric")

    p = add("generate", _cmd_generate, help="sample an instance to JSON")
    add_model_flags(p)
    p.add_argument("--n", type=int, help="number of vertices")

    p = add("validate", _cmd_validate, help="brute-force re-check of an instance")
    p.add_argument("--in", dest="infile", required=True)

    p = add("measures", _cmd_measures, help="empirical sensor and link measures")
    p.add_argument("--in", dest="infile", required=True)

    p = add("loglik", _cmd_loglik, help="exact log-likelihood and AEP statistic")
    p.add_argument("--in", dest="infile", required=True)

    for name, fn in (("aep-sweep", _cmd_aep_sweep), ("wlln-sweep", _cmd_wlln_sweep)):
        p = add(name, fn, help=f"Monte Carlo {name.split('-')[0]} convergence sweep")
        add_model_flags(p)
        p.add_argument("--ns", help="comma-separated instance sizes")
        p.add_argument("--reps", type=int, help="replicates per size")
        p.add_argument("--threads", type=int, default=1, help="parallel workers")
        p.add_argument("--json", dest="json_out", help="also write aggregate JSON here")
        if name == "aep-sweep":
            p.add_argument(
                "--epsilon", type=float,
                help="fixed band half-width; default: half the predicted finite-n gap",
            )

    p = add("rate", _cmd_rate, help="randomized rate-function scan")
    add_model_flags(p)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument(
        "--tol", type=float,
        help="entrywise tolerance for the product-manifold membership test "
        "inside the speed-n rate (default 1e-9)",
    )

    p = add("encode", _cmd_encode, help="entropy-code colors and edges")
    p.add_argument("--in", dest="infile", required=True)

    p = add("decode", _cmd_decode, help="decode a coded graph file")
    p.add_argument("--in", dest="infile", required=True)

    p = add("oracle-f", _cmd_oracle_f, help="Monte Carlo pair-distance probability")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--metric", choices=["torus", "cube"])
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int)

    p = add("report", _cmd_report, help="term-by-term split of the AEP statistic")
    p.add_argument("--in", dest="infile", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RegimeError as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except (UncodableError, DecodeError) as exc:
        print(f"coding error: {exc}", file=sys.stderr)
        return 5


def console_main() -> None:
    sys.exit(main())
