"""Command-line entry point: ``screening <command> ...``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 runtime
failure (I/O, endpoint, dataset), 130 interrupted.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from .exceptions import ConfigurationError, ScreeningError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_INTERRUPTED = 130

log = logging.getLogger("screening")


def _staleness(text):
    # Wrapped in a tuple so that "unlimited" (None) differs from "not given".
    if text == "unlimited":
        return (None,)
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("staleness must be 'unlimited' or a nonnegative integer") from None
    if value < 0:
        raise argparse.ArgumentTypeError("staleness must be nonnegative")
    return (value,)


def _values(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(int(part))
        except ValueError:
            try:
                out.append(float(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"not a number: {part!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("need at least one value")
    return out


def _load_config(args):
    from .harness import ExperimentConfig

    cfg = ExperimentConfig.load(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.reps is not None:
        changes["replications"] = args.reps
    if args.out is not None:
        changes["output"] = args.out
    if args.workers is not None:
        changes["parallel.workers"] = args.workers
    if args.latency_ms_max is not None:
        changes["parallel.latency_ms_max"] = args.latency_ms_max
    if args.staleness is not None:
        changes["parallel.staleness"] = args.staleness[0]
    return cfg.replace(**changes) if changes else cfg


def _print_reports(reports, out):
    for rep in reports:
        axis = "" if rep.axis_value is None else f"{rep.axis_value}\t"
        out.write(f"{axis}{rep.metric}\t{rep.estimate:.4f}\t(se {rep.standard_error:.4f}, R={rep.R})\n")


def cmd_run(args, out):
    from .harness import run_experiment

    cfg = _load_config(args)
    _print_reports(run_experiment(cfg, jobs=args.jobs), out)


def cmd_sweep(args, out):
    from .harness import sweep

    cfg = _load_config(args)
    _print_reports(sweep(cfg, args.axis, args.values, jobs=args.jobs), out)


def cmd_estimate_means(args, out):
    from .harness import ProblemSpec, redundancy_truth

    spec = ProblemSpec(kind="redundancy", L=args.L, mode=args.mode, truth_reps=args.reps,
                       means_seed=args.seed, truth_cache=args.cache_dir)
    spec.validate()
    truth = redundancy_truth(spec)
    order = np.argsort(-truth.means, kind="stable")
    summary = {
        "k": int(truth.means.shape[0]),
        "reps": args.reps,
        "digest": truth.digest,
        "cache": truth.source,
        "max_standard_error": float(np.max(truth.standard_errors)),
        "top": [{"index": int(i), "mean": float(truth.means[i])} for i in order[:10]],
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "mean", "se"])
            for i, (mu, se) in enumerate(zip(truth.means, truth.standard_errors)):
                w.writerow([i, repr(float(mu)), repr(float(se))])
    json.dump(summary, out, indent=2)
    out.write("\n")


def cmd_enumerate(args, out):
    from .evaluators import enumerate_allocations

    allocs = enumerate_allocations(args.L, args.mode)
    fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else out
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index"] + [f"x{i}" for i in range(allocs.shape[1])])
        for i, row in enumerate(allocs):
            w.writerow([i] + row.tolist())
    finally:
        if args.out:
            fh.close()
    log.info("%d allocations", allocs.shape[0])


def cmd_collect(args, out):
    from .llm import LlmEndpointConfig, PromptTemplate, collect_dataset, laptop_template, load_catalog

    catalog = load_catalog(args.catalog)
    if args.template == "laptop":
        template = laptop_template(catalog.attribute_names)
    else:
        with open(args.template, encoding="utf-8") as fh:
            template = PromptTemplate.from_dict(json.load(fh))
    endpoint = LlmEndpointConfig(
        base_url=args.endpoint,
        model_name=args.model,
        temperature=args.temperature,
        max_retries=args.max_retries,
        discard_above=args.discard_above,
        timeout=args.timeout,
        dialect=args.dialect,
        api_key_env=args.api_key_env,
    )
    data = collect_dataset(endpoint, catalog, template, args.per_alt, args.out,
                           max_in_flight=args.max_in_flight)
    json.dump({"k": data.k, "per_alt": args.per_alt, "out": args.out}, out)
    out.write("\n")


def _read_stream(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("["):
        return np.asarray(json.loads(stripped), dtype=float)
    return np.asarray([float(tok) for tok in text.replace(",", " ").split()], dtype=float)


def cmd_oracle_analyze(args, out):
    from .oracle import analyze_stream

    values = _read_stream(args.stream)
    a = analyze_stream(values, args.n0, args.mu, args.boundary or (), args.radius or ())
    payload = {
        "horizon": a.horizon,
        "n0": a.n0,
        "finite_horizon": a.finite_horizon,
        "min_running_avg": a.min_running_avg,
        "argmin_index": a.argmin_index,
        "crossing_times": {str(b): n for b, n in a.crossing_times.items()},
        "last_exit": {str(r): n for r, n in a.last_exit.items()},
        "exit_beyond_horizon": {str(r): v for r, v in a.exit_beyond_horizon.items()},
    }
    json.dump(payload, out, indent=2)
    out.write("\n")


def cmd_oracle_estimate_c(args, out):
    from dataclasses import asdict

    from .oracle import crossing_excess_bound, estimate_C

    est = estimate_C(args.z, args.n0, reps=args.reps, horizon=args.horizon, rng=args.seed)
    payload = asdict(est)
    payload["excess_bound"] = crossing_excess_bound(args.z, args.n0)
    json.dump(payload, out, indent=2)
    out.write("\n")


def _experiment_flags(p):
    p.add_argument("config", help="experiment TOML file")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--reps", type=int, help="override the number of replications")
    p.add_argument("--out", help="results CSV (a .jsonl audit log is written beside it)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes across replications")
    p.add_argument("--workers", type=int, help="asynchronous workers q inside each run")
    p.add_argument("--latency-ms-max", type=float, help="upper end of the Uniform task latency")
    p.add_argument("--staleness", type=_staleness,
                   help="'unlimited' or the largest report lag a queued task may have")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="screening", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment")
    _experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run an experiment over values of one axis")
    _experiment_flags(p)
    p.add_argument("--axis", required=True,
                   choices=["k", "c", "alpha", "delta", "sigma", "m", "M_ratio", "q"])
    p.add_argument("--values", required=True, type=_values, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("estimate-means", help="estimate and cache redundancy allocation means")
    p.add_argument("--L", type=int, default=13)
    p.add_argument("--mode", choices=["at_most", "exact"], default="at_most")
    p.add_argument("--reps", type=int, default=30_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache-dir", default=".screening-cache")
    p.add_argument("--out", help="also write index,mean,se as CSV")
    p.set_defaults(func=cmd_estimate_means)

    p = sub.add_parser("enumerate-allocs", help="list feasible redundancy allocations")
    p.add_argument("--L", type=int, default=13)
    p.add_argument("--mode", choices=["at_most", "exact"], default="at_most")
    p.add_argument("--out")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("collect", help="collect a resampling dataset from a model endpoint")
    p.add_argument("--endpoint", required=True, help="API base URL")
    p.add_argument("--model", required=True)
    p.add_argument("--template", default="laptop", help="'laptop' or a JSON template file")
    p.add_argument("--catalog", default="36", help="laptop catalog size or a JSON levels file")
    p.add_argument("--per-alt", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dialect", choices=["openai", "ollama"], default="openai")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--max-retries", type=int, default=5)
    p.add_argument("--discard-above", type=float, default=6000.0)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--max-in-flight", type=int, default=8)
    p.add_argument("--api-key-env", default="SCREENING_API_KEY",
                   help="environment variable holding the API key")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("oracle", help="boundary-crossing oracle")
    osub = p.add_subparsers(dest="oracle_command", required=True)
    q = osub.add_parser("analyze", help="analyze one recorded stream")
    q.add_argument("--stream", required=True, help="file of numbers (whitespace/comma separated or JSON list)")
    q.add_argument("--n0", type=int, default=1)
    q.add_argument("--mu", type=float)
    q.add_argument("--boundary", type=float, action="append")
    q.add_argument("--radius", type=float, action="append")
    q.set_defaults(func=cmd_oracle_analyze)
    q = osub.add_parser("estimate-c", help="Monte Carlo expected first crossing time")
    q.add_argument("--z", type=float, required=True)
    q.add_argument("--n0", type=int, required=True)
    q.add_argument("--reps", type=int, default=10_000)
    q.add_argument("--horizon", type=int, default=1_000_000)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_oracle_estimate_c)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args, out)
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (ScreeningError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        return EXIT_INTERRUPTED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
