"""Command-line interface.

Three subcommands cover the workflow: ``simulate`` writes a quantized
dataset CSV, ``identify`` runs the sampler on a dataset CSV and writes the
estimated response, ``benchmark`` runs the Monte Carlo comparison and
writes per-run results plus a summary. Every command accepts ``--config``
with a JSON object mirroring its flags (flags win), and writes a manifest
JSON next to its outputs recording the fully resolved configuration, which
is sufficient to reproduce the outputs bit for bit.

Numeric output carries 17 significant digits. Wall-clock timings are only
written when ``--timings`` is given, because timing values are the one
thing that would differ between otherwise identical executions.

Exit codes: 0 success, 2 configuration problem, 3 file I/O problem,
4 data incompatible with the quantizer, 5 record too short for the
requested response length.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .benchmark import (
    ESTIMATORS,
    Protocol,
    run_monte_carlo,
    results_csv_text,
    summary_json_text,
)
from .errors import (
    ConfigError,
    DomainError,
    InsufficientDataError,
    InvalidLevelError,
    OutOfRangeError,
    QsysidError,
)
from .gibbs import ChainConfig, run_chain
from .io_utils import atomic_write_text, fmt17
from .quantizer import invalid_level_positions, parse_quantizer
from .samplers import (
    SUBSTREAM_INPUT,
    SUBSTREAM_NOISE,
    SUBSTREAM_SYSTEM,
    RngHandle,
)
from .simulate import (
    generate_dataset,
    impulse_response,
    load_dataset_csv,
    normalize_response,
    random_system,
    save_dataset_csv,
    white_input,
)


class _ExitWith(Exception):
    """Internal: carry an explicit exit code with a message."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsysid",
        description="Impulse-response identification from quantized output data.",
    )
    parser.add_argument("--version", action="version", version=f"qsysid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p):
        p.add_argument("--config", help="JSON file with the same keys as the flags")
        p.add_argument("--seed", type=int, help="base seed (64-bit unsigned)")
        p.add_argument("--threads", type=int, help="worker threads where applicable")
        p.add_argument("--out", help="output path")

    p = sub.add_parser("simulate", help="generate a quantized dataset CSV")
    p.add_argument("--samples", type=int, help="record length")
    p.add_argument("--snr", type=float, help="signal variance over noise variance")
    p.add_argument("--quantizer", help="binary:<c> | ceil | identity | custom:<q..>:<p..>")
    p.add_argument("--order", type=int, help="impulse response length")
    p.add_argument("--zero-pairs", type=int, dest="zero_pairs")
    p.add_argument("--pole-pairs", type=int, dest="pole_pairs")
    p.add_argument("--include-z", action="store_true", default=None, dest="include_z",
                   help="also write the latent pre-quantization column")
    shared(p)

    p = sub.add_parser("identify", help="estimate the impulse response from a dataset CSV")
    p.add_argument("data", help="input dataset CSV (t,u,y[,z])")
    p.add_argument("--quantizer", help="quantizer that produced the y column")
    p.add_argument("--order", type=int, help="impulse response length")
    p.add_argument("--iterations", type=int, help="total sampler iterations")
    p.add_argument("--burn-in", type=int, dest="burn_in", help="discarded initial iterations")
    p.add_argument("--beta", type=float, help="fix the kernel decay instead of estimating it")
    p.add_argument("--beta-grid", dest="beta_grid",
                   help="comma-separated decay candidates")
    shared(p)

    p = sub.add_parser("benchmark", help="Monte Carlo comparison of estimators")
    p.add_argument("--runs", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--order", type=int)
    p.add_argument("--snr", type=float)
    p.add_argument("--quantizer", help="quantizer applied to every run")
    p.add_argument("--zero-pairs", type=int, dest="zero_pairs")
    p.add_argument("--pole-pairs", type=int, dest="pole_pairs")
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", type=int, dest="burn_in")
    p.add_argument("--beta", type=float)
    p.add_argument("--estimators", help=f"comma-separated subset of {','.join(ESTIMATORS)}")
    p.add_argument("--timings", action="store_true", default=None,
                   help="write measured wall times (breaks byte-reproducibility)")
    shared(p)
    return parser


_DEFAULTS = {
    "simulate": {
        "samples": 500, "snr": 10.0, "quantizer": "binary:1", "order": 50,
        "zero_pairs": 10, "pole_pairs": 10, "include_z": False,
        "seed": 0, "threads": 1, "out": "dataset.csv",
    },
    "identify": {
        "quantizer": None, "order": 50, "iterations": 3000, "burn_in": 1000,
        "beta": None, "beta_grid": None,
        "seed": 0, "threads": 1, "out": "estimate.csv",
    },
    "benchmark": {
        "runs": 20, "samples": 500, "order": 50, "snr": 10.0,
        "quantizer": "binary:1", "zero_pairs": 10, "pole_pairs": 10,
        "iterations": 3000, "burn_in": 1000, "beta": None,
        "estimators": ",".join(ESTIMATORS), "timings": False,
        "seed": 0, "threads": 1, "out": "benchmark-out",
    },
}


def _resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults, overridden by the JSON config file, overridden by flags."""
    resolved = dict(_DEFAULTS[command])
    if args.config is not None:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise _ExitWith(3, f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(resolved))
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
        resolved.update(loaded)
    for key in resolved:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _coerce(cfg: dict, key: str, kind, minimum=None):
    value = cfg[key]
    if value is None:
        return None
    try:
        value = kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {key!r}: expected {kind.__name__}, got {value!r}") from exc
    if minimum is not None and value < minimum:
        raise ConfigError(f"config key {key!r}: must be >= {minimum}, got {value}")
    cfg[key] = value
    return value


def _parse_quantizer_cfg(text: str):
    if text is None:
        raise ConfigError("a quantizer must be given (flag --quantizer or config key)")
    try:
        return parse_quantizer(str(text))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _manifest(command: str, cfg: dict, artifacts: list[str]) -> str:
    payload = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "artifacts": artifacts,
    }
    return json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"


def _trace_summary(trace: np.ndarray, burn_in: int) -> dict:
    window = trace[burn_in:]
    q25, med, q75 = (float(v) for v in np.quantile(window, [0.25, 0.5, 0.75]))
    return {"mean": float(window.mean()), "q25": q25, "median": med, "q75": q75}


def _cmd_simulate(args) -> int:
    cfg = _resolve_config("simulate", args)
    samples = _coerce(cfg, "samples", int, 1)
    snr = _coerce(cfg, "snr", float)
    order = _coerce(cfg, "order", int, 1)
    zero_pairs = _coerce(cfg, "zero_pairs", int, 0)
    pole_pairs = _coerce(cfg, "pole_pairs", int, 0)
    include_z = bool(cfg["include_z"])
    seed = _coerce(cfg, "seed", int, 0)
    _coerce(cfg, "threads", int, 1)
    quantizer = _parse_quantizer_cfg(cfg["quantizer"])
    if snr is None or not np.isfinite(snr) or snr <= 0:
        raise ConfigError(f"snr must be finite and positive, got {cfg['snr']!r}")

    tf = random_system(RngHandle(seed, SUBSTREAM_SYSTEM), zero_pairs, pole_pairs)
    g = normalize_response(impulse_response(tf, order))
    u = white_input(samples, RngHandle(seed, SUBSTREAM_INPUT))
    dataset = generate_dataset(g, u, snr, quantizer, RngHandle(seed, SUBSTREAM_NOISE))

    out = str(cfg["out"])
    save_dataset_csv(dataset, out, include_z=include_z)
    atomic_write_text(out + ".manifest.json", _manifest("simulate", cfg, [os.path.basename(out)]))
    return 0


def _cmd_identify(args) -> int:
    cfg = _resolve_config("identify", args)
    order = _coerce(cfg, "order", int, 1)
    iterations = _coerce(cfg, "iterations", int, 1)
    burn_in = _coerce(cfg, "burn_in", int, 0)
    beta = _coerce(cfg, "beta", float)
    seed = _coerce(cfg, "seed", int, 0)
    _coerce(cfg, "threads", int, 1)
    quantizer = _parse_quantizer_cfg(cfg["quantizer"])
    beta_grid = cfg["beta_grid"]
    if isinstance(beta_grid, str):
        try:
            beta_grid = tuple(float(v) for v in beta_grid.split(",") if v.strip() != "")
        except ValueError as exc:
            raise ConfigError(f"cannot parse beta grid {cfg['beta_grid']!r}") from exc
    if iterations <= burn_in:
        raise ConfigError(
            f"iterations must exceed burn-in, got {iterations} and {burn_in}"
        )

    try:
        dataset = load_dataset_csv(args.data)
    except DomainError as exc:
        raise _ExitWith(3, f"cannot parse dataset: {exc}") from exc
    bad = invalid_level_positions(quantizer, dataset.y)
    if len(bad):
        rows = ", ".join(str(int(t)) for t in bad[:20])
        more = "" if len(bad) <= 20 else f" (and {len(bad) - 20} more)"
        raise _ExitWith(
            4,
            f"{len(bad)} rows hold levels the quantizer cannot produce: rows {rows}{more}",
        )

    chain = ChainConfig(
        iterations=iterations, burn_in=burn_in, n=order, beta=beta,
        beta_grid=beta_grid, seed=seed, store_traces=True,
    )
    result = run_chain(dataset, quantizer, chain)

    out = str(cfg["out"])
    lines = ["k,g_hat"] + [
        f"{k + 1},{fmt17(v)}" for k, v in enumerate(result.g_hat)
    ]
    atomic_write_text(out, "\n".join(lines) + "\n")

    diag = {
        "beta_used": result.beta_used,
        "lambda": _trace_summary(result.lambda_trace, burn_in),
        "sigma2": _trace_summary(result.sigma2_trace, burn_in),
    }
    if result.diagnostics is not None:
        diag["max_normalized_gap"] = result.diagnostics.max_normalized_gap
        diag["converged"] = result.diagnostics.converged
    manifest = {
        "command": "identify",
        "version": __version__,
        "config": {**cfg, "data": args.data},
        "artifacts": [os.path.basename(out)],
        "diagnostics": diag,
    }
    atomic_write_text(out + ".manifest.json",
                      json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return 0


def _cmd_benchmark(args) -> int:
    cfg = _resolve_config("benchmark", args)
    runs = _coerce(cfg, "runs", int, 1)
    samples = _coerce(cfg, "samples", int, 1)
    order = _coerce(cfg, "order", int, 1)
    snr = _coerce(cfg, "snr", float)
    zero_pairs = _coerce(cfg, "zero_pairs", int, 0)
    pole_pairs = _coerce(cfg, "pole_pairs", int, 0)
    iterations = _coerce(cfg, "iterations", int, 1)
    burn_in = _coerce(cfg, "burn_in", int, 0)
    beta = _coerce(cfg, "beta", float)
    seed = _coerce(cfg, "seed", int, 0)
    threads = _coerce(cfg, "threads", int, 1)
    timings = bool(cfg["timings"])
    quantizer = _parse_quantizer_cfg(cfg["quantizer"])
    if snr is None or not np.isfinite(snr) or snr <= 0:
        raise ConfigError(f"snr must be finite and positive, got {cfg['snr']!r}")
    if iterations <= burn_in:
        raise ConfigError(
            f"iterations must exceed burn-in, got {iterations} and {burn_in}"
        )
    estimators = tuple(e.strip() for e in str(cfg["estimators"]).split(",") if e.strip())
    unknown = [e for e in estimators if e not in ESTIMATORS]
    if unknown:
        raise ConfigError(
            f"unknown estimators {', '.join(unknown)}; choose from {', '.join(ESTIMATORS)}"
        )
    if not estimators:
        raise ConfigError("estimator roster must be non-empty")

    protocol = Protocol(
        runs=runs, samples=samples, order=order, snr=snr, quantizer=quantizer,
        zero_pairs=zero_pairs, pole_pairs=pole_pairs,
        chain=ChainConfig(iterations=iterations, burn_in=burn_in, n=order, beta=beta),
        estimators=estimators,
    )
    records = run_monte_carlo(protocol, seed, threads=threads)

    out_dir = str(cfg["out"])
    os.makedirs(out_dir, exist_ok=True)
    atomic_write_text(os.path.join(out_dir, "results.csv"),
                      results_csv_text(records, estimators, timings=timings))
    atomic_write_text(os.path.join(out_dir, "summary.json"),
                      summary_json_text(records, estimators))
    atomic_write_text(os.path.join(out_dir, "manifest.json"),
                      _manifest("benchmark", cfg, ["results.csv", "summary.json"]))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {"simulate": _cmd_simulate, "identify": _cmd_identify,
               "benchmark": _cmd_benchmark}[args.command]
    try:
        return handler(args)
    except _ExitWith as exc:
        print(f"qsysid: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"qsysid: {exc}", file=sys.stderr)
        return 2
    except (InvalidLevelError, OutOfRangeError) as exc:
        print(f"qsysid: {exc}", file=sys.stderr)
        return 4
    except InsufficientDataError as exc:
        print(f"qsysid: {exc}", file=sys.stderr)
        return 5
    except OSError as exc:
        print(f"qsysid: {exc}", file=sys.stderr)
        return 3
    except QsysidError as exc:
        print(f"qsysid: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
