"""Monte Carlo comparison of quantized-data estimators.

Each run draws a fresh random system, input, and noise realization from a
per-run seed derived by hashing the base seed with the run index, then
scores every requested estimator against the true response. Five estimator
identifiers are recognized:

``BQGS``
    Gibbs-sampling posterior mean from the quantized record.
``SSML``
    Kernel-regularized estimate fed the quantized record directly.
``LS``
    Least squares fed the quantized record directly.
``SSML_NQ`` / ``LS_NQ``
    The same two baselines given the latent, non-quantized record; these
    oracles bound what quantization costs each method.

Runs are independent, so the record list is reproducible for any thread
count: worker threads only decide who computes which run, never what the
run contains.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import ls_estimate, ssml_estimate
from .errors import DomainError, EmptySummaryError, QsysidError, UndefinedScoreError
from .gibbs import ChainConfig, run_chain
from .io_utils import atomic_write_text, fmt17
from .quantizer import BinaryQuantizer, Quantizer
from .samplers import (
    SUBSTREAM_INPUT,
    SUBSTREAM_NOISE,
    SUBSTREAM_SYSTEM,
    RngHandle,
)
from .simulate import (
    generate_dataset,
    impulse_response,
    normalize_response,
    random_system,
    toeplitz_regressor,
    white_input,
)

ESTIMATORS = ("BQGS", "SSML", "LS", "SSML_NQ", "LS_NQ")

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """Finalizer of the splitmix64 generator; a bijective 64-bit mix."""
    z = x & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_run_seed(base_seed: int, run_index: int) -> int:
    """Per-run seed: splitmix64 stream seeded at the base, output
    ``run_index + 1``."""
    if run_index < 0:
        raise DomainError(f"run index must be non-negative, got {run_index}")
    return splitmix64((base_seed + (run_index + 1) * _GOLDEN) & _MASK64)


def fit_score(g_true: np.ndarray, g_est: np.ndarray) -> float:
    """Normalized fit on the impulse response.

    ``1 - ||g_true - g_est|| / ||g_true - mean(g_true)||``; equals 1 for a
    perfect estimate, 0 for predicting the constant mean, and is undefined
    for a constant true response.
    """
    g_true = np.asarray(g_true, dtype=np.float64)
    g_est = np.asarray(g_est, dtype=np.float64)
    if g_true.shape != g_est.shape or g_true.ndim != 1:
        raise DomainError(
            f"responses must be 1-d with equal shapes, got {g_true.shape}, {g_est.shape}"
        )
    if not np.all(np.isfinite(g_true)) or not np.all(np.isfinite(g_est)):
        raise DomainError("responses must be finite")
    denom = float(np.linalg.norm(g_true - g_true.mean()))
    if denom == 0.0:
        raise UndefinedScoreError("true response is constant; fit is undefined")
    return 1.0 - float(np.linalg.norm(g_true - g_est)) / denom


@dataclass(frozen=True)
class Protocol:
    """Benchmark description: data generation settings plus the estimator
    roster and chain configuration shared by all runs."""

    runs: int = 20
    samples: int = 500
    order: int = 50
    snr: float = 10.0
    quantizer: Quantizer = BinaryQuantizer(1.0)
    zero_pairs: int = 10
    pole_pairs: int = 10
    chain: ChainConfig = field(default_factory=ChainConfig)
    estimators: tuple[str, ...] = ESTIMATORS


@dataclass
class RunRecord:
    """Outcome of one run: per-estimator fit for the estimators that
    succeeded, wall time for every attempt, and the decay the chain used."""

    run_index: int
    seed: int
    fit: dict[str, float]
    wall_time_s: dict[str, float]
    beta_used: float | None = None


def run_single(protocol: Protocol, base_seed: int, run_index: int) -> RunRecord:
    """Execute one benchmark run.

    The per-run seed feeds fixed substreams (system, input, noise, chain),
    so any run can be regenerated in isolation.
    """
    seed = derive_run_seed(base_seed, run_index)
    tf = random_system(RngHandle(seed, SUBSTREAM_SYSTEM),
                       protocol.zero_pairs, protocol.pole_pairs)
    g_true = normalize_response(impulse_response(tf, protocol.order))
    u = white_input(protocol.samples, RngHandle(seed, SUBSTREAM_INPUT))
    dataset = generate_dataset(g_true, u, protocol.snr, protocol.quantizer,
                               RngHandle(seed, SUBSTREAM_NOISE))
    U = toeplitz_regressor(u, protocol.order)

    record = RunRecord(run_index=run_index, seed=seed, fit={}, wall_time_s={})
    for est in protocol.estimators:
        tic = time.perf_counter()
        try:
            if est == "BQGS":
                cfg = replace(protocol.chain, seed=seed, n=protocol.order)
                result = run_chain(dataset, protocol.quantizer, cfg)
                g_est = result.g_hat
                record.beta_used = result.beta_used
            elif est == "SSML":
                g_est = ssml_estimate(dataset.y, U).g
            elif est == "LS":
                g_est = ls_estimate(dataset.y, U).g
            elif est == "SSML_NQ":
                g_est = ssml_estimate(dataset.z_true, U).g
            elif est == "LS_NQ":
                g_est = ls_estimate(dataset.z_true, U).g
            else:
                raise DomainError(f"unknown estimator id {est!r}")
            record.fit[est] = fit_score(g_true, g_est)
        except QsysidError:
            if est not in ESTIMATORS:
                raise
            # estimator failed on this run; summary reports the count
        record.wall_time_s[est] = time.perf_counter() - tic
    return record


def run_monte_carlo(protocol: Protocol, base_seed: int, threads: int = 1) -> list[RunRecord]:
    """All runs of a protocol, ordered by run index.

    ``threads`` only sets the worker pool size; every run's content is a
    pure function of (protocol, base_seed, run_index), so results are
    identical for any thread count.
    """
    if protocol.runs < 1:
        raise DomainError(f"need at least one run, got {protocol.runs}")
    if threads < 1:
        raise DomainError(f"thread count must be >= 1, got {threads}")
    if len(protocol.estimators) == 0:
        raise DomainError("estimator roster must be non-empty")
    unknown = [e for e in protocol.estimators if e not in ESTIMATORS]
    if unknown:
        raise DomainError(f"unknown estimator ids {unknown!r}")
    indices = range(protocol.runs)
    if threads == 1:
        records = [run_single(protocol, base_seed, r) for r in indices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda r: run_single(protocol, base_seed, r), indices))
    records.sort(key=lambda rec: rec.run_index)
    return records


def summarize(records: list[RunRecord], estimator: str) -> dict:
    """Fit quartiles over the successful runs of one estimator.

    Quantiles use linear interpolation. With zero successes the quantile
    fields are None and only the failure count is informative; an empty
    record list is an error.
    """
    if len(records) == 0:
        raise EmptySummaryError("no run records to summarize")
    if estimator not in ESTIMATORS:
        raise DomainError(f"unknown estimator id {estimator!r}")
    values = np.asarray([r.fit[estimator] for r in records if estimator in r.fit])
    failures = sum(1 for r in records if estimator in r.wall_time_s) - len(values)
    if len(values) == 0:
        return {"q25": None, "median": None, "q75": None, "iqr": None,
                "failures": int(failures)}
    q25, med, q75 = (float(v) for v in np.quantile(values, [0.25, 0.5, 0.75]))
    return {"q25": q25, "median": med, "q75": q75, "iqr": q75 - q25,
            "failures": int(failures)}


def results_csv_text(records: list[RunRecord], estimators: tuple[str, ...],
                     timings: bool = False) -> str:
    """Render the per-run results table.

    One row per (run, estimator); failed fits leave the fit cell empty; the
    wall-time column is left empty unless ``timings`` is set, keeping the
    default output byte-reproducible.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["run", "seed", "estimator", "fit", "wall_time_s", "beta_used"])
    for rec in records:
        for est in estimators:
            fit = fmt17(rec.fit[est]) if est in rec.fit else ""
            wall = fmt17(rec.wall_time_s[est]) if timings and est in rec.wall_time_s else ""
            beta = fmt17(rec.beta_used) if est == "BQGS" and rec.beta_used is not None else ""
            writer.writerow([str(rec.run_index), str(rec.seed), est, fit, wall, beta])
    return buf.getvalue()


def summary_json_text(records: list[RunRecord], estimators: tuple[str, ...]) -> str:
    payload = {
        "runs": len(records),
        "estimators": {est: summarize(records, est) for est in estimators},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_results_csv(records, estimators, path, timings: bool = False) -> None:
    atomic_write_text(path, results_csv_text(records, estimators, timings))


def write_summary_json(records, estimators, path) -> None:
    atomic_write_text(path, summary_json_text(records, estimators))
