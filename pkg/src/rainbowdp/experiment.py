"""Measurement-vs-theory experiments and their reports."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, kernels, theory
from .core import ConfigError, SpaceParams
from .offline import build_tables, generate_start_points
from .online import SearchOutcome, batch_search
from .theory import TheoryInputs

log = logging.getLogger(__name__)

SCHEMA = "rainbowdp-report/1"
CSV_FIELDS = ("target", "found", "invocations", "alarms", "false_alarms", "iteration_found")
FIELDS = ("precomp_invocations", "chains_stored", "success_rate", "mean_online_invocations", "mean_false_alarms")

REFERENCE_PARAMS = SpaceParams.create(n_bits=24, k_bits=9, c=1.8, l=1, m0_tilde=262144, seed=0)
REFERENCE_TARGETS = 3000
# column-count check: N = 2^20, t = 128, m0_tilde * t / N = 8; c = 3 keeps column 2t inside the bound
COLUMN_PARAMS = SpaceParams.create(n_bits=20, k_bits=7, c=3.0, l=1, m0_tilde=65536, seed=0)


@dataclass
class ExperimentReport:
    config: dict
    measured: dict
    predicted: dict
    relative_deltas: dict
    n_targets: int
    target_seed: int
    elapsed_s: float = 0.0
    outcomes: list[SearchOutcome] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "schema": SCHEMA,
            "config": self.config,
            "n_targets": self.n_targets,
            "target_seed": self.target_seed,
            "measured": self.measured,
            "predicted": self.predicted,
            "relative_deltas": self.relative_deltas,
        }


def make_targets(N: int, n_bits: int, fid: int, n: int, seed: int):
    """``n`` uniform pre-images x drawn from ``seed`` and their images y = f(x)."""
    xs = np.random.default_rng(seed).integers(0, N, size=n, dtype=np.int64)
    return xs, kernels.evaluate_many(xs, fid, n_bits)


def predict(params: SpaceParams) -> dict:
    ti = TheoryInputs.from_params(params)
    m0 = params.m0_tilde * -math.expm1(-params.c)
    return {
        # surviving chains cost t steps on average; discarded ones are folded in
        "precomp_invocations": params.l * m0 * params.t,
        "chains_stored": params.l * m0,
        "success_rate": theory.success_prob(ti),
        "mean_online_invocations": theory.expected_online_time(ti),
        "mean_false_alarms": theory.expected_total_false_alarms(ti),
    }


def _deltas(measured, predicted):
    return {k: (measured[k] - predicted[k]) / predicted[k] if predicted[k] else math.nan for k in FIELDS}


def run_experiment(params: SpaceParams, n_targets: int, target_seed: int = 1, workers: int = 1,
                   early_break: bool = False, tables=None, success: str = "planted") -> ExperimentReport:
    """Build the tables (unless given), search ``n_targets`` images and compare with theory.

    Targets are y = f(x) for uniform x.  With ``success="planted"`` a search
    succeeds only by recovering its own x, which is the event the success
    model describes (x lies in the matrix).  With ``success="any"`` any
    pre-image of y ends the search.  Both rates are reported either way.
    """
    if n_targets < 1:
        raise ConfigError("n_targets must be >= 1")
    if success not in ("planted", "any"):
        raise ConfigError(f"unknown success mode {success!r}")
    t0 = time.perf_counter()
    if tables is None:
        tables = build_tables(params, workers)
    xs, targets = make_targets(params.N, params.n_bits, params.fid, n_targets, target_seed)
    outcomes, stats = batch_search(
        targets, tables, workers=workers, early_break=early_break,
        planted=xs if success == "planted" else None,
    )
    measured = {
        "precomp_invocations": sum(tb.precomp_invocations for tb in tables),
        "chains_stored": sum(tb.m0 for tb in tables),
        "success_rate": stats.success_rate,
        "mean_online_invocations": stats.mean_invocations,
        "mean_false_alarms": stats.mean_false_alarms,
        "any_preimage_rate": stats.any_preimage_rate,
    }
    predicted = predict(params)
    cfg = asdict(params) | {"N": params.N, "t": params.t, "early_break": early_break, "success": success}
    return ExperimentReport(
        cfg, measured, predicted, _deltas(measured, predicted), n_targets, target_seed,
        time.perf_counter() - t0, outcomes,
    )


def write_summary(report: ExperimentReport, path) -> None:
    Path(path).write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")


def write_targets_csv(outcomes: list[SearchOutcome], path, hex_width: int = 0) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for o in outcomes:
            w.writerow([
                format(o.target, f"0{hex_width}x"),
                int(o.success),
                o.counters.f_invocations,
                o.counters.alarms,
                o.counters.false_alarms,
                o.found_at[1] if o.found_at else "",
            ])


@dataclass
class ColumnCheck:
    column: int
    measured_before: int
    predicted_before: float
    measured_after: int
    predicted_after: float

    @property
    def rel_err_before(self) -> float:
        return (self.measured_before - self.predicted_before) / self.predicted_before

    @property
    def rel_err_after(self) -> float:
        if self.predicted_after == 0:
            return math.nan
        return (self.measured_after - self.predicted_after) / self.predicted_after


def validate_lemma1(params: SpaceParams, sample_columns, table_index: int = 0) -> list[ColumnCheck]:
    """Count distinct values per matrix column and compare with the column-count model.

    Column 0 holds the start points; column u the point after u steps.  A
    chain contributes to column u if it has not stopped at a DP before u.
    "after" counts the matrix elements of chains that reach a DP within
    t_hat, i.e. column u of a chain of length L only when u < L (the end
    point itself is not a pre-image candidate).
    """
    if params.n_bits > 22:
        raise ConfigError("column counting needs N <= 2**22")
    cols = np.array(sorted(set(int(c) for c in sample_columns)), dtype=np.int64)
    sps = generate_start_points(params.m0_tilde, table_index, params.seed, params.n_bits)
    vals, lens = kernels.column_values(
        sps, params.fid, params.n_bits, params.dp_limit, table_index * params.t_hat, params.t_hat, cols
    )
    survive = (lens >= 1) & (lens <= params.t_hat)
    ti = TheoryInputs.from_params(params)
    out = []
    for k, col in enumerate(cols):
        v = vals[:, k]
        before = np.unique(v[v >= 0]).size
        after = np.unique(v[(v >= 0) & survive & (lens > col)]).size
        pred_after = theory.m_col(col, ti) if col <= params.c * params.t else 0.0
        out.append(ColumnCheck(int(col), int(before), theory.m_tilde(col, ti), int(after), pred_after))
    return out


@dataclass
class MethodRow:
    method: str
    N: int
    memory: int
    precomp_invocations: int
    success_rate: float
    mean_online_invocations: float
    mean_false_alarms: float

    @property
    def d_pc(self) -> float:
        return self.precomp_invocations / self.N

    @property
    def tm2(self) -> float:
        """Measured T * M^2 / N^2."""
        return self.mean_online_invocations * self.memory**2 / self.N**2


def compare_methods(configs, n_targets: int, target_seed: int = 1):
    """One measured row per config (SpaceParams = rainbow-DP, else BaselineConfig).

    Every method searches the same planted targets.  Returns (rows, reference)
    where ``reference`` is the quoted coefficient table.
    """
    rows = []
    for cfg in configs:
        xs, ys = make_targets(cfg.N, cfg.n_bits, cfg.fid, n_targets, target_seed)
        if isinstance(cfg, SpaceParams):
            tables = build_tables(cfg)
            _, stats = batch_search(ys, tables, planted=xs)
            rows.append(MethodRow(
                "rainbow_dp", cfg.N, sum(tb.m0 for tb in tables),
                sum(tb.precomp_invocations for tb in tables), stats.success_rate,
                stats.mean_invocations, stats.mean_false_alarms,
            ))
        else:
            tables = baselines.build_baseline(cfg)
            _, stats = baselines.batch_search_baseline(ys, tables, planted=xs)
            rows.append(MethodRow(
                cfg.method, cfg.N, sum(tb.m0 for tb in tables),
                sum(tb.precomp_invocations for tb in tables), stats.success_rate,
                stats.mean_invocations, stats.mean_false_alarms,
            ))
        log.info("compare: %s", rows[-1])
    return rows, baselines.reference_coefficients()


def matched_configs(n_bits: int, k_bits: int = 6, methods=("rainbow_dp", "rainbow", "hellman", "hellman_dp"),
                    seed: int = 0, function_id: str = "md5-trunc"):
    """Configurations with roughly equal memory M = 3N/t, sized for about 80% success.

    rainbow-DP uses (l=2, c=2.04, D_pc=3).  Classic rainbow uses one table of
    M chains of length 2.472 N/M, from 1 - (1 + m t / 2N)^-2 = 0.8.  The
    Hellman variants use chains of length ~2N/M over many small tables.
    """
    N, t = 1 << n_bits, 1 << k_bits
    c = 2.04
    m0_tilde = round(3 * N / (2 * t * -math.expm1(-c)))
    M = 3 * N // t
    out = []
    for method in methods:
        if method == "rainbow_dp":
            out.append(SpaceParams.create(n_bits, k_bits, c, l=2, m0_tilde=m0_tilde, seed=seed,
                                          function_id=function_id))
        elif method == "rainbow":
            out.append(baselines.BaselineConfig("rainbow", M, round(2.472 * N / M), 1, n_bits, seed, function_id))
        elif method == "hellman":
            th = max(1, round(2 * N / M))
            m = max(1, round(N / th**2))
            out.append(baselines.BaselineConfig("hellman", m, th, max(1, round(M / m)), n_bits, seed, function_id))
        elif method == "hellman_dp":
            td = 1 << max(1, round(math.log2(2 * N / M)))
            keep = -math.expm1(-1.8)
            m = max(1, round(N / td**2 / keep))
            out.append(baselines.BaselineConfig("hellman_dp", m, td, max(1, round(M / (m * keep))), n_bits,
                                                seed, function_id))
        else:
            raise ConfigError(f"unknown method {method!r}")
    return out
