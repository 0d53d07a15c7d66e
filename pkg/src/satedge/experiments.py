"""Parameter sweeps, result tables, and single-scenario comparisons.

A sweep varies one generation parameter over a grid, draws a number of
seeded scenarios per grid point, runs the selected algorithms on each,
and reports per-terminal normalized cost (1.0 = all-data-center
serving) averaged over the scenarios. Replicate seeds derive from
(master seed, grid index, replicate index), so tables are reproducible
byte for byte. Set the ``SATEDGE_WORKERS`` environment variable to
parallelize replicates; determinism is guaranteed in single-worker
mode (and preserved in practice by index-ordered aggregation).

The exact solver stops scaling at desk size well before the heuristics
do, so sweeps drop it at grid points whose terminal count exceeds
``ilp_max_terminals`` and record the skipped points in the table
metadata.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from . import heuristics, serialize
from .costs import ScenarioEvaluator, check_feasibility, dco_normalizers, evaluate
from .model import Decision, GenerationConfig, Scenario, generate_scenario
from .solver import SolveLimits, solve_scenario

ALGORITHMS = ("ilp", "gco", "nfco", "dco")
PARAMETERS = {
    "n_terminals": (5, 30),
    "uplink_rate": (5.0e7, 3.5e8),
    "leo_capacity": (2.0e9, 2.2e10),
    "nf_allocation": (5.0e8, 3.0e9),
}
WORKERS_ENV = "SATEDGE_WORKERS"


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    grid: tuple
    scenarios_per_point: int = 100
    algorithms: tuple = ALGORITHMS
    base_config: GenerationConfig = field(default_factory=GenerationConfig)
    master_seed: int = 0
    node_limit: int = 2_000_000
    time_limit_s: Optional[float] = None
    timing_reps: int = 3
    ilp_max_terminals: int = 15
    allow_out_of_range: bool = False

    def __post_init__(self) -> None:
        if self.parameter not in PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}; choose from {sorted(PARAMETERS)}")
        if not self.grid:
            raise ValueError("empty sweep grid")
        if self.scenarios_per_point < 1:
            raise ValueError("need at least one scenario per grid point")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")
        if self.timing_reps < 1:
            raise ValueError("timing_reps must be at least 1")
        lo, hi = PARAMETERS[self.parameter]
        if not self.allow_out_of_range:
            for v in self.grid:
                if not lo <= v <= hi:
                    raise ValueError(
                        f"grid value {v} outside the standard range [{lo}, {hi}] "
                        f"for {self.parameter}; set allow_out_of_range to override"
                    )


@dataclass
class ResultRow:
    parameter: str
    value: float
    algorithm: str
    mean_cost: float
    std_cost: float
    mean_time_ms: float
    scenarios: int
    failures: int


@dataclass
class ResultTable:
    rows: List[ResultRow]
    metadata: dict = field(default_factory=dict)

    def mean_cost(self, value: float, algorithm: str) -> float:
        for row in self.rows:
            if row.value == value and row.algorithm == algorithm:
                return row.mean_cost
        raise KeyError((value, algorithm))

    def curve(self, algorithm: str) -> List[tuple]:
        return [(row.value, row.mean_cost) for row in self.rows if row.algorithm == algorithm]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["parameter", "value", "algorithm", "mean_cost", "std_cost", "mean_time_ms", "scenarios", "failures"])
        for r in self.rows:
            writer.writerow(
                [r.parameter, repr(r.value), r.algorithm, repr(r.mean_cost), repr(r.std_cost), repr(r.mean_time_ms), r.scenarios, r.failures]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        reader = csv.DictReader(io.StringIO(text))
        rows = [
            ResultRow(
                parameter=rec["parameter"],
                value=float(rec["value"]),
                algorithm=rec["algorithm"],
                mean_cost=float(rec["mean_cost"]),
                std_cost=float(rec["std_cost"]),
                mean_time_ms=float(rec["mean_time_ms"]),
                scenarios=int(rec["scenarios"]),
                failures=int(rec["failures"]),
            )
            for rec in reader
        ]
        return cls(rows=rows)

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "rows": [dataclasses.asdict(r) for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def replicate_seed(master_seed: int, point_index: int, replicate: int) -> int:
    """Stable derived seed for one (grid point, replicate) cell."""
    ss = np.random.SeedSequence([int(master_seed), int(point_index), int(replicate)])
    return int(ss.generate_state(1, np.uint64)[0])


def apply_parameter(config: GenerationConfig, parameter: str, value: float) -> GenerationConfig:
    if parameter == "n_terminals":
        return dataclasses.replace(config, n_terminals=int(value))
    if parameter == "uplink_rate":
        return dataclasses.replace(config, uplink_rate_bps=float(value))
    if parameter == "leo_capacity":
        return dataclasses.replace(config, cpu_capacity_cps=float(value))
    if parameter == "nf_allocation":
        return dataclasses.replace(config, nf_allocation_cps=float(value))
    raise ValueError(f"unknown sweep parameter {parameter!r}")


def _run_algorithm(scenario: Scenario, algorithm: str, limits: SolveLimits) -> tuple:
    """(decision, failed) for one algorithm invocation."""
    if algorithm == "ilp":
        result = solve_scenario(scenario, limits)
        return result.decision, result.status != "optimal"
    if algorithm == "gco":
        return heuristics.gco(scenario), False
    if algorithm == "nfco":
        return heuristics.nfco(scenario), False
    if algorithm == "dco":
        return heuristics.dco(scenario), False
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _replicate_task(payload: tuple) -> dict:
    config, seed, algorithms, limits, timing_reps = payload
    scenario = generate_scenario(config, seed)
    normalizers = dco_normalizers(scenario)
    U = scenario.n_terminals
    out: dict = {}
    for algorithm in algorithms:
        times = []
        decision = None
        failed = False
        for _ in range(timing_reps):
            t0 = time.perf_counter()
            decision, failed = _run_algorithm(scenario, algorithm, limits)
            times.append(time.perf_counter() - t0)
        cost = evaluate(scenario, decision, normalizers).normalized_per_terminal if U else 0.0
        out[algorithm] = {"cost": cost, "time_ms": statistics.median(times) * 1e3, "failed": failed}
    return out


def run_sweep(spec: SweepSpec) -> ResultTable:
    """Run the sweep and aggregate per (grid value, algorithm) statistics.

    A replicate on which the exact solver hits its node/time limit is
    counted as a failure and dropped from every algorithm's mean at that
    grid point, keeping the reported means paired across algorithms.
    """
    limits = SolveLimits(max_nodes=spec.node_limit, time_limit_s=spec.time_limit_s)
    workers = int(os.environ.get(WORKERS_ENV, "1") or "1")
    rows: List[ResultRow] = []
    ilp_skipped = []
    for point_index, value in enumerate(spec.grid):
        config = apply_parameter(spec.base_config, spec.parameter, value)
        algorithms = list(spec.algorithms)
        if "ilp" in algorithms and config.n_terminals > spec.ilp_max_terminals:
            algorithms.remove("ilp")
            ilp_skipped.append(value)
        tasks = [
            (config, replicate_seed(spec.master_seed, point_index, rep), tuple(algorithms), limits, spec.timing_reps)
            for rep in range(spec.scenarios_per_point)
        ]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                replicates = list(pool.map(_replicate_task, tasks))
        else:
            replicates = [_replicate_task(t) for t in tasks]
        failed_reps = {i for i, rec in enumerate(replicates) if any(v["failed"] for v in rec.values())}
        kept = [rec for i, rec in enumerate(replicates) if i not in failed_reps]
        for algorithm in algorithms:
            failures = sum(1 for rec in replicates if rec[algorithm]["failed"])
            costs = [rec[algorithm]["cost"] for rec in kept]
            times = [rec[algorithm]["time_ms"] for rec in kept]
            rows.append(
                ResultRow(
                    parameter=spec.parameter,
                    value=float(value),
                    algorithm=algorithm,
                    mean_cost=statistics.fmean(costs) if costs else float("nan"),
                    std_cost=statistics.pstdev(costs) if len(costs) > 1 else 0.0,
                    mean_time_ms=statistics.fmean(times) if times else float("nan"),
                    scenarios=len(kept),
                    failures=failures,
                )
            )
    metadata = {
        "parameter": spec.parameter,
        "grid": [float(v) for v in spec.grid],
        "scenarios_per_point": spec.scenarios_per_point,
        "algorithms": list(spec.algorithms),
        "master_seed": spec.master_seed,
        "timing_reps": spec.timing_reps,
        "node_limit": spec.node_limit,
        "ilp_max_terminals": spec.ilp_max_terminals,
        "ilp_skipped_values": [float(v) for v in ilp_skipped],
        "workers": workers,
    }
    return ResultTable(rows=rows, metadata=metadata)


_FIGURE_FILES = {
    "n_terminals": (("fig3a_total_cost.csv", "mean_cost"), ("fig3b_runtime.csv", "mean_time_ms")),
    "leo_capacity": (("fig4a_total_cost.csv", "mean_cost"),),
    "nf_allocation": (("fig4b_total_cost.csv", "mean_cost"),),
}


def emit_results(table: ResultTable, out_dir: Union[str, Path], figures: bool = True) -> List[Path]:
    """Write results.csv / results.json (and plot-ready figure files)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    csv_path = out / "results.csv"
    csv_path.write_text(table.to_csv(), encoding="utf-8")
    paths.append(csv_path)
    json_path = out / "results.json"
    json_path.write_text(table.to_json(), encoding="utf-8")
    paths.append(json_path)
    parameter = table.metadata.get("parameter") or (table.rows[0].parameter if table.rows else None)
    if figures and parameter in _FIGURE_FILES:
        for filename, column in _FIGURE_FILES[parameter]:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["value", "algorithm", column, "std_cost", "scenarios"])
            for r in table.rows:
                writer.writerow([repr(r.value), r.algorithm, repr(getattr(r, column)), repr(r.std_cost), r.scenarios])
            path = out / filename
            path.write_text(buf.getvalue(), encoding="utf-8")
            paths.append(path)
    return paths


@dataclass
class CompareEntry:
    label: str
    decision: Decision
    feasibility: object
    normalized_cost: Optional[float]
    per_terminal: Optional[List[dict]]
    error: Optional[str] = None


@dataclass
class CompareReport:
    entries: List[CompareEntry]

    def to_dict(self) -> dict:
        return {
            "entries": [
                {
                    "label": e.label,
                    "normalized_cost": e.normalized_cost,
                    "feasible": e.feasibility.ok,
                    "violations": e.feasibility.to_dict()["violations"],
                    "per_terminal": e.per_terminal,
                    "error": e.error,
                    "decision": serialize.decision_to_dict(e.decision),
                }
                for e in self.entries
            ]
        }

    def render_text(self) -> str:
        lines = []
        base = self.entries[0] if self.entries else None
        for e in self.entries:
            lines.append(f"=== {e.label} ===")
            if e.normalized_cost is None:
                lines.append(f"  cost: unavailable ({e.error})")
            else:
                delta = ""
                if base is not None and base.normalized_cost is not None and e is not base:
                    delta = f"  (vs {base.label}: {e.normalized_cost - base.normalized_cost:+.6g})"
                lines.append(f"  normalized cost/terminal: {e.normalized_cost:.6g}{delta}")
            lines.append(f"  cached entries: {int(e.decision.cached.sum())}, served entries: {int(e.decision.served.sum())}")
            lines.append("  feasibility: " + str(e.feasibility).replace("\n", "\n  "))
            if e.per_terminal is not None:
                for u, rec in enumerate(e.per_terminal):
                    extra = ""
                    if base is not None and base.per_terminal is not None and e is not base:
                        extra = f"  d_cost={rec['cost'] - base.per_terminal[u]['cost']:+.4g}"
                    lines.append(
                        f"    terminal {u}: latency={rec['latency']:.6g}s energy={rec['energy']:.6g}J cost={rec['cost']:.4g}{extra}"
                    )
        return "\n".join(lines) + "\n"


def compare_single(
    scenario: Scenario,
    algorithms: Sequence,
    limits: Optional[SolveLimits] = None,
) -> CompareReport:
    """Run algorithms (or pre-built decisions) on one scenario side by side.

    ``algorithms`` entries are algorithm names or ``(label, Decision)``
    pairs. Infeasible decisions still get a feasibility section; their
    cost is omitted when the placement breaks the prefix rule that cost
    evaluation requires.
    """
    limits = limits or SolveLimits()
    ev = ScenarioEvaluator(scenario)
    normalizers = dco_normalizers(scenario, ev)
    alpha = scenario.alpha
    entries = []
    for item in algorithms:
        if isinstance(item, str):
            label = item
            decision, _ = _run_algorithm(scenario, item, limits)
        else:
            label, decision = item
        report = check_feasibility(scenario, decision)
        cost = None
        per_terminal = None
        error = None
        try:
            breakdown = evaluate(scenario, decision, normalizers)
            cost = breakdown.normalized_per_terminal
            per_terminal = [
                {
                    "latency": t.total_latency,
                    "energy": t.total_energy,
                    "cost": alpha * (t.total_latency / float(normalizers[0][u]))
                    + (1.0 - alpha) * (t.total_energy / float(normalizers[1][u])),
                }
                for u, t in enumerate(breakdown.terminals)
            ]
        except ValueError as exc:
            error = str(exc)
        entries.append(
            CompareEntry(
                label=label,
                decision=decision,
                feasibility=report,
                normalized_cost=cost,
                per_terminal=per_terminal,
                error=error,
            )
        )
    return CompareReport(entries=entries)


def spec_to_json(spec: SweepSpec) -> str:
    payload = dataclasses.asdict(spec)
    payload["grid"] = list(spec.grid)
    payload["algorithms"] = list(spec.algorithms)
    payload["base_config"] = serialize.config_to_dict(spec.base_config)
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def spec_from_json(text: str) -> SweepSpec:
    data = json.loads(text)
    base = data.pop("base_config", None)
    config = serialize.config_from_dict(base) if base else GenerationConfig()
    kwargs = {
        key: tuple(value) if isinstance(value, list) else value
        for key, value in data.items()
    }
    return SweepSpec(base_config=config, **kwargs)
