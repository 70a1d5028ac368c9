"""Monte Carlo sweeps over scenario dimensions with CSV/JSON emission.

Sweeps are reproducible end to end: per-trial seeds are a stable hash of the
master seed, the swept value, and the trial index, rows are sorted
deterministically before emission, and emitted files are byte-identical
across reruns of the same spec (wall-clock runtimes are therefore zeroed in
sweep rows; direct solver calls report real timings).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import __version__
from .channel import ScenarioDims, random_scenario
from .errors import ConfigError, FluidcapError
from .solvers import ALGORITHMS, run_algorithm

SWEEP_PARAMS = ("M", "N", "U", "L", "W_lambda", "snr_db")

_PARAM_FIELD = {
    "M": "M",
    "N": "N",
    "U": "U",
    "L": "L",
    "W_lambda": "W",
    "snr_db": "snr_db",
}

COLUMNS = (
    "seed",
    "M",
    "U",
    "N",
    "L",
    "W_lambda",
    "snr_db",
    "algorithm",
    "capacity_bits",
    "iterations",
    "runtime_ms",
    "max_rank_residual",
    "status",
)

GAIN_LAW = "i.i.d. circularly symmetric complex Gaussian, variance 1/L per path"
ANGLE_LAW = "i.i.d. uniform on [0, pi]"


@dataclass(frozen=True)
class SweepSpec:
    """One Monte Carlo sweep: a parameter, its values, and the trial layout."""

    param: str
    values: tuple
    trials: int
    base: ScenarioDims
    algorithms: tuple
    seed: int
    tau: float = 2.0
    step: float | None = None

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ConfigError(f"unknown sweep parameter {self.param!r}")
        values = tuple(self.values)
        if not values:
            raise ConfigError("sweep needs at least one value")
        if self.trials < 1:
            raise ConfigError("sweep needs at least one trial")
        algorithms = tuple(self.algorithms)
        unknown = [a for a in algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithms: {', '.join(unknown)}")
        if not algorithms:
            raise ConfigError("sweep needs at least one algorithm")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "algorithms", algorithms)


def derive_trial_seed(master_seed: int, value, trial: int) -> int:
    """Stable per-trial seed; sha256 keeps it identical across processes."""
    payload = f"{master_seed}|{value!r}|{trial}".encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def _dims_with(base: ScenarioDims, param: str, value) -> ScenarioDims:
    field = _PARAM_FIELD[param]
    if field in ("M", "N", "U", "L", "K"):
        value = int(value)
    else:
        value = float(value)
    return dataclasses.replace(base, **{field: value})


def _trial_rows(task) -> list:
    spec, value, trial = task
    seed = derive_trial_seed(spec.seed, value, trial)
    dims = _dims_with(spec.base, spec.param, value)
    rows = []
    scenario = None
    scenario_error = None
    try:
        scenario = random_scenario(seed, dims)
    except FluidcapError as exc:
        scenario_error = f"error: {type(exc).__name__}: {exc}"
    for algorithm in spec.algorithms:
        row = {
            "_trial": trial,
            "seed": seed,
            "M": dims.M,
            "U": dims.U,
            "N": dims.N,
            "L": dims.L,
            "W_lambda": dims.W,
            "snr_db": dims.snr_db,
            "algorithm": algorithm,
            "capacity_bits": "",
            "iterations": "",
            "runtime_ms": 0.0,
            "max_rank_residual": "",
            "status": "ok",
        }
        if scenario_error is not None:
            row["status"] = scenario_error
            rows.append(row)
            continue
        try:
            report = run_algorithm(algorithm, scenario, tau=spec.tau, step=spec.step)
            row["capacity_bits"] = report.capacity_bits
            row["iterations"] = report.iterations
            row["max_rank_residual"] = report.max_rank_residual()
        except FluidcapError as exc:
            row["status"] = f"error: {type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def _worker_count(n_tasks: int) -> int:
    raw = os.environ.get("FLUIDCAP_THREADS", "1")
    try:
        cap = max(1, int(raw))
    except ValueError:
        cap = 1
    return min(cap, n_tasks)


def run_sweep(spec: SweepSpec) -> list:
    """Run all (value, trial, algorithm) cells plus per-(value, algorithm)
    mean rows.

    Trials may execute in parallel (FLUIDCAP_THREADS caps the worker count);
    rows are sorted by (value, trial, algorithm) afterwards, so the schedule
    never changes the output.
    """
    tasks = [(spec, value, trial) for value in spec.values for trial in range(spec.trials)]
    workers = _worker_count(len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_trial_rows, tasks))
    else:
        chunks = [_trial_rows(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]

    value_column = spec.param
    rows.sort(key=lambda r: (float(r[value_column]), r["_trial"], r["algorithm"]))

    grouped = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        grouped.setdefault((float(row[value_column]), row["algorithm"]), []).append(row)
    mean_rows = []
    for (value, algorithm) in sorted(grouped):
        members = grouped[(value, algorithm)]
        template = {c: members[0][c] for c in COLUMNS}
        template["seed"] = ""
        template["algorithm"] = algorithm
        for col in ("capacity_bits", "iterations", "runtime_ms", "max_rank_residual"):
            template[col] = sum(float(m[col]) for m in members) / len(members)
        template["status"] = "mean"
        mean_rows.append(template)
    return rows + mean_rows


def sweep_metadata(spec: SweepSpec) -> dict:
    """Reproducibility record attached to every results file."""
    return {
        "package_version": __version__,
        "sweep": {
            "param": spec.param,
            "values": list(spec.values),
            "trials": spec.trials,
            "algorithms": list(spec.algorithms),
            "seed": spec.seed,
            "tau": spec.tau,
            "step": spec.step,
            "base": dataclasses.asdict(spec.base),
        },
        "distributions": {"path_gains": GAIN_LAW, "angles": ANGLE_LAW},
        "notes": "runtime_ms is zeroed in sweep rows to keep reruns byte-identical",
    }


def emit(results, path, fmt: str = "csv", metadata: dict | None = None) -> None:
    """Write result rows as CSV (fixed column order) or JSON.

    JSON embeds the metadata; for CSV it goes to a ``<path>.meta.json``
    sidecar so the delimited file carries exactly the declared columns.
    """
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(COLUMNS)
            for row in results:
                writer.writerow([row[c] for c in COLUMNS])
        if metadata is not None:
            with open(f"{path}.meta.json", "w", encoding="utf-8") as handle:
                json.dump(metadata, handle, indent=2, sort_keys=True)
                handle.write("\n")
    elif fmt == "json":
        doc = {"rows": [{c: row[c] for c in COLUMNS} for row in results]}
        if metadata is not None:
            doc["metadata"] = metadata
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(doc, handle, indent=2)
            handle.write("\n")
    else:
        raise ConfigError(f"unknown output format {fmt!r}; expected csv or json")
