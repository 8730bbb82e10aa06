"""Monte Carlo sweeps of packet loss over link-failure probability and routing radius.

Every trial draws its own random stream from ``SeedSequence(master_seed,
spawn_key=...)``.  The spawn key depends only on the cell and trial indices,
so results do not depend on execution order or on the worker count.

With ``coupling="independent"`` each (p, r, trial) gets a fresh stream.  With
``coupling="paired"`` the stream depends on the trial index alone: every cell
sees the same per-edge uniforms and the same (s, d) pair, failure sets are
nested in p, and differences between cells are not sampling noise.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .constellation import WalkerParams, build_walker_delta, reachable
from .routing import Outcome, check_monotone, route_with_oracle_views

log = logging.getLogger(__name__)

CSV_HEADER = ["p", "r", "trials", "delivered", "dropped", "discarded_disconnected", "loss_rate"]

DEFAULT_P_VALUES = tuple(round(0.025 * k, 3) for k in range(16))  # 0 .. 0.375
DEFAULT_R_VALUES = tuple(range(1, 31))


def default_walker() -> WalkerParams:
    return WalkerParams.degrees(24, 66, 53.0)


@dataclass(frozen=True)
class ExperimentConfig:
    walker: WalkerParams = field(default_factory=default_walker)
    p_values: tuple[float, ...] = DEFAULT_P_VALUES
    r_values: tuple[int, ...] = DEFAULT_R_VALUES
    trials_per_cell: int = 10_000
    master_seed: int = 0
    loss_targets: tuple[float, ...] = (0.01,)
    hop_limit_factor: float = 1.0
    coupling: str = "independent"
    check_traces: bool = False

    def __post_init__(self):
        object.__setattr__(self, "p_values", tuple(float(p) for p in self.p_values))
        object.__setattr__(self, "r_values", tuple(int(r) for r in self.r_values))
        if not self.p_values or any(not 0.0 <= p < 1.0 for p in self.p_values):
            raise ValueError("p_values must be non-empty and inside [0, 1)")
        if not self.r_values or any(r < 1 for r in self.r_values):
            raise ValueError("r_values must be non-empty and >= 1")
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be >= 1")
        if self.hop_limit_factor <= 0:
            raise ValueError("hop_limit_factor must be positive")
        if self.coupling not in ("independent", "paired"):
            raise ValueError(f"unknown coupling {self.coupling!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["walker"] = asdict(self.walker)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "walker" in d:
            w = dict(d["walker"])
            if "inclination_deg" in w:
                w["inclination"] = math.radians(w.pop("inclination_deg"))
            d["walker"] = WalkerParams(**w)
        for k in ("p_values", "r_values", "loss_targets"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass(frozen=True)
class ResultRow:
    p: float
    r: int
    trials: int
    delivered: int
    dropped: int
    discarded_disconnected: int
    # not part of the CSV
    aborted: int = field(default=0, compare=False)
    monotone_violations: int = field(default=0, compare=False)

    @property
    def loss_rate(self) -> float:
        routed = self.delivered + self.dropped
        return self.dropped / routed if routed else 0.0


def trial_seed(config: ExperimentConfig, p_index: int, r_index: int, trial: int) -> np.random.SeedSequence:
    if config.coupling == "paired":
        key = (trial,)
    else:
        key = (p_index, r_index, trial)
    return np.random.SeedSequence(config.master_seed, spawn_key=key)


def run_trial(base, p: float, r: int, seed: np.random.SeedSequence, hop_limit: int):
    """One packet on one random failure pattern.  Returns (class, trace or None)."""
    rng = np.random.default_rng(seed)
    up = rng.random(base.n_edges) >= p
    s, d = (int(v) for v in rng.choice(base.n_nodes, size=2, replace=False))
    graph = base.with_up(up)
    trace = route_with_oracle_views(graph, s, d, r, hop_limit)
    if trace.outcome is Outcome.DELIVERED:
        return "delivered", trace
    if not reachable(graph, s, d):
        return "discarded", None
    return ("aborted" if trace.outcome is Outcome.ABORTED_HOP_LIMIT else "dropped"), trace


def _run_cell(args) -> ResultRow:
    config, p_index, r_index = args
    p, r = config.p_values[p_index], config.r_values[r_index]
    base = build_walker_delta(config.walker)
    hop_limit = max(1, int(config.hop_limit_factor * base.n_nodes * r))
    counts = {"delivered": 0, "dropped": 0, "discarded": 0, "aborted": 0}
    violations = 0
    for t in range(config.trials_per_cell):
        cls, trace = run_trial(base, p, r, trial_seed(config, p_index, r_index, t), hop_limit)
        counts[cls] += 1
        if config.check_traces and trace is not None:
            violations += bool(check_monotone(trace))
    return ResultRow(
        p=p,
        r=r,
        trials=config.trials_per_cell,
        delivered=counts["delivered"],
        dropped=counts["dropped"] + counts["aborted"],
        discarded_disconnected=counts["discarded"],
        aborted=counts["aborted"],
        monotone_violations=violations,
    )


def run_sweep(config: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Run every (p, r) cell; rows come back sorted by (p, r).

    ``threads`` caps the worker processes.  Output does not depend on it.
    """
    jobs = [(config, i, j) for i in range(len(config.p_values)) for j in range(len(config.r_values))]
    if threads <= 1 or len(jobs) == 1:
        rows = [_run_cell(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run_cell, jobs))
    rows = sorted(rows, key=lambda row: (row.p, row.r))
    for row in zero_failure_losses(rows):
        log.warning("p=0 r=%d dropped %d packets with no failed links", row.r, row.dropped)
    return rows


def zero_failure_losses(rows) -> list[ResultRow]:
    """Rows at p = 0 that still dropped packets.  Flagged for review, not an error."""
    return [row for row in rows if row.p == 0.0 and row.dropped > 0]


def min_radius_for_loss(rows, p: float, target_rate: float) -> int | None:
    """Smallest radius among the rows for ``p`` whose loss rate is at or below target."""
    hits = sorted(row.r for row in rows if math.isclose(row.p, p, abs_tol=1e-12) and row.loss_rate <= target_rate)
    return hits[0] if hits else None


def min_radius_summary(rows, targets) -> list[dict]:
    ps = sorted({row.p for row in rows})
    return [{"p": p, "target": t, "min_r": min_radius_for_loss(rows, p, t)} for t in targets for p in ps]


def format_csv(rows) -> str:
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in sorted(rows, key=lambda row: (row.p, row.r)):
        w.writerow([f"{row.p:.6f}", row.r, row.trials, row.delivered, row.dropped,
                    row.discarded_disconnected, f"{row.loss_rate:.6f}"])
    return buf.getvalue()


def write_csv(rows, destination) -> int:
    """Write rows as CSV to a path or text stream; returns the byte count."""
    text = format_csv(rows)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text)
    return len(text.encode())


def read_csv(source) -> list[ResultRow]:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [
        ResultRow(float(rec["p"]), int(rec["r"]), int(rec["trials"]), int(rec["delivered"]),
                  int(rec["dropped"]), int(rec["discarded_disconnected"]))
        for rec in reader
    ]


def write_summary_json(rows, targets, destination) -> None:
    Path(destination).write_text(json.dumps(min_radius_summary(rows, targets), indent=1))
