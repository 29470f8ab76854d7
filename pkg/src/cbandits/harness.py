"""Experiment harness: configuration, replication runner, persistence, and
the regret-versus-lower-bound comparison data.

Replications are independent; replication ``i`` runs with seed
``base_seed + i``, so reruns of the same config are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis
from .environment import InstanceSpec, load_instance
from .policy import run_policy

OUTPUT_DIR_ENV = "CBANDITS_OUTPUT_DIR"


@dataclass(frozen=True)
class ExperimentConfig:
    instance_path: str
    horizon: int
    replications: int
    base_seed: int
    n0: int = 1
    mean_floor: float = 1e-6
    checkpoints: tuple[int, ...] = ()
    output_dir: str = "results"
    check_identity_every_block: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @classmethod
    def from_doc(cls, doc: dict) -> "ExperimentConfig":
        return cls(
            instance_path=doc["instance"],
            horizon=int(doc["horizon"]),
            replications=int(doc["replications"]),
            base_seed=int(doc["base_seed"]),
            n0=int(doc.get("n0", 1)),
            mean_floor=float(doc.get("mean_floor", 1e-6)),
            checkpoints=tuple(int(c) for c in doc.get("checkpoints", ())),
            output_dir=doc.get("output_dir", "results"),
            check_identity_every_block=bool(doc.get("check_identity_every_block", False)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_doc(json.load(fh))

    def to_doc(self) -> dict:
        return {
            "instance": self.instance_path,
            "horizon": self.horizon,
            "replications": self.replications,
            "base_seed": self.base_seed,
            "n0": self.n0,
            "mean_floor": self.mean_floor,
            "checkpoints": list(self.checkpoints),
            "output_dir": self.output_dir,
            "check_identity_every_block": self.check_identity_every_block,
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_doc(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def default_checkpoints(min_n: int, horizon: int, points: int = 20) -> tuple[int, ...]:
    """Log-spaced checkpoint grid from the first feasible boundary to the
    horizon."""
    if horizon <= min_n:
        return (horizon,)
    grid = set()
    for i in range(points):
        frac = i / (points - 1)
        grid.add(round(min_n * (horizon / min_n) ** frac))
    return tuple(sorted(grid))


@dataclass
class ResultBundle:
    config: ExperimentConfig
    spec: InstanceSpec
    lower_bound: analysis.LowerBoundReport
    checkpoints: tuple[int, ...]
    raw_rows: list[dict]
    averages: list[dict]
    config_hash: str = ""
    raw_csv_path: str = ""
    summary_path: str = ""

    def summary_doc(self) -> dict:
        return {
            "config": self.config.to_doc(),
            "config_hash": self.config_hash,
            "checkpoints": list(self.checkpoints),
            "checkpoint_note": "rows are captured at the first block boundary at or past each checkpoint",
            "lower_bound": self.lower_bound.to_dict(),
            "averages": self.averages,
            "raw_csv": self.raw_csv_path,
        }


def _raw_header(k: int, L: int) -> list[str]:
    return (
        ["rep", "n", "regret"]
        + [f"T_{i}" for i in range(1, k + 1)]
        + [f"slack_{j}" for j in range(1, L + 1)]
        + ["blocks_completed"]
    )


def run_experiment(config: ExperimentConfig, spec: InstanceSpec | None = None) -> ResultBundle:
    """Run all replications, compute per-checkpoint averages, and assemble
    the result bundle (not yet written to disk)."""
    if spec is None:
        spec = load_instance(config.instance_path)
    inst = spec.instance
    lb = analysis.lower_bound_M(inst, spec.family, spec.truth)
    from .blocks import build_isb

    isb_len = build_isb(inst, config.n0).length
    checkpoints = config.checkpoints or default_checkpoints(isb_len, config.horizon)

    raw_rows: list[dict] = []
    per_cp: list[list[dict]] = [[] for _ in checkpoints]
    for rep in range(config.replications):
        stats = run_policy(
            inst,
            spec.family,
            spec.truth,
            horizon=config.horizon,
            seed=config.base_seed + rep,
            n0=config.n0,
            mean_floor=config.mean_floor,
            checkpoints=list(checkpoints),
            check_identity_every_block=config.check_identity_every_block,
        )
        assert len(stats.checkpoint_rows) == len(checkpoints)
        for ci, row in enumerate(stats.checkpoint_rows):
            slacks = [
                float(row.n * r - s) for r, s in zip(inst.rates, row.spent)
            ]
            regret = analysis.pseudo_regret(inst, row.T, row.n)
            rec = {
                "rep": rep,
                "n": row.n,
                "regret": regret,
                **{f"T_{i + 1}": row.T[i] for i in range(inst.k)},
                **{f"slack_{j + 1}": slacks[j] for j in range(inst.L)},
                "blocks_completed": row.blocks_completed,
            }
            raw_rows.append(rec)
            per_cp[ci].append(rec)

    averages = []
    for ci, group in enumerate(per_cp):
        r = len(group)
        avg = {
            "checkpoint": checkpoints[ci],
            "n": sum(g["n"] for g in group) / r,
            "regret": sum(g["regret"] for g in group) / r,
            **{
                f"T_{i + 1}": sum(g[f"T_{i + 1}"] for g in group) / r
                for i in range(inst.k)
            },
            **{
                f"slack_{j + 1}": sum(g[f"slack_{j + 1}"] for g in group) / r
                for j in range(inst.L)
            },
        }
        avg["regret_per_log_n"] = avg["regret"] / math.log(avg["n"]) if avg["n"] > 1 else 0.0
        averages.append(avg)

    bundle = ResultBundle(
        config=config,
        spec=spec,
        lower_bound=lb,
        checkpoints=tuple(checkpoints),
        raw_rows=raw_rows,
        averages=averages,
        config_hash=config.hash(),
    )
    return bundle


def raw_csv_text(bundle: ResultBundle) -> str:
    inst = bundle.spec.instance
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_raw_header(inst.k, inst.L))
    for rec in bundle.raw_rows:
        writer.writerow(
            [rec["rep"], rec["n"], repr(rec["regret"])]
            + [rec[f"T_{i + 1}"] for i in range(inst.k)]
            + [repr(rec[f"slack_{j + 1}"]) for j in range(inst.L)]
            + [rec["blocks_completed"]]
        )
    return buf.getvalue()


def write_bundle(bundle: ResultBundle, output_dir: str | Path | None = None) -> ResultBundle:
    """Persist the raw CSV and summary JSON; returns the bundle with paths."""
    out = Path(
        output_dir
        or os.environ.get(OUTPUT_DIR_ENV)
        or bundle.config.output_dir
    )
    out.mkdir(parents=True, exist_ok=True)
    raw_path = out / "raw.csv"
    raw_path.write_text(raw_csv_text(bundle), encoding="utf-8", newline="")
    bundle.raw_csv_path = str(raw_path)
    summary_path = out / "summary.json"
    summary_path.write_text(
        json.dumps(bundle.summary_doc(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
        newline="",
    )
    bundle.summary_path = str(summary_path)
    return bundle


def plot_data_rows(summary_doc: dict) -> list[dict]:
    """Tidy rows comparing averaged regret to the lower-bound reference:
    (n, avg_regret, M log n, regret / log n) per checkpoint."""
    m = summary_doc["lower_bound"]["M"]
    rows = []
    for avg in summary_doc["averages"]:
        n = avg["n"]
        log_n = math.log(n) if n > 1 else float("nan")
        rows.append(
            {
                "n": n,
                "avg_regret": avg["regret"],
                "M_log_n": m * log_n,
                "regret_per_log_n": avg["regret"] / log_n if n > 1 else 0.0,
            }
        )
    return rows


def plot_data_csv(summary_doc: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "avg_regret", "M_log_n", "regret_per_log_n"])
    for row in plot_data_rows(summary_doc):
        writer.writerow(
            [row["n"], repr(row["avg_regret"]), repr(row["M_log_n"]), repr(row["regret_per_log_n"])]
        )
    return buf.getvalue()
