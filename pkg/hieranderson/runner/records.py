"""Result rows and the per-experiment writer.

Rows are buffered in memory and written once per experiment: CSV bodies only
depend on the resolved config and seed, timestamps go to the JSON summary.
"""

import json
import logging
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd

from ..analysis import TailEstimate
from ..config import output_directory

logger = logging.getLogger(__name__)

COLUMNS = ["experiment", "param_hash", "E", "value", "stderr", "method", "kappa", "replicas", "log_domain"]
PLOT_COLUMNS = ["series", "x", "y"]
FLOAT_FORMAT = "%.17g"
# beyond this many decades a double underflows, so the log is written too
LOG_DOMAIN_DECADES = 300


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    param_hash: str
    E: float
    value: float
    stderr: float
    method: str
    kappa: int
    replicas: int
    log_domain: str = ""

    @classmethod
    def from_tail(cls, experiment: str, param_hash: str, estimate: TailEstimate) -> "ResultRecord":
        log10 = estimate.log10_value
        log_domain = ""
        if math.isfinite(log10) and abs(log10) > LOG_DOMAIN_DECADES:
            log_domain = f"+1 {log10!r}"
        return cls(
            experiment=experiment,
            param_hash=param_hash,
            E=estimate.E,
            value=estimate.value,
            stderr=estimate.stderr,
            method=estimate.method.value,
            kappa=estimate.kappa,
            replicas=estimate.replicas,
            log_domain=log_domain,
        )


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def _atomic_write(path: Path, write) -> None:
    tmp = path.with_name(path.name + ".tmp")
    write(tmp)
    os.replace(tmp, path)


class RecordWriter:
    """Single owner of one experiment's output files."""

    def __init__(self, experiment: str, param_hash: str, out_dir):
        self.experiment = experiment
        self.param_hash = param_hash
        self.out_dir = output_directory(out_dir)
        self.records: List[ResultRecord] = []
        self.plot_rows: List[dict] = []

    @property
    def csv_path(self) -> Path:
        return self.out_dir / f"{self.experiment}.csv"

    @property
    def summary_path(self) -> Path:
        return self.out_dir / f"{self.experiment}.summary.json"

    @property
    def plot_path(self) -> Path:
        return self.out_dir / f"{self.experiment}.plot.csv"

    def record(
        self,
        E: float,
        value: float,
        method: str,
        stderr: float = math.nan,
        kappa: int = 0,
        replicas: int = 0,
    ) -> None:
        self.records.append(
            ResultRecord(
                self.experiment, self.param_hash, float(E), float(value), float(stderr), method, int(kappa), int(replicas)
            )
        )

    def record_tail(self, estimate: TailEstimate) -> None:
        self.records.append(ResultRecord.from_tail(self.experiment, self.param_hash, estimate))

    def extend(self, records: Iterable[ResultRecord]) -> None:
        self.records.extend(records)

    def plot(self, series: str, x, y) -> None:
        for xi, yi in zip(np.atleast_1d(x), np.atleast_1d(y)):
            self.plot_rows.append({"series": series, "x": float(xi), "y": float(yi)})

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.records], columns=COLUMNS)

    def flush(self, emit_plot_data: bool = False) -> Path:
        df = self.frame()
        _atomic_write(self.csv_path, lambda tmp: df.to_csv(tmp, index=False, float_format=FLOAT_FORMAT))
        logger.info("Wrote %d rows to %s", len(df), self.csv_path)
        if emit_plot_data:
            plot_df = pd.DataFrame(self.plot_rows, columns=PLOT_COLUMNS)
            _atomic_write(self.plot_path, lambda tmp: plot_df.to_csv(tmp, index=False, float_format=FLOAT_FORMAT))
            logger.info("Wrote %d plot points to %s", len(plot_df), self.plot_path)
        return self.csv_path

    def write_summary(self, summary: dict) -> Path:
        def write(tmp):
            with open(tmp, "w") as f:
                json.dump(summary, f, indent=2, default=_json_default, allow_nan=True)

        _atomic_write(self.summary_path, write)
        logger.info("Wrote summary to %s", self.summary_path)
        return self.summary_path


def read_records(path) -> pd.DataFrame:
    """Load a results CSV back with the writer's column order."""
    return pd.read_csv(path, keep_default_na=True, dtype={"log_domain": str})[COLUMNS]


def build_summary(
    config_echo: dict,
    seed: int,
    param_hash: str,
    invariants: dict,
    started: str,
    finished: str,
    wall_time: float,
    partial: bool = False,
    details: Optional[dict] = None,
    error: Optional[str] = None,
) -> dict:
    summary = {
        "config": config_echo,
        "seed": seed,
        "param_hash": param_hash,
        "invariants": {name: bool(ok) for name, ok in invariants.items()},
        "passed": all(invariants.values()) and not partial,
        "partial": partial,
        "started": started,
        "finished": finished,
        "wall_time": wall_time,
        "details": details or {},
    }
    if error is not None:
        summary["error"] = error
    return summary
