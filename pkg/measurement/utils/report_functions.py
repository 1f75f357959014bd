# ----------------------------------------
# Run reports: assembly and JSON/CSV output
# ----------------------------------------

import io
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List

import pandas as pd

TOOL_VERSION = "0.3.0"
SCHEMA_VERSION = 1
REPORT_FORMATS = ("json", "csv")

UNITS = {
    "position": "grid length unit",
    "momentum": "inverse grid length unit (hbar = 1)",
    "energy": "hbar^2 / (mass unit * grid length unit^2)",
    "time": "mass unit * grid length unit^2 / hbar",
    "probability": "dimensionless",
}


@dataclass
class RunReport:
    experiment: str
    seed: int
    runs: int
    outcomes: List[str]
    predicted_probabilities: Dict[str, float]
    reduction_probabilities: Dict[str, float]
    empirical_frequencies: Dict[str, float]
    counts: Dict[str, int]
    max_deviation: float
    consistency: Dict[str, float]
    branch_summaries: Dict[str, Dict[str, Any]]
    reduced_pointer_masses: Dict[str, float]
    extent_boxes: Dict[str, Dict[str, Any]]
    status_events: List[Dict[str, str]]
    tpov: Dict[str, Any]
    reduction_triggered: bool
    samples: List[str] = field(default_factory=list)
    units: Dict[str, str] = field(default_factory=lambda: dict(UNITS))
    tool_version: str = TOOL_VERSION
    schema_version: int = SCHEMA_VERSION


def report_to_dict(r: RunReport) -> Dict[str, Any]:
    return asdict(r)


def report_from_json(data: str) -> RunReport:
    raw = json.loads(data)
    known = {f.name for f in fields(RunReport)}
    return RunReport(**{k: v for k, v in raw.items() if k in known})


def summary_frame(r: RunReport) -> pd.DataFrame:
    """One row per outcome: predicted vs empirical."""
    rows = []
    for label in r.outcomes:
        rows.append({
            "outcome": label,
            "predicted_probability": r.predicted_probabilities.get(label, 0.0),
            "reduction_probability": r.reduction_probabilities.get(label, 0.0),
            "empirical_frequency": r.empirical_frequencies.get(label, 0.0),
            "count": r.counts.get(label, 0),
        })
    return pd.DataFrame(rows, columns=["outcome", "predicted_probability", "reduction_probability",
                                       "empirical_frequency", "count"])


def emit_report(r: RunReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(report_to_dict(r), sort_keys=True, indent=2) + "\n").encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO()
        summary_frame(r).to_csv(buf, index=False)
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"Unknown report format '{fmt}' (expected one of {', '.join(REPORT_FORMATS)})")
