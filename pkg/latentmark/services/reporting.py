"""
Artifact writers and post-processing: versioned CSV schemas, JSON summaries,
the flip-ratio table and gnuplot data files
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import InterpolationError, ParameterError
from ..models import ScenarioSummary

logger = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1

_REMOVAL_COLUMNS = [
    "t", "adversary", "epsilon", "asr", "ci_low", "ci_high", "successes", "trials", "excluded",
    "mean_realized_l2", "mean_bits_flipped", "budget_violations",
]

CSV_SCHEMAS: Dict[str, List[str]] = {
    "bits_vs_distortion": ["adversary", "epsilon", "mean_flip_fraction", "ci_low", "ci_high", "mean_realized_l2"],
    "asr_vs_distortion": _REMOVAL_COLUMNS,
    "defense_equalization": _REMOVAL_COLUMNS,
    "counterexample": _REMOVAL_COLUMNS,
    "ind_distinguishers": [
        "codec", "distinguisher", "oracle_budget", "wins", "games", "win_rate", "ci_low", "ci_high",
    ],
    "overhead_bench": [
        "d", "element_bytes", "storage_bytes", "measured_bytes", "median_seconds", "iqr_seconds",
        "repetitions", "skipped",
    ],
    "false_alarm_calibration": [
        "codec", "alpha", "latents", "false_alarms", "rate", "ci_low", "ci_high", "bound", "within_bound",
    ],
    "stealthiness_contrast": [
        "adversary", "epsilon", "pooled_trials", "pooled_values", "ks_statistic", "critical_value", "passes",
    ],
}

# x column, y column, and the columns that name a series, in file-name order
PLOT_X_COLUMNS = ("epsilon", "alpha", "oracle_budget")
PLOT_Y_COLUMNS = ("mean_flip_fraction", "asr", "win_rate", "rate")
SERIES_COLUMNS = ("t", "codec", "adversary", "distinguisher")

RATIO_NUMERATOR = "whitenoise"
RATIO_DENOMINATOR = "stealthy"


def csv_schema(scenario: str) -> Dict[str, Any]:
    return {"version": CSV_SCHEMA_VERSION, "columns": list(CSV_SCHEMAS[scenario])}


def write_csv(rows: Sequence[Dict[str, Any]], columns: Sequence[str], path: Union[str, Path]) -> Path:
    """Comma-separated, header row, UTF-8, LF line endings"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(rows), columns=list(columns))
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.10g", encoding="utf-8")
    return path


def json_safe(value: Any) -> Any:
    """Replace non-finite floats with None and numpy scalars with plain Python values"""
    if isinstance(value, dict):
        return {str(key): json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_summary(summary: ScenarioSummary, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json_safe(summary.model_dump(mode="python"))
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return path


def level_crossing(xs: Sequence[float], ys: Sequence[float], level: float = 0.5) -> Optional[float]:
    """First x at which a curve anchored at (0, 0) reaches the level, linearly interpolated"""
    points = sorted(zip(map(float, xs), map(float, ys)))
    if not points or points[0][0] > 0.0:
        points.insert(0, (0.0, 0.0))
    if points[0][1] >= level:
        return points[0][0]
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        if np.isnan(y1):
            continue
        if y1 >= level:
            if np.isnan(y0) or y1 == y0:
                return x1
            return x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    return None


def crossing_bracket(rows: Sequence[Dict[str, Any]], level: float = 0.5) -> Dict[str, Optional[float]]:
    """ASR = level crossing of one adversary's removal rows, bracketed by its CI curves

    The upper CI curve crosses first, so it gives the lower end of the bracket.
    """
    rows = sorted(rows, key=lambda row: row["epsilon"])
    epsilons = [row["epsilon"] for row in rows]
    return {
        "epsilon": level_crossing(epsilons, [row["asr"] for row in rows], level),
        "low": level_crossing(epsilons, [row["ci_high"] for row in rows], level),
        "high": level_crossing(epsilons, [row["ci_low"] for row in rows], level),
    }


def _required_epsilon(frame: pd.DataFrame, target: float, adversary: str) -> float:
    ordered = frame.sort_values("epsilon")
    epsilons = ordered["epsilon"].to_numpy(dtype=np.float64)
    flips = ordered["mean_flip_fraction"].to_numpy(dtype=np.float64)
    if epsilons.size == 0:
        raise InterpolationError(f"no rows for adversary {adversary!r}")
    if np.any(np.diff(flips) < 0):
        raise InterpolationError(f"flip curve of {adversary!r} is not monotone in epsilon")

    crossing = level_crossing(epsilons, flips, target)
    if crossing is None:
        logger.warning("%s never reaches a %.4g flip fraction (max %.4g)", adversary, target, flips.max())
        return float("nan")
    return crossing


def ratio_table(bits_csv: Union[str, Path, pd.DataFrame], targets: Iterable[float]) -> pd.DataFrame:
    """Budget each adversary needs to flip each target fraction, and the whitenoise/stealthy ratio"""
    frame = bits_csv if isinstance(bits_csv, pd.DataFrame) else pd.read_csv(bits_csv)
    missing = {"adversary", "epsilon", "mean_flip_fraction"} - set(frame.columns)
    if missing:
        raise ParameterError(f"bits CSV lacks columns: {', '.join(sorted(missing))}")
    adversaries = sorted(frame["adversary"].unique())
    for needed in (RATIO_NUMERATOR, RATIO_DENOMINATOR):
        if needed not in adversaries:
            raise ParameterError(f"bits CSV has no {needed!r} rows")

    rows = []
    for target in targets:
        if not 0.0 < target <= 1.0:
            raise ParameterError(f"flip target {target} must lie in (0, 1]")
        row: Dict[str, float] = {"target": float(target)}
        for adversary in adversaries:
            row[f"{adversary}_epsilon"] = _required_epsilon(frame[frame["adversary"] == adversary], target, adversary)
        row["ratio"] = row[f"{RATIO_NUMERATOR}_epsilon"] / row[f"{RATIO_DENOMINATOR}_epsilon"]
        rows.append(row)

    columns = ["target"] + [f"{adversary}_epsilon" for adversary in adversaries] + ["ratio"]
    return pd.DataFrame(rows, columns=columns)


def _series_label(columns: Sequence[str], values: Sequence[Any]) -> str:
    parts = []
    for column, value in zip(columns, values):
        parts.append(f"t{int(value)}" if column == "t" else str(value))
    return "_".join(parts)


def emit_plotdata(csv_path: Union[str, Path], out_dir: Union[str, Path, None] = None,
                  series: Optional[Sequence[str]] = None) -> List[Path]:
    """One whitespace-separated file per series with columns: x y ci_low ci_high

    Files are named <csv stem>_<series>.dat and carry no header, so one CSV row
    gives one line. Requested series with no rows get an empty file.
    """
    csv_path = Path(csv_path)
    out_dir = Path(out_dir) if out_dir is not None else csv_path.parent
    frame = pd.read_csv(csv_path)

    x_column = next((column for column in PLOT_X_COLUMNS if column in frame.columns), None)
    y_column = next((column for column in PLOT_Y_COLUMNS if column in frame.columns), None)
    missing = [name for name, column in (("x", x_column), ("y", y_column)) if column is None]
    missing += [column for column in ("ci_low", "ci_high") if column not in frame.columns]
    if missing:
        raise ParameterError(f"{csv_path} lacks plot columns: {', '.join(missing)}")

    series_columns = [column for column in SERIES_COLUMNS if column in frame.columns and column != x_column]
    groups: Dict[str, pd.DataFrame] = {}
    if series_columns:
        for key, group in frame.groupby(series_columns, sort=True):
            key = key if isinstance(key, tuple) else (key,)
            groups[_series_label(series_columns, key)] = group
    else:
        groups["all"] = frame
    for name in series or ():
        groups.setdefault(name, frame.iloc[0:0])

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(groups):
        group = groups[name].sort_values(x_column, kind="stable")
        lines = [
            " ".join(f"{value:.10g}" for value in (row[x_column], row[y_column], row["ci_low"], row["ci_high"]))
            for _, row in group.iterrows()
        ]
        path = out_dir / f"{csv_path.stem}_{name}.dat"
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8", newline="\n")
        written.append(path)
    logger.info("Wrote %d plot data files to %s", len(written), out_dir)
    return written
