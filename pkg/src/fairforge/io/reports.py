"""
Report emission and imported predictions.

`emit_report` writes the reports as a JSON array and, next to it in
`plot_data/`, flat CSVs: one row per report (`metrics.csv`), the AE histograms
in long form (`ae_histograms.csv`) and any extra tables an experiment
produced (trade-off points, quintile tables, correlation tables, ...).
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .. import config
from ..algorithms.evaluation import MetricsReport
from ..core.tabular import PredictionSet
from ..errors import FormatError, SchemaError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
REPORT_FIELDS: List[str] = list(MetricsReport(dataset_id="", method="").to_dict())


def _clean(value: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def histogram_rows(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    rows = []
    for report in reports:
        summary = report.ae_summary
        if summary is None:
            continue
        edges = summary.bin_edges
        for i, count in enumerate(summary.histogram):
            rows.append({"dataset_id": report.dataset_id, "method": report.method,
                         "group": report.group, "fold": report.fold,
                         "bin_low": float(edges[i]), "bin_high": float(edges[i + 1]),
                         "count": int(count)})
    return pd.DataFrame(rows, columns=["dataset_id", "method", "group", "fold",
                                       "bin_low", "bin_high", "count"])


def metrics_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    """One row per report; the histogram column is left to `histogram_rows`."""
    rows = []
    for report in reports:
        row = report.to_dict()
        row.pop("ae_histogram")
        rows.append(row)
    columns = [c for c in REPORT_FIELDS if c != "ae_histogram"]
    frame = pd.DataFrame(rows)
    for column in columns:
        if column not in frame.columns:
            frame[column] = None
    extra = sorted(c for c in frame.columns if c not in columns)
    return frame[columns + extra]


def write_table(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=config.CSV_FLOAT_FORMAT)
    return path


def emit_report(reports: Sequence[MetricsReport], path: PathLike,
                tables: Optional[Mapping[str, pd.DataFrame]] = None,
                summary: Optional[Dict[str, Any]] = None) -> List[Path]:
    """
    Write reports as JSON plus plot-ready CSVs.

    Args:
        reports: Reports to write; an empty list yields an empty JSON array.
        path: Target JSON file; CSVs go to `plot_data/` in the same directory.
        tables: Extra named tables written as `plot_data/<name>.csv`.
        summary: Aggregates written to `<stem>_summary.json` when given.

    Returns:
        Every file written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps([_clean(r.to_dict()) for r in reports], indent=2),
                    encoding="utf-8")
    written = [path]
    plot_dir = path.parent / config.REPORT_DIRNAME
    if reports:
        written.append(write_table(metrics_frame(reports), plot_dir / "metrics.csv"))
        histograms = histogram_rows(reports)
        if len(histograms):
            written.append(write_table(histograms, plot_dir / "ae_histograms.csv"))
    for name, frame in (tables or {}).items():
        written.append(write_table(frame, plot_dir / f"{name}.csv"))
    if summary is not None:
        summary_path = path.with_name(f"{path.stem}_summary.json")
        summary_path.write_text(json.dumps(_clean(summary), indent=2, sort_keys=True),
                                encoding="utf-8")
        written.append(summary_path)
    logger.info("Report written to %s (%d rows, %d files)", path, len(reports), len(written))
    return written


def read_report(path: PathLike) -> List[Dict[str, Any]]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid report ({exc})") from exc
    if not isinstance(payload, list):
        raise FormatError(f"{path}: a report must be a JSON array")
    return payload


def import_predictions(path: PathLike, A: np.ndarray, labels: Optional[np.ndarray],
                       row_ids: np.ndarray) -> PredictionSet:
    """
    Read an external method's predictions for a set of test rows.

    The CSV needs `row_id` and `prob` columns and may carry `prob_cf`. Rows are
    matched by id, so the file may list any superset of the test rows.
    """
    path = Path(path)
    frame = pd.read_csv(path)
    missing = [c for c in ("row_id", "prob") if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    if frame["row_id"].duplicated().any():
        raise SchemaError(f"{path}: duplicate row ids")
    frame = frame.set_index("row_id")
    wanted = np.asarray(row_ids, dtype=np.int64)
    absent = np.setdiff1d(wanted, frame.index.to_numpy())
    if absent.size:
        raise SchemaError(f"{path}: no predictions for {absent.size} test rows")
    rows = frame.loc[wanted]
    probs_cf = None
    if "prob_cf" in rows.columns:
        if rows["prob_cf"].isna().any():
            raise SchemaError(f"{path}: missing counterfactual predictions")
        probs_cf = rows["prob_cf"].to_numpy(dtype=np.float64)
    if rows["prob"].isna().any():
        raise SchemaError(f"{path}: missing predictions")
    return PredictionSet(probs=rows["prob"].to_numpy(dtype=np.float64), A=A, labels=labels,
                         probs_cf=probs_cf, row_ids=wanted)


def export_predictions(predictions: PredictionSet, path: PathLike) -> Path:
    """Write predictions in the format `import_predictions` reads."""
    ids = predictions.row_ids if predictions.row_ids is not None \
        else np.arange(predictions.n_rows)
    frame = pd.DataFrame({"row_id": ids, "prob": predictions.probs})
    if predictions.probs_cf is not None:
        frame["prob_cf"] = predictions.probs_cf
    return write_table(frame, path)

