"""
Real-world dataset ingestion.

A manifest is a JSON file describing an observational CSV: its column schema,
the protected and target columns, and optionally a row-aligned counterfactual
CSV (the same units with the protected attribute flipped) and a CSV of fair
noise terms. Counterfactual twins and noise terms are inputs here; nothing in
this module infers them.

Example manifest:

    {
      "name": "law_school",
      "path": "law.csv",
      "columns": {"UGPA": "numeric", "LSAT": "numeric", "Race": "binary",
                  "Sex": "binary", "FYA": "numeric"},
      "protected": "Race",
      "protected_positive": "Black",
      "target": "FYA",
      "target_threshold": "mean",
      "counterfactual_path": "law_cf.csv",
      "fair_noise_path": "law_noise.csv",
      "folds": 5
    }

Relative paths are resolved against the manifest's directory.
"""
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .. import config
from ..core.tabular import TabularDataset
from ..errors import ConfigurationError, SchemaError

logger = logging.getLogger(__name__)

COLUMN_KINDS: Tuple[str, ...] = ("numeric", "binary", "categorical")


@dataclass(frozen=True)
class DatasetManifest:
    """
    Description of a real-world dataset and its optional companion files.

    Attributes:
        path: Observational CSV.
        columns: Column name to kind (numeric, binary or categorical), in file order.
        protected: Name of the protected column.
        target: Name of the target column.
        counterfactual_path: Row-aligned CSV of counterfactual twins, if any.
        fair_noise_path: Row-aligned CSV of fair noise terms, if any.
        folds: Number of cross-validation folds.
        name: Dataset name used in reports.
        protected_positive: Value of the protected column encoded as 1.
        target_positive: Value of a binary target encoded as 1.
        target_threshold: Binarizes a numeric target as y >= threshold;
            "mean" or "median" use the statistic of the observational file.
    """

    path: Path
    columns: Tuple[Tuple[str, str], ...]
    protected: str
    target: str
    counterfactual_path: Optional[Path] = None
    fair_noise_path: Optional[Path] = None
    folds: int = config.KFOLD_SPLITS
    name: str = ""
    protected_positive: Optional[str] = None
    target_positive: Optional[str] = None
    target_threshold: Optional[Union[float, str]] = None

    def validate(self) -> "DatasetManifest":
        kinds = dict(self.columns)
        if len(kinds) != len(self.columns):
            raise SchemaError("manifest lists a column twice")
        for name, kind in self.columns:
            if kind not in COLUMN_KINDS:
                raise SchemaError(f"column {name!r} has unknown kind {kind!r}")
        for role, column in (("protected", self.protected), ("target", self.target)):
            if column not in kinds:
                raise SchemaError(f"{role} column {column!r} is not in the schema")
        if self.protected == self.target:
            raise SchemaError("protected and target must be different columns")
        if kinds[self.protected] == "categorical":
            raise SchemaError("the protected column must be binary")
        if self.target_threshold is not None:
            if kinds[self.target] != "numeric":
                raise SchemaError("target_threshold needs a numeric target")
            if isinstance(self.target_threshold, str) and \
                    self.target_threshold not in ("mean", "median"):
                raise ConfigurationError("target_threshold must be a number, 'mean' or 'median'")
        if self.folds < 2:
            raise ConfigurationError("folds must be at least 2")
        return self

    @property
    def dataset_name(self) -> str:
        return self.name or self.path.stem

    @classmethod
    def from_dict(cls, payload: Dict[str, Any],
                  base_dir: Union[str, Path] = ".") -> "DatasetManifest":
        base = Path(base_dir)

        def resolve(value: Optional[str]) -> Optional[Path]:
            if value is None:
                return None
            path = Path(value)
            return path if path.is_absolute() else base / path

        try:
            columns = payload["columns"]
            if isinstance(columns, dict):
                pairs = tuple((str(k), str(v)) for k, v in columns.items())
            else:
                pairs = tuple((str(c["name"]), str(c["type"])) for c in columns)
            threshold = payload.get("target_threshold")
            if threshold is not None and not isinstance(threshold, str):
                threshold = float(threshold)
            manifest = cls(
                path=resolve(payload["path"]),
                columns=pairs,
                protected=str(payload["protected"]),
                target=str(payload["target"]),
                counterfactual_path=resolve(payload.get("counterfactual_path")),
                fair_noise_path=resolve(payload.get("fair_noise_path")),
                folds=int(payload.get("folds", config.KFOLD_SPLITS)),
                name=str(payload.get("name", "")),
                protected_positive=_optional_str(payload.get("protected_positive")),
                target_positive=_optional_str(payload.get("target_positive")),
                target_threshold=threshold,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"invalid manifest: {exc}") from exc
        return manifest.validate()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "path": str(self.path),
            "columns": dict(self.columns),
            "protected": self.protected,
            "target": self.target,
            "counterfactual_path": _optional_str(self.counterfactual_path),
            "fair_noise_path": _optional_str(self.fair_noise_path),
            "folds": self.folds,
            "protected_positive": self.protected_positive,
            "target_positive": self.target_positive,
            "target_threshold": self.target_threshold,
        }


def _optional_str(value: Any) -> Optional[str]:
    return None if value is None else str(value)


class LoadedDataset(NamedTuple):
    """A manifest's data after encoding."""
    manifest: DatasetManifest
    dataset: TabularDataset
    counterfactual: Optional[TabularDataset]
    fair_noise: Optional[Dict[str, np.ndarray]]
    encoding: Dict[str, Any]
    digest: str


def read_manifest(path: Union[str, Path]) -> DatasetManifest:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: manifest is not valid JSON ({exc})") from exc
    return DatasetManifest.from_dict(payload, base_dir=path.parent)


def read_csv(path: Path, required: Optional[List[str]] = None) -> pd.DataFrame:
    """Read a CSV with a header row, rejecting missing values and absent columns."""
    if not path.exists():
        raise SchemaError(f"{path} does not exist")
    frame = pd.read_csv(path)
    missing = [c for c in (required or []) if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    if required is not None:
        frame = frame[required]
    if frame.isna().to_numpy().any():
        bad = [c for c in frame.columns if frame[c].isna().any()]
        raise SchemaError(f"{path}: missing values in columns {bad}")
    return frame


def _binary_mapping(values: pd.Series, column: str,
                    positive: Optional[str]) -> Dict[Any, int]:
    levels = sorted(values.unique().tolist(), key=str)
    if len(levels) > 2:
        raise SchemaError(f"column {column!r} has {len(levels)} distinct values, expected 2")
    if positive is not None:
        match = [v for v in levels if str(v) == str(positive)]
        if not match:
            raise SchemaError(f"column {column!r} has no value {positive!r}")
        return {v: int(v in match) for v in levels}
    if set(levels) <= {0, 1}:
        return {v: int(v) for v in levels}
    return {v: i for i, v in enumerate(levels)}


def _encode_binary(values: pd.Series, mapping: Dict[Any, int], column: str) -> np.ndarray:
    unknown = set(values.unique().tolist()) - set(mapping)
    if unknown:
        raise SchemaError(f"column {column!r} has values outside {sorted(map(str, mapping))}")
    return values.map(mapping).to_numpy(dtype=np.int64)


class _Encoder:
    """Column encodings fitted on the observational file and reused for the twins."""

    def __init__(self, manifest: DatasetManifest, frame: pd.DataFrame):
        self.manifest = manifest
        kinds = dict(manifest.columns)
        self.binary: Dict[str, Dict[Any, int]] = {}
        self.categories: Dict[str, List[Any]] = {}
        for name, kind in manifest.columns:
            if name == manifest.target:
                continue
            if kind == "binary":
                positive = manifest.protected_positive if name == manifest.protected else None
                self.binary[name] = _binary_mapping(frame[name], name, positive)
            elif kind == "categorical":
                self.categories[name] = sorted(frame[name].unique().tolist(), key=str)
        self.target_mapping: Optional[Dict[Any, int]] = None
        self.threshold: Optional[float] = None
        target = frame[manifest.target]
        if manifest.target_threshold is None:
            if kinds[manifest.target] == "categorical":
                raise SchemaError("a categorical target must be declared binary")
            self.target_mapping = _binary_mapping(target, manifest.target,
                                                  manifest.target_positive)
        elif manifest.target_threshold == "mean":
            self.threshold = float(target.mean())
        elif manifest.target_threshold == "median":
            self.threshold = float(target.median())
        else:
            self.threshold = float(manifest.target_threshold)

    def target(self, frame: pd.DataFrame) -> np.ndarray:
        values = frame[self.manifest.target]
        if self.threshold is not None:
            y = (values.to_numpy(dtype=np.float64) >= self.threshold).astype(np.int64)
        else:
            y = _encode_binary(values, self.target_mapping, self.manifest.target)
        return y

    def inputs(self, frame: pd.DataFrame) -> Tuple[np.ndarray, List[str], int]:
        """Encoded input matrix, its column names and the protected position."""
        blocks: List[np.ndarray] = []
        names: List[str] = []
        protected_index = -1
        for name, kind in self.manifest.columns:
            if name == self.manifest.target:
                continue
            if name == self.manifest.protected:
                protected_index = len(names)
            if kind == "numeric":
                values = pd.to_numeric(frame[name], errors="coerce")
                if values.isna().any():
                    raise SchemaError(f"column {name!r} is declared numeric but is not")
                blocks.append(values.to_numpy(dtype=np.float64)[:, None])
                names.append(name)
            elif kind == "binary":
                blocks.append(_encode_binary(frame[name], self.binary[name], name)[:, None]
                              .astype(np.float64))
                names.append(name)
            else:
                levels = self.categories[name]
                unknown = set(frame[name].unique().tolist()) - set(levels)
                if unknown:
                    raise SchemaError(f"column {name!r} has unseen categories {sorted(map(str, unknown))}")
                column = pd.Categorical(frame[name], categories=levels)
                dummies = pd.get_dummies(column, dtype=np.float64)
                blocks.append(dummies.to_numpy())
                names += [f"{name}={level}" for level in levels]
        matrix = np.hstack(blocks) if blocks else np.zeros((len(frame), 0))
        return matrix, names, protected_index

    def describe(self) -> Dict[str, Any]:
        return {
            "binary": {k: {str(v): code for v, code in m.items()} for k, m in self.binary.items()},
            "categorical": {k: [str(v) for v in levels] for k, levels in self.categories.items()},
            "target": None if self.target_mapping is None
            else {str(v): code for v, code in self.target_mapping.items()},
            "target_threshold": self.threshold,
        }


def _file_digest(path: Optional[Path]) -> str:
    if path is None:
        return ""
    return hashlib.sha256(path.read_bytes()).hexdigest()


def manifest_digest(manifest: DatasetManifest) -> str:
    """Hash of the manifest and the bytes of every file it names."""
    payload = {
        "manifest": {k: v for k, v in manifest.to_dict().items()
                     if k not in ("path", "counterfactual_path", "fair_noise_path")},
        "files": [_file_digest(p) for p in (manifest.path, manifest.counterfactual_path,
                                             manifest.fair_noise_path)],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def load_manifest(path: Union[str, Path, DatasetManifest]) -> LoadedDataset:
    """
    Load and encode a manifest's files.

    Binary columns are mapped to {0, 1} (the declared positive value, or the
    second of the sorted values, becomes 1) and categorical columns are
    one-hot encoded with categories fitted on the observational file.

    Raises:
        SchemaError: On missing files or columns, missing values, non-binary
            protected or target columns, or misaligned companion files.
    """
    manifest = path if isinstance(path, DatasetManifest) else read_manifest(path)
    names = [name for name, _ in manifest.columns]
    frame = read_csv(manifest.path, names)
    encoder = _Encoder(manifest, frame)
    matrix, columns, protected_index = encoder.inputs(frame)
    dataset = TabularDataset.from_matrix(matrix, encoder.target(frame), columns,
                                         protected_index, target_name=manifest.target)
    if dataset.A.min() == dataset.A.max():
        raise SchemaError(f"protected column {manifest.protected!r} has a single class")

    counterfactual = None
    if manifest.counterfactual_path is not None:
        cf_frame = read_csv(manifest.counterfactual_path)
        if len(cf_frame) != len(frame):
            raise SchemaError(
                f"{manifest.counterfactual_path}: {len(cf_frame)} rows, expected {len(frame)}"
            )
        inputs = [n for n in names if n != manifest.target]
        missing = [c for c in inputs if c not in cf_frame.columns]
        if missing:
            raise SchemaError(f"{manifest.counterfactual_path}: missing columns {missing}")
        cf_matrix, _, _ = encoder.inputs(cf_frame)
        cf_y = encoder.target(cf_frame) if manifest.target in cf_frame.columns else None
        counterfactual = TabularDataset.from_matrix(cf_matrix, cf_y, columns, protected_index,
                                                    target_name=manifest.target)
        if not np.array_equal(counterfactual.A, 1 - dataset.A):
            raise SchemaError(
                f"{manifest.counterfactual_path}: protected column is not the flipped original"
            )
    else:
        logger.warning("%s: no counterfactual file; ATE and AE will be unavailable",
                       manifest.dataset_name)

    fair_noise = None
    if manifest.fair_noise_path is not None:
        noise_frame = read_csv(manifest.fair_noise_path)
        if len(noise_frame) != len(frame):
            raise SchemaError(
                f"{manifest.fair_noise_path}: {len(noise_frame)} rows, expected {len(frame)}"
            )
        fair_noise = {}
        for column in noise_frame.columns:
            values = pd.to_numeric(noise_frame[column], errors="coerce")
            if values.isna().any():
                raise SchemaError(f"{manifest.fair_noise_path}: column {column!r} is not numeric")
            fair_noise[str(column)] = values.to_numpy(dtype=np.float64)

    digest = manifest_digest(manifest)
    logger.info("Loaded %s: %d rows, %d features (digest %s)", manifest.dataset_name,
                dataset.n_rows, dataset.n_features, digest)
    return LoadedDataset(manifest, dataset, counterfactual, fair_noise, encoder.describe(),
                         digest)


def write_dataset(dataset: TabularDataset, path: Union[str, Path]) -> Path:
    """Write a dataset as CSV: input columns in order, then the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.full_matrix(), columns=list(dataset.column_names))
    frame[dataset.protected_name] = dataset.A
    if dataset.y is not None:
        frame[dataset.target_name] = dataset.y
    frame.to_csv(path, index=False, float_format=config.CSV_FLOAT_FORMAT)
    return path


def read_dataset(path: Union[str, Path], protected: str = "A", target: Optional[str] = "y",
                 ) -> TabularDataset:
    """Read a CSV written by `write_dataset`; every non-target column is an input."""
    path = Path(path)
    frame = read_csv(path)
    if protected not in frame.columns:
        raise SchemaError(f"{path}: missing protected column {protected!r}")
    y = None
    if target is not None and target in frame.columns:
        y = frame[target].to_numpy()
        frame = frame.drop(columns=[target])
    columns = [str(c) for c in frame.columns]
    return TabularDataset.from_matrix(frame.to_numpy(dtype=np.float64), y, columns,
                                      columns.index(protected), target_name=target or "y")
