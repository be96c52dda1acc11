"""
On-disk layout of prior samples and case-study bundles.

Prior sample directory:
    biased.csv          A, x1..xm, y
    fair_targets.csv    y_fair
    scm.json            the SCM and, optionally, the noise draws

Bundle directory:
    obs.csv             observational rows (A, features, Y)
    cf.csv              counterfactual twins
    fair_targets.csv    fair outcome
    ground_truth.json   fair variables, base ATE and generating config

A suite directory holds one bundle directory per bundle plus `suite.json`
listing them in order.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from .. import config
from ..errors import FormatError, SchemaError
from ..prior.case_studies import CaseBundle, CaseStudyConfig
from ..prior.scm import NoiseRecord, PriorSample, ScmSpec
from .manifest import read_csv, read_dataset, write_dataset

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _write_json(payload: Any, path: Path) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    return path


def _read_json(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise SchemaError(f"{path} does not exist")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def _write_column(values: np.ndarray, name: str, path: Path) -> Path:
    pd.DataFrame({name: values}).to_csv(path, index=False, float_format=config.CSV_FLOAT_FORMAT)
    return path


def write_prior_sample(sample: PriorSample, directory: PathLike) -> Path:
    """Write one prior sample; the noise draws are included when the sample kept them."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_dataset(sample.dataset, directory / "biased.csv")
    _write_column(sample.y_fair, "y_fair", directory / "fair_targets.csv")
    payload: Dict[str, Any] = {"seed": sample.seed, "scm": sample.scm.to_dict(), "noise": None}
    if sample.noise_draws is not None:
        payload["noise"] = {name: np.asarray(value).tolist()
                            for name, value in sample.noise_draws._asdict().items()}
    _write_json(payload, directory / "scm.json")
    return directory


def read_prior_sample(directory: PathLike) -> PriorSample:
    directory = Path(directory)
    dataset = read_dataset(directory / "biased.csv", protected="A", target="y")
    y_fair = read_csv(directory / "fair_targets.csv", ["y_fair"])["y_fair"].to_numpy(np.int64)
    payload = _read_json(directory / "scm.json")
    noise = payload.get("noise")
    record = None
    if noise is not None:
        record = NoiseRecord(**{name: np.asarray(noise[name], dtype=np.float64)
                                for name in NoiseRecord._fields})
    return PriorSample(dataset=dataset, y_fair=y_fair, scm=ScmSpec.from_dict(payload["scm"]),
                       noise_draws=record, seed=int(payload.get("seed", 0)))


def write_bundle(bundle: CaseBundle, directory: PathLike) -> Path:
    """Write one case-study bundle."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_dataset(bundle.observational, directory / "obs.csv")
    write_dataset(bundle.counterfactual, directory / "cf.csv")
    _write_column(bundle.y_fair, "y_fair", directory / "fair_targets.csv")
    _write_json({
        "bundle_id": bundle.bundle_id,
        "group": bundle.group.value,
        "base_ate": bundle.base_ate,
        "config": bundle.config.to_dict(),
        "fair_variables": {k: np.asarray(v).tolist() for k, v in bundle.fair_variables.items()},
    }, directory / "ground_truth.json")
    return directory


def read_bundle(directory: PathLike) -> CaseBundle:
    directory = Path(directory)
    truth = _read_json(directory / "ground_truth.json")
    observational = read_dataset(directory / "obs.csv", protected="A", target="Y")
    counterfactual = read_dataset(directory / "cf.csv", protected="A", target="Y")
    if counterfactual.n_rows != observational.n_rows:
        raise SchemaError(f"{directory}: cf.csv is not row-aligned with obs.csv")
    y_fair = read_csv(directory / "fair_targets.csv", ["y_fair"])["y_fair"].to_numpy(np.int64)
    try:
        return CaseBundle(
            observational=observational,
            counterfactual=counterfactual,
            y_fair=y_fair,
            fair_variables={k: np.asarray(v, dtype=np.float64)
                            for k, v in truth["fair_variables"].items()},
            base_ate=float(truth["base_ate"]),
            config=CaseStudyConfig.from_dict(truth["config"]),
            bundle_id=str(truth.get("bundle_id", directory.name)),
        )
    except KeyError as exc:
        raise FormatError(f"{directory}: ground_truth.json lacks {exc}") from exc


def write_suite(suite: Sequence[CaseBundle], directory: PathLike) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ids: List[str] = []
    for index, bundle in enumerate(suite):
        name = bundle.bundle_id or f"bundle-{index:04d}"
        write_bundle(bundle, directory / name)
        ids.append(name)
    _write_json({"bundles": ids}, directory / "suite.json")
    logger.info("Wrote %d bundles to %s", len(ids), directory)
    return directory


def read_suite(directory: PathLike) -> List[CaseBundle]:
    """Read a suite directory, or a single bundle directory as a one-bundle suite."""
    directory = Path(directory)
    if (directory / "ground_truth.json").exists():
        return [read_bundle(directory)]
    index = _read_json(directory / "suite.json")
    return [read_bundle(directory / name) for name in index["bundles"]]
