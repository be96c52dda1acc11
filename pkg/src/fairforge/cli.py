"""
Command-line interface.

    forge prior sample   --config prior.json --count N --out dir [--keep-noise]
    forge bench generate --groups all [--per-group N | --full] --out dir
    forge train          --model-config model.json --prior-config prior.json --out ckpt/
    forge evaluate       --bundle dir --methods a,b --ckpt model.ckpt --out report.json
    forge sweep          --axis {base_ate,sigma,n,complexity} --ckpt model.ckpt --out dir
    forge stress         --ckpt model.ckpt --out dir
    forge real           --manifest manifest.json --ckpt model.ckpt --out dir
    forge accept         --ckpt model.ckpt --out dir

`--seed`, `--out`, `--threads` and `--log-level` are accepted before or after
the subcommand. Failures are printed to stderr as a JSON object and exit with
status 2 (expected errors) or 1 (anything else).
"""
import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from . import __version__, config
from .acceptance import acceptance_plan, run_acceptance
from .app import (
    ABLATION_AXES,
    FAIRNESS_AXES,
    REFERENCE_METHOD,
    Experiment,
    ExperimentPlan,
    MethodOutcome,
    difference_table,
    pareto_summary,
    rank_table,
)
from .baselines.methods import DEFAULT_METHODS, parse_methods
from .errors import ConfigurationError, ForgeError
from .io.bundles import read_suite, write_prior_sample, write_suite
from .io.checkpoint import load_checkpoint
from .io.reports import emit_report
from .model.training import pretrain
from .model.transformer import ModelConfig
from .prior.case_studies import BENCHMARK_GROUPS, STRESS_GROUPS, CaseGroup, generate_suite
from .prior.scm import PriorConfig, sample_prior_batch

logger = logging.getLogger(__name__)


def _read_json(path: str) -> Dict[str, Any]:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigurationError(f"{path} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON ({exc})") from exc


def _env_int(name: str, default: int) -> int:
    value = os.environ.get(name)
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigurationError(f"{name}={value!r} is not an integer") from exc


def resolve_globals(args: argparse.Namespace) -> argparse.Namespace:
    """Fill absent global flags from the environment, then the defaults."""
    if getattr(args, "seed", None) is None:
        args.seed = _env_int(config.ENV_SEED, config.DEFAULT_SEED)
    if getattr(args, "threads", None) is None:
        args.threads = _env_int(config.ENV_THREADS, config.DEFAULT_THREADS)
    if getattr(args, "log_level", None) is None:
        args.log_level = os.environ.get(config.ENV_LOG_LEVEL) or config.DEFAULT_LOG_LEVEL
    if getattr(args, "out", None) is None:
        args.out = None
    if args.threads < 1:
        raise ConfigurationError("--threads must be at least 1")
    return args


def _groups(spec: str) -> Tuple[str, ...]:
    if spec.strip().lower() == "all":
        return tuple(g.value for g in BENCHMARK_GROUPS)
    if spec.strip().lower() == "stress":
        return tuple(g.value for g in STRESS_GROUPS)
    return tuple(CaseGroup.parse(part).value for part in spec.split(",") if part.strip())


def _imports(items: Optional[Sequence[str]]) -> Tuple[Tuple[str, Path], ...]:
    pairs = []
    for item in items or ():
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise ConfigurationError(f"--import-preds expects name=path, got {item!r}")
        pairs.append((name.strip(), Path(path.strip())))
    return tuple(pairs)


def _out_dir(args: argparse.Namespace, default: str) -> Path:
    return Path(args.out) if args.out else Path(default)


def _report_path(args: argparse.Namespace, default_dir: str, name: str) -> Path:
    out = _out_dir(args, default_dir)
    return out if out.suffix == ".json" else out / name


def _plan(args: argparse.Namespace, **overrides: Any) -> ExperimentPlan:
    methods = parse_methods([args.methods]) if getattr(args, "methods", None) \
        else list(DEFAULT_METHODS)
    values: Dict[str, Any] = {
        "seed": args.seed,
        "workers": args.threads,
        "methods": tuple(methods),
        "checkpoint": Path(args.ckpt) if getattr(args, "ckpt", None) else None,
        "imported": _imports(getattr(args, "import_preds", None)),
    }
    if getattr(args, "per_group", None):
        values["per_group"] = args.per_group
    if getattr(args, "groups", None):
        values["groups"] = _groups(args.groups)
    if getattr(args, "max_context", None):
        values["max_context"] = args.max_context
    values.update(overrides)
    return ExperimentPlan(**values).validate()


def _emit(outcomes: List[MethodOutcome], path: Path, tables: Dict[str, Any],
          summary: Dict[str, Any], methods: Sequence[str],
          extra_reports: Sequence[Any] = ()) -> List[Path]:
    reports = [o.report for o in outcomes] + list(extra_reports)
    if REFERENCE_METHOD in methods and any(o.method == REFERENCE_METHOD for o in outcomes):
        tables["difference_to_avgcntf"] = difference_table(outcomes)
    if reports:
        tables["ranks"] = rank_table(reports)
    return emit_report(reports, path, tables=tables, summary=summary)


def _print(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, default=str))


# Subcommands

def cmd_prior_sample(args: argparse.Namespace) -> int:
    prior = PriorConfig.from_dict(_read_json(args.config)) if args.config \
        else PriorConfig.varied(seed=args.seed)
    samples = sample_prior_batch(prior.validate(), args.count, args.seed,
                                 workers=args.threads, keep_noise=args.keep_noise)
    out = _out_dir(args, "prior_samples")
    for index, sample in enumerate(samples):
        write_prior_sample(sample, out / f"sample_{index:04d}")
    logger.info("Wrote %d prior samples to %s", len(samples), out)
    _print({"out": str(out), "samples": len(samples)})
    return 0


def cmd_bench_generate(args: argparse.Namespace) -> int:
    suite = generate_suite(args.per_group, args.seed, groups=_groups(args.groups),
                           workers=args.threads)
    out = write_suite(suite, _out_dir(args, "bench"))
    _print({"out": str(out), "bundles": len(suite)})
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    model_payload = _read_json(args.model_config) if args.model_config else {}
    if args.steps is not None:
        model_payload["steps"] = args.steps
    if args.epochs is not None:
        model_payload["epochs"] = args.epochs
    model_payload.setdefault("seed", args.seed)
    model_config = ModelConfig.from_dict(model_payload)
    prior_config = PriorConfig.from_dict(_read_json(args.prior_config)) \
        if args.prior_config else PriorConfig.varied(model_config.max_features, seed=args.seed)
    resume = load_checkpoint(args.resume) if args.resume else None
    out = _out_dir(args, "ckpt")
    checkpoint = pretrain(model_config, prior_config, out_dir=out, resume=resume,
                          stop_after=args.stop_after, workers=args.threads,
                          checkpoint_every=args.checkpoint_every,
                          progress=not args.no_progress)
    _print({"checkpoint": str(out / "model.ckpt"),
            **checkpoint.provenance.to_dict()})
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    plan = _plan(args)
    experiment = Experiment(plan)
    bundles = read_suite(args.bundle) if args.bundle else experiment.suite()
    result = experiment.run_tradeoff(bundles, fairness=args.fairness)
    tables = {f"tradeoff_{args.fairness}": result.points}
    path = _report_path(args, "results", "report.json")
    _emit(result.outcomes, path, tables, pareto_summary(result), plan.methods)
    _print({"report": str(path), "pareto_share": result.shares})
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    axes = ABLATION_AXES if args.axis == "all" else (args.axis,)
    plan = _plan(args, axes=tuple(axes))
    experiment = Experiment(plan)
    bundles = read_suite(args.bundle) if args.bundle else None
    if bundles is None and any(a != "complexity" for a in axes):
        bundles = experiment.suite()
    out = _out_dir(args, "results")
    written: Dict[str, str] = {}
    for axis in axes:
        result = experiment.run_ablation(axis, bundles)
        path = out / f"sweep_{axis}.json"
        emit_report(result.reports, path, tables={f"ablation_{axis}": result.table},
                    summary=result.summary)
        written[axis] = str(path)
    _print({"reports": written})
    return 0


def cmd_stress(args: argparse.Namespace) -> int:
    plan = _plan(args)
    experiment = Experiment(plan)
    result = experiment.run_stress(read_suite(args.bundle) if args.bundle else None)
    path = _report_path(args, "results", "stress.json")
    _emit(result.outcomes, path, {"stress": result.table}, result.summary, plan.methods)
    _print({"report": str(path), "groups": result.summary["groups"]})
    return 0


def cmd_real(args: argparse.Namespace) -> int:
    plan = _plan(args)
    experiment = Experiment(plan)
    result = experiment.run_realworld(args.manifest)
    name = result.loaded.manifest.dataset_name
    tables: Dict[str, Any] = {}
    if result.correlations is not None:
        tables[f"kendall_{name}"] = result.correlations
    path = _report_path(args, "results", f"real_{name}.json")
    summary = {
        "dataset": name,
        "manifest_digest": result.loaded.digest,
        "encoding": result.loaded.encoding,
        "counterfactuals": result.loaded.counterfactual is not None,
    }
    _emit(result.fold_outcomes, path, tables, summary, plan.methods, result.pooled)
    _print({"report": str(path), "folds": result.loaded.manifest.folds})
    return 0


def cmd_accept(args: argparse.Namespace) -> int:
    if not args.ckpt:
        raise ConfigurationError("accept needs --ckpt")
    plan = acceptance_plan(args.ckpt, seed=args.seed,
                           per_group=args.per_group or config.ACCEPTANCE_PER_GROUP,
                           workers=args.threads)
    result = run_acceptance(plan, reversion_bundles=args.reversion_bundles)
    tables: Dict[str, Any] = {"acceptance_checks": result.table,
                              "reversion": result.reversion_table}
    for axis, ablation in result.ablations.items():
        tables[f"ablation_{axis}"] = ablation.table
    summary = {"passed": result.passed,
               "checks": {c.name: c.passed for c in result.checks}}
    path = _report_path(args, "results", "acceptance.json")
    _emit(result.tradeoff.outcomes, path, tables, summary, plan.methods)
    _print({"report": str(path), **summary})
    return 0


def _global_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help=f"Root seed (env {config.ENV_SEED})")
    parent.add_argument("--out", default=argparse.SUPPRESS, help="Output file or directory")
    parent.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help=f"Worker threads (env {config.ENV_THREADS})")
    parent.add_argument("--log-level", dest="log_level", default=argparse.SUPPRESS,
                        help=f"Logging level (env {config.ENV_LOG_LEVEL})")
    return parent


def _method_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ckpt", help="Trained model checkpoint")
    parser.add_argument("--methods", help="Comma-separated methods "
                        f"(default: {','.join(DEFAULT_METHODS)})")
    parser.add_argument("--import-preds", dest="import_preds", action="append",
                        metavar="NAME=PATH", help="External predictions (CSV or directory)")
    parser.add_argument("--per-group", dest="per_group", type=int)
    parser.add_argument("--groups", help="Comma-separated groups, 'all' or 'stress'")
    parser.add_argument("--max-context", dest="max_context", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="forge", parents=[common],
                                     description="Causal fairness prior, in-context model "
                                                 "and benchmark harness.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    prior = commands.add_parser("prior", help="Synthetic prior").add_subparsers(
        dest="action", required=True)
    sample = prior.add_parser("sample", parents=[common], help="Write prior samples")
    sample.add_argument("--config", help="Prior config JSON")
    sample.add_argument("--count", type=int, default=10)
    sample.add_argument("--keep-noise", dest="keep_noise", action="store_true")
    sample.set_defaults(handler=cmd_prior_sample)

    bench = commands.add_parser("bench", help="Case-study suites").add_subparsers(
        dest="action", required=True)
    generate = bench.add_parser("generate", parents=[common], help="Write a case-study suite")
    generate.add_argument("--groups", default="all")
    size = generate.add_mutually_exclusive_group()
    size.add_argument("--per-group", dest="per_group", type=int,
                      default=config.SMOKE_PER_GROUP)
    size.add_argument("--full", action="store_const", dest="per_group",
                      const=config.FULL_PER_GROUP,
                      help=f"Full-scale suite, {config.FULL_PER_GROUP} bundles per group")
    generate.set_defaults(handler=cmd_bench_generate)

    train = commands.add_parser("train", parents=[common], help="Pre-train the model")
    train.add_argument("--model-config", dest="model_config")
    train.add_argument("--prior-config", dest="prior_config")
    train.add_argument("--resume", help="Checkpoint to continue from")
    train.add_argument("--steps", type=int, help="Steps per epoch")
    train.add_argument("--epochs", type=int)
    train.add_argument("--stop-after", dest="stop_after", type=int)
    train.add_argument("--checkpoint-every", dest="checkpoint_every", type=int,
                       default=config.CHECKPOINT_EVERY)
    train.add_argument("--no-progress", dest="no_progress", action="store_true")
    train.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser("evaluate", parents=[common],
                                   help="Fairness/accuracy trade-off on bundles")
    evaluate.add_argument("--bundle", help="Bundle or suite directory (generated if absent)")
    evaluate.add_argument("--fairness", choices=FAIRNESS_AXES, default="ate")
    _method_flags(evaluate)
    evaluate.set_defaults(handler=cmd_evaluate)

    sweep = commands.add_parser("sweep", parents=[common], help="Ablation by quintiles")
    sweep.add_argument("--axis", choices=ABLATION_AXES + ("all",), required=True)
    sweep.add_argument("--bundle", help="Bundle or suite directory (generated if absent)")
    _method_flags(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    stress = commands.add_parser("stress", parents=[common],
                                 help="Groups violating the prior's assumptions")
    stress.add_argument("--bundle", help="Bundle or suite directory (generated if absent)")
    _method_flags(stress)
    stress.set_defaults(handler=cmd_stress)

    real = commands.add_parser("real", parents=[common], help="K-fold real-world evaluation")
    real.add_argument("--manifest", required=True)
    _method_flags(real)
    real.set_defaults(handler=cmd_real)

    accept = commands.add_parser("accept", parents=[common],
                                 help="Desk-scale acceptance checks of a checkpoint")
    accept.add_argument("--ckpt", help="Trained model checkpoint")
    accept.add_argument("--per-group", dest="per_group", type=int,
                        help=f"Bundles per group (default {config.ACCEPTANCE_PER_GROUP})")
    accept.add_argument("--reversion-bundles", dest="reversion_bundles", type=int,
                        default=config.ACCEPTANCE_REVERSION_BUNDLES)
    accept.set_defaults(handler=cmd_accept)
    return parser


def configure_logging(level: str) -> None:
    numeric = logging.getLevelName(str(level).upper())
    if not isinstance(numeric, int):
        raise ConfigurationError(f"unknown log level {level!r}")
    logging.basicConfig(level=numeric, format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                        force=True)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse `argv`, run the subcommand and return the exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolve_globals(args)
        configure_logging(args.log_level)
        return args.handler(args)
    except ForgeError as exc:
        logger.debug("Command failed", exc_info=True)
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        logger.debug("Unexpected failure", exc_info=True)
        print(json.dumps({"error": "internal_error", "message": str(exc)}), file=sys.stderr)
        return 1
