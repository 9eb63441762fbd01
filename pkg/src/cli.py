"""Command-line front end: simulate | classify | validate | sweep."""
import argparse
import json
import logging
import os
import sys
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .analysis.replica import run_replica, summarize
from .analysis.suites import default_suites
from .analysis.trichotomy import calibrate_horizon, classify_trichotomy, point_spec, with_horizon, zero_one_sweep
from .audit.logger import ResultsLogger, configure_logging
from .audit.metrics import RunMetrics
from .common.exceptions import ArtifactIOError, ConfigError, SuiteFailure
from .common.models import HorizonCalibration, PilotMode, ReplicaSummary, TrichotomyEstimate
from .common.rng import replica_seed
from .config.presets import ACCEPTANCE_SIZES, PRESETS, catalogue
from .config.settings import ExperimentConfig, build_config, config_hash
from .environment.core import dump_environment
from .graphical.arrows import dump_arrows
from .graphical.paths import dump_path
from .orchestration.orchestrator import ExperimentOrchestrator, ReplicaExecutor
from .reporting.generator import ReportGenerator
from .reporting.utils import ensure_directory, render_text, reset_file, write_csv, write_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SUITE = 2
EXIT_IO = 3


def _log_progress(stage: str, progress: float, message: str):
    logger.info("[Progress] %s %.0f%% %s", stage, progress, message)


class Context:
    def __init__(self, config: ExperimentConfig, args: argparse.Namespace):
        self.config = config
        self.args = args
        self.hash = config_hash(config)
        self.seed = config.rng.base_seed
        self.workers = args.workers

    def output_dir(self, command: str) -> str:
        return ensure_directory(os.path.join(self.config.output.directory, command))

    def results(self, directory: str, command: str) -> ResultsLogger:
        filename = os.path.join(directory, f"{command}.jsonl")
        reset_file(filename)
        return ResultsLogger(filename, self.hash, self.seed)

    def wants(self, fmt: str) -> bool:
        return fmt in self.config.output.formats


#simulate
def _simulate_one(config: ExperimentConfig, index: int) -> Tuple[ReplicaSummary, str, str, str]:
    run_cfg = config.run
    run = run_replica(config.model, run_cfg.horizon, replica_seed(config.rng.base_seed, index), index,
                      engine=run_cfg.engine, jump_cap=run_cfg.jump_cap, margin=run_cfg.margin)
    summary = summarize(index, run.path, run_cfg.level)
    arrows = render_text(dump_arrows, run.arrows) if run.arrows is not None else ""
    return summary, render_text(dump_environment, run.env), arrows, render_text(dump_path, run.path)


def cmd_simulate(ctx: Context) -> int:
    n = ctx.args.replicas or ctx.config.run.replicas
    out = ctx.output_dir("simulate")
    results = ctx.results(out, "simulate")
    executor = ReplicaExecutor(ctx.workers, _log_progress)
    outputs = executor.map(partial(_simulate_one, ctx.config), range(n), stage="simulate")

    metrics = RunMetrics()
    for summary, env_text, arrows_text, path_text in outputs:
        metrics.update(summary)
        stem = os.path.join(out, f"replica_{summary.index:04d}")
        if ctx.wants("text"):
            write_text(f"{stem}.env.txt", env_text)
            if arrows_text:
                write_text(f"{stem}.arrows.txt", arrows_text)
            write_text(f"{stem}.path.txt", path_text)
        if ctx.wants("jsonl"):
            results.log_record("replica", summary.model_dump(mode="json"))
        print(f"[Simulate] replica {summary.index}: status={summary.status.value} "
              f"jumps={summary.n_jumps} final={summary.final_position}")

    counts = metrics.get_metrics()
    if ctx.wants("jsonl"):
        results.log_record("run_metrics", counts)
    print(f"[Simulate] {counts['completed']}/{counts['replicas']} completed, "
          f"{counts['window_violations']} window violations, {counts['exploded']} exploded")
    if metrics.all_abnormal:
        print("[Simulate] every replica terminated abnormally", file=sys.stderr)
        return EXIT_SUITE
    return EXIT_OK


#classify / sweep
_CLASS_FIELDS = ("p_right", "p_left", "p_rec", "p_unclassified")


def _estimate_rows(ctx: Context, estimate: TrichotomyEstimate, point: Optional[int] = None) -> List[List[Any]]:
    rows = []
    for name in _CLASS_FIELDS:
        p = getattr(estimate, name)
        row = [ctx.hash, ctx.seed, estimate.model_tag, name, p.estimate, p.lower, p.upper, p.successes, p.trials]
        rows.append(row if point is None else [point] + row)
    return rows


_CSV_HEADER = ["config_hash", "seed", "model", "class", "estimate", "lower", "upper", "successes", "trials"]


def _pilot(ctx: Context, spec: Any, seed: int, executor: ReplicaExecutor,
           results: ResultsLogger) -> Tuple[Any, float, Optional[HorizonCalibration]]:
    """Run the baseline pilot for ``spec``; refuse a short horizon unless the run asks for rescaling."""
    run = ctx.config.run
    if run.pilot is PilotMode.OFF:
        return spec, run.horizon, None
    spec, calibration = calibrate_horizon(
        spec, run.horizon, run.level, seed, executor, pilot_replicas=run.pilot_replicas,
        target=run.pilot_agreement, rescale=run.pilot is PilotMode.RESCALE,
    )
    if ctx.wants("jsonl"):
        results.log_record("calibration", calibration.model_dump(mode="json"))
    agreement = calibration.agreement
    classified = calibration.classified
    print(f"[Pilot] {calibration.baseline_tag} at T={calibration.horizon:g} K={calibration.level}: "
          f"{classified.estimate:.4f} classified, {agreement.estimate:.4f} {calibration.expected.value} "
          f"({'ok' if calibration.passed else 'too short'})")
    if not calibration.passed:
        raise ConfigError(
            f"horizon T={calibration.horizon:g} is too short for K={run.level}",
            [f"run.T: baseline {calibration.baseline_tag} classified {classified.successes} of {classified.trials} "
             f"pilot replicas, {agreement.successes} of them {calibration.expected.value} (upper bounds "
             f"{classified.upper:.3f} and {agreement.upper:.3f}, target {calibration.target}); "
             f"raise run.T, lower run.K or set run.pilot = \"rescale\""],
        )
    return spec, calibration.horizon, calibration


def cmd_classify(ctx: Context) -> int:
    run = ctx.config.run
    out = ctx.output_dir("classify")
    results = ctx.results(out, "classify")
    executor = ReplicaExecutor(ctx.workers, _log_progress)
    spec, horizon, calibration = _pilot(ctx, ctx.config.model, ctx.seed, executor, results)
    estimate = classify_trichotomy(
        spec, horizon, run.level, run.replicas, ctx.seed, executor,
        engine=run.engine, jump_cap=run.jump_cap, margin=run.margin,
    )
    estimate.config_hash = ctx.hash
    if ctx.wants("jsonl"):
        results.log_record("trichotomy", estimate.model_dump(mode="json"))
    if ctx.wants("csv"):
        write_csv(os.path.join(out, "classify.csv"), _CSV_HEADER, _estimate_rows(ctx, estimate))
    report = ReportGenerator().trichotomy_report(
        "classify", [estimate], ctx.hash, ctx.seed, calibrations=[c for c in (calibration,) if c is not None],
    )
    write_text(os.path.join(out, "classify_report.md"), report)
    print(f"[Classify] {estimate.model_tag}: verdict={estimate.verdict.value} "
          f"right={estimate.p_right.estimate:.4f} left={estimate.p_left.estimate:.4f} "
          f"rec={estimate.p_rec.estimate:.4f} (N={estimate.replicas}, discarded={estimate.discarded})")
    return EXIT_OK


def cmd_sweep(ctx: Context) -> int:
    if ctx.config.sweep is None:
        raise ConfigError("sweep needs a grid", ["sweep: section required for the sweep command"])
    run = ctx.config.run
    out = ctx.output_dir("sweep")
    results = ctx.results(out, "sweep")
    executor = ReplicaExecutor(ctx.workers, _log_progress)
    family, horizon, calibrations = ctx.config.model, run.horizon, []
    for i, point in enumerate(ctx.config.sweep.grid):
        _, point_horizon, calibration = _pilot(ctx, point_spec(family, point), replica_seed(ctx.seed, i),
                                               executor, results)
        horizon = max(horizon, point_horizon)
        if calibration is not None:
            calibrations.append(calibration)
    family = with_horizon(family, horizon)
    estimates = zero_one_sweep(
        family, ctx.config.sweep.grid, horizon, run.level, run.replicas, ctx.seed, executor, jump_cap=run.jump_cap,
    )
    rows = []
    for i, (point, estimate) in enumerate(zip(ctx.config.sweep.grid, estimates)):
        estimate.config_hash = ctx.hash
        record = {"point": i, "overrides": point, **estimate.model_dump(mode="json")}
        if ctx.wants("jsonl"):
            results.log_record("sweep_point", record)
        if ctx.wants("text"):
            write_text(os.path.join(out, f"point_{i:03d}.json"),
                       json.dumps({"config_hash": ctx.hash, "seed": ctx.seed, **record}, indent=2) + "\n")
        rows.extend(_estimate_rows(ctx, estimate, point=i))
        flag = "ok" if estimate.band_ok else "FLAGGED: outside zero-one band, rerun with a longer horizon"
        print(f"[Sweep] point {i} {estimate.model_tag}: right={estimate.p_right.estimate:.4f} "
              f"left={estimate.p_left.estimate:.4f} rec={estimate.p_rec.estimate:.4f} {flag}")
    if ctx.wants("csv"):
        write_csv(os.path.join(out, "sweep.csv"), ["point"] + _CSV_HEADER, rows)
    report = ReportGenerator().trichotomy_report(
        "sweep", estimates, ctx.hash, ctx.seed, calibrations=calibrations, overrides=ctx.config.sweep.grid,
    )
    write_text(os.path.join(out, "sweep_report.md"), report)
    flagged = [i for i, e in enumerate(estimates) if not e.band_ok]
    if flagged:
        logger.warning("[Sweep] %d point(s) flagged for a longer-horizon rerun: %s", len(flagged), flagged)
    return EXIT_OK


#validate
def _exit_rows(ctx: Context, records: Sequence[Dict[str, Any]]) -> List[List[Any]]:
    rows = []
    for record in records:
        if record["suite"] != "exit_survey":
            continue
        for model, stats in record["statistics"].items():
            for t, fraction in zip(stats["checkpoints"], stats["fraction_exited"]):
                rows.append([ctx.hash, ctx.seed, model, stats["n"], t, fraction])
    return rows


def cmd_validate(ctx: Context) -> int:
    sizes = ctx.config.validate_
    out = ctx.output_dir("validate")
    results = ctx.results(out, "validate")
    orchestrator = ExperimentOrchestrator(ctx.workers)
    orchestrator.set_progress_callback(_log_progress)
    for suite in default_suites():
        orchestrator.register_suite(suite)
    context = {
        "model": ctx.config.model,
        "catalogue": catalogue(sizes.ssep_half_width),
        "sizes": sizes,
        "run": ctx.config.run,
    }
    suite_results = orchestrator.run_suites(context, ctx.seed, ctx.args.inject_fault, only=ctx.args.suite)
    records = [r.to_record() for r in suite_results]
    if ctx.wants("jsonl"):
        for record in records:
            results.log_record("suite", record)
    if ctx.wants("csv"):
        write_csv(os.path.join(out, "exit_fractions.csv"),
                  ["config_hash", "seed", "model", "n", "checkpoint", "fraction_exited"], _exit_rows(ctx, records))
    passed = [r for r in suite_results if r.is_success()]
    report = ReportGenerator().generate_report("validate", {
        "config_hash": ctx.hash,
        "seed": ctx.seed,
        "model_tag": ctx.config.model.tag,
        "inject_fault": ctx.args.inject_fault,
        "suites": records,
        "suite_info": orchestrator.suite_info(),
        "all_passed": len(passed) == len(records),
        "passed_count": len(passed),
    })
    write_text(os.path.join(out, "validate_report.md"), report)
    for result in suite_results:
        print(f"[Validate] {result.suite_name}: {result.status.value.upper()}")
    failed = [r.suite_name for r in suite_results if not r.is_success()]
    if failed:
        raise SuiteFailure(f"failing suites: {', '.join(failed)}", failed)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON or TOML experiment configuration")
    common.add_argument("--preset", metavar="NAME", choices=sorted(PRESETS), help="start from a catalogue preset")
    common.add_argument("--seed", type=int, metavar="U64", help="override rng.base_seed")
    common.add_argument("--workers", type=int, default=1, metavar="N", help="parallel worker processes")
    common.add_argument("--out", metavar="DIR", help="override output.directory")
    common.add_argument("--log-level", metavar="LEVEL", help="log level (default: RWDRE_LOG or WARNING)")

    parser = argparse.ArgumentParser(prog="rwdre", description="Random walks in dynamic random environments.")
    sub = parser.add_subparsers(dest="command", required=True)
    simulate = sub.add_parser("simulate", parents=[common], help="sample environments, arrows and paths")
    simulate.add_argument("--replicas", type=int, metavar="N", help="number of replicas (default: run.N)")
    classify = sub.add_parser("classify", parents=[common], help="estimate the trichotomy verdict")
    validate = sub.add_parser("validate", parents=[common], help="run the property suites")
    validate.add_argument("--inject-fault", action="store_true", help="corrupt the replayed arrow file")
    validate.add_argument("--suite", action="append", metavar="NAME", help="run only the named suite(s)")
    validate.add_argument("--acceptance", action="store_true", help="run the suites at acceptance scale")
    sweep = sub.add_parser("sweep", parents=[common], help="classify every point of the sweep grid")
    for command in (classify, sweep):
        command.add_argument("--pilot", choices=[m.value for m in PilotMode],
                             help="baseline pilot: refuse (check) or lengthen (rescale) a short horizon")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["rng"] = {"base_seed": args.seed}
    if args.out is not None:
        overrides["output"] = {"directory": args.out}
    if getattr(args, "pilot", None) is not None:
        overrides["run"] = {"pilot": args.pilot}
    if getattr(args, "acceptance", False):
        overrides["validate"] = dict(ACCEPTANCE_SIZES)
    return overrides


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        if args.workers < 1:
            raise ConfigError("invalid --workers", [f"workers: must be at least 1, got {args.workers}"])
        config = build_config(args.preset, args.config, _overrides(args))
        return COMMANDS[args.command](Context(config, args))
    except ConfigError as e:
        print(f"[Config] {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SuiteFailure as e:
        print(f"[Validate] {e}", file=sys.stderr)
        return EXIT_SUITE
    except (ArtifactIOError, OSError) as e:
        print(f"[IO] {e}", file=sys.stderr)
        return EXIT_IO
