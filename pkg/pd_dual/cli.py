import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO

import numpy as np
from rich.console import Console

import pd_dual
from pd_dual.common.config import DEFAULT_SETTINGS, Settings
from pd_dual.common.errors import NumericalError
from pd_dual.common.logging_utils import configure_logging, get_logger
from pd_dual.common.numeric import format_rational, to_number
from pd_dual.common.objects import EMPTY, Frequencies, Params, Partition
from pd_dual.dual_process.death_process import (
    death_table,
    dual_transition,
    dual_transition_law,
    sample_block_count_from_infinity,
    simulate_death_path,
)
from pd_dual.partitions.combinatorics import dim_partition, enumerate_partitions
from pd_dual.sampling.ewens_pitman import ewens_pitman_table
from pd_dual.transition.density import density_mixture, density_spectral
from pd_dual.transition.objects import MCReport
from pd_dual.transition.verification import (
    empirical_representation_check,
    sample_transition,
    verify_duality,
    verify_rn_weight,
    verify_split_urn,
    verify_urn_conditional,
)
from pd_dual.urns.samplers import polya_urn_extend, sample_pd_conditional, split_urn, stick_breaking_sampler

logger = get_logger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

# sample modes driven by the death process alone
THETA_ONLY_MODES = ("death-path", "block-count")


@dataclass
class RunConfig:
    """
    Everything a command-line run depends on; echoed as the first record of
    every output.

    Args:
        command (`str`):
            The subcommand.
        params (`Params`, optional):
            The (α, θ) pair, when the command takes one.
        seed (`int`, optional):
            Seed of the random stream; required by stochastic commands.
        trials (`int`, optional):
            Monte-Carlo trials or sample count.
        truncation (`int`, optional):
            Truncation order of a density.
        output (`str`, optional):
            Output path, stdout when omitted.
        output_format (`str`):
            "csv" or "json" (JSON lines).
        workers (`int`):
            Number of Monte-Carlo shards.
        arguments (`Dict[str, Any]`):
            The remaining command flags.
        settings (`Settings`):
            Numerical constants in effect.
    """

    command: str
    params: Optional[Params] = None
    seed: Optional[int] = None
    trials: Optional[int] = None
    truncation: Optional[int] = None
    output: Optional[str] = None
    output_format: str = "json"
    workers: int = 1
    arguments: Dict[str, Any] = field(default_factory=dict)
    settings: Settings = DEFAULT_SETTINGS

    def metadata(self) -> Dict[str, Any]:
        return {
            "metadata": {
                "version": pd_dual.__version__,
                "command": self.command,
                "params": self.params.to_json() if self.params is not None else None,
                "seed": self.seed,
                "trials": self.trials,
                "truncation": self.truncation,
                "output_format": self.output_format,
                "workers": self.workers,
                "arguments": self.arguments,
                "settings": self.settings.to_dict(),
            }
        }

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


class UsageError(ValueError):
    pass


def _partition(text: str) -> Partition:
    try:
        return Partition.from_string(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _frequencies(text: str) -> Frequencies:
    try:
        return Frequencies.from_string(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(str(e))


def _times(text: str) -> List[float]:
    try:
        times = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))
    if not times:
        raise argparse.ArgumentTypeError(f"No time in {text!r}")
    return times


def _add_params(parser: argparse.ArgumentParser, alpha: bool = True, alpha_required: bool = True) -> None:
    if alpha:
        parser.add_argument(
            "--alpha", required=alpha_required, default=None, help="Discount α in [0, 1), e.g. 0.5 or 1/3"
        )
    parser.add_argument("--theta", required=True, help="Concentration θ > -α, e.g. 1 or -1/4")


def _add_output(parser: argparse.ArgumentParser, default_format: str) -> None:
    parser.add_argument("--output", default=None, help="Output path (default: stdout)")
    parser.add_argument("--format", dest="output_format", choices=("csv", "json"), default=default_format)


def _add_stochastic(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, required=True, help="Seed of the random stream")
    parser.add_argument("--workers", type=int, default=1, help="Number of Monte-Carlo processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pd-dual",
        description="Exact and Monte-Carlo tools for the two-parameter Poisson-Dirichlet diffusion and its dual",
    )
    parser.add_argument("--log-level", default="WARNING", help="Logging level (default: WARNING)")
    parser.add_argument("--version", action="version", version=f"%(prog)s {pd_dual.__version__}")
    parser.add_argument("--max-precision", type=int, default=None, help="Last rung of the precision ladder, in bits")
    parser.add_argument("--partition-cap", type=int, default=None, help="Largest n enumerated")
    parser.add_argument("--kernel-cap", type=int, default=None, help="Largest density truncation order")
    parser.add_argument("--z-threshold", type=float, default=None, help="|z| bound of a passing comparison")
    parser.add_argument("--p-floor", type=float, default=None, help="Minimal χ² p-value of a passing comparison")
    subparsers = parser.add_subparsers(dest="command", required=True)

    partitions = subparsers.add_parser("partitions", help="Enumerate Γ_n with multinomial dimensions")
    partitions.add_argument("--n", type=int, required=True)
    _add_output(partitions, "csv")

    ewens = subparsers.add_parser("ewens-pitman", help="Tabulate the Ewens-Pitman law M_n")
    ewens.add_argument("--n", type=int, required=True)
    _add_params(ewens)
    _add_output(ewens, "csv")

    death = subparsers.add_parser("death-probs", help="Tabulate the block-count probabilities d_nl(t)")
    start = death.add_mutually_exclusive_group(required=True)
    start.add_argument("--n", type=int, default=None, help="Starting count")
    start.add_argument("--infinite", action="store_true", help="Start from infinitely many lines")
    _add_params(death, alpha=False)
    death.add_argument("--t", type=_times, required=True, help="Comma-separated times, e.g. 0.1,1,10")
    death.add_argument("--precision-report", action="store_true", help="Add the precision_bits column")
    _add_output(death, "csv")

    dual = subparsers.add_parser("dual-transition", help="Transition law of the partition-valued dual")
    dual.add_argument("--eta", type=_partition, required=True)
    dual.add_argument("--omega", type=_partition, default=None, help="Single target (default: full law)")
    _add_params(dual, alpha=False)
    dual.add_argument("--t", type=float, required=True)
    _add_output(dual, "csv")

    sample = subparsers.add_parser("sample", help="Draw samples, one JSON record per line")
    sample.add_argument(
        "--mode",
        required=True,
        choices=("pd", "pd-cond", "urn", "split-urn", "transition", "death-path", "block-count"),
    )
    _add_params(sample, alpha_required=False)
    sample.add_argument("--count", type=int, default=1)
    sample.add_argument("--omega", type=_partition, default=EMPTY, help="Urn or conditioning configuration")
    sample.add_argument("--m", type=int, default=0, help="Urn draws")
    sample.add_argument("--eta", type=_partition, default=None, help="Start of a death path")
    sample.add_argument("--x", type=_frequencies, default=None, help="Start of the diffusion")
    sample.add_argument("--n", type=int, default=None, help="Split-urn size")
    sample.add_argument("--t", type=float, default=None)
    sample.add_argument("--top", type=int, default=20, help="Atoms reported per frequency sample")
    _add_stochastic(sample)
    _add_output(sample, "json")

    density = subparsers.add_parser("density", help="Truncated transition density p(t, x, y)")
    density.add_argument("--form", choices=("mixture", "spectral"), default="mixture")
    density.add_argument("--x", type=_frequencies, required=True)
    density.add_argument("--y", type=_frequencies, required=True)
    density.add_argument("--t", type=float, required=True)
    density.add_argument("--trunc", type=int, default=20)
    density.add_argument("--force", action="store_true", help="Evaluate below the reliable time range")
    _add_params(density)
    _add_output(density, "json")

    verify = subparsers.add_parser("verify", help="Monte-Carlo verification against exact values")
    verify.add_argument(
        "--what",
        required=True,
        choices=("duality", "split-urn", "representation", "urn-conditional", "rn-weight"),
    )
    verify.add_argument("--eta", type=_partition, default=None)
    verify.add_argument("--omega", type=_partition, default=None)
    verify.add_argument("--x", type=_frequencies, default=None)
    verify.add_argument("--t", type=float, default=None)
    verify.add_argument("--n", type=int, default=None)
    verify.add_argument("--m", type=int, default=None)
    verify.add_argument("--trials", type=int, default=100_000)
    verify.add_argument("--cells", default=None, help="CSV path for per-cell χ² statistics")
    verify.add_argument("--no-progress", action="store_true")
    _add_params(verify)
    _add_stochastic(verify)
    _add_output(verify, "json")
    return parser


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name, None) is None]
    if missing:
        selector = f"--mode {args.mode}" if hasattr(args, "mode") else f"--what {args.what}"
        raise UsageError(f"`{args.command} {selector}` needs {', '.join(missing)}")


def _config(args: argparse.Namespace) -> RunConfig:
    settings = DEFAULT_SETTINGS.with_overrides(
        max_precision=args.max_precision,
        partition_cap=args.partition_cap,
        kernel_cap=args.kernel_cap,
        z_threshold=args.z_threshold,
        p_floor=args.p_floor,
    )
    reserved = {"command", "alpha", "theta", "seed", "trials", "trunc", "output", "output_format", "workers", "log_level"}
    reserved.update(settings.to_dict())
    arguments = {
        key: (value.to_json() if hasattr(value, "to_json") else value)
        for key, value in sorted(vars(args).items())
        if key not in reserved
    }
    params = Params.of(args.alpha, args.theta) if getattr(args, "alpha", None) is not None else None
    if params is None and hasattr(args, "theta"):
        # θ-only commands and sample modes take θ > -1 without α
        arguments["theta"] = args.theta
    return RunConfig(
        command=args.command,
        params=params,
        seed=getattr(args, "seed", None),
        trials=getattr(args, "trials", None),
        truncation=getattr(args, "trunc", None),
        output=args.output,
        output_format=args.output_format,
        workers=getattr(args, "workers", 1),
        arguments=arguments,
        settings=settings,
    )


def _cell(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return value


def _write(config: RunConfig, records: Iterable[Dict[str, Any]], stream: TextIO) -> None:
    """
    Write the metadata record followed by `records`, as CSV (metadata on a
    leading comment line) or as JSON lines.
    """
    if config.output_format == "json":
        stream.write(json.dumps(config.metadata()) + "\n")
        for record in records:
            stream.write(json.dumps(record) + "\n")
        return
    stream.write("# " + json.dumps(config.metadata()) + "\n")
    records = list(records)
    if not records:
        return
    writer = csv.DictWriter(stream, fieldnames=list(records[0]), lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow({key: _cell(value) for key, value in record.items()})


def _partitions(args: argparse.Namespace, config: RunConfig) -> List[Dict[str, Any]]:
    return [
        {"partition": eta.to_json(), "length": eta.d, "dim": dim_partition(eta)}
        for eta in enumerate_partitions(args.n, config.settings)
    ]


def _ewens_pitman(args: argparse.Namespace, config: RunConfig) -> List[Dict[str, Any]]:
    table = ewens_pitman_table(args.n, config.params, config.settings)
    return [
        {"partition": eta.to_json(), "probability": float(p), "exact": format_rational(p)}
        for eta, p in table.items()
    ]


def _death_probs(args: argparse.Namespace, config: RunConfig) -> List[Dict[str, Any]]:
    theta = to_number(args.theta)
    records: List[Dict[str, Any]] = []
    bits = 0
    for t in args.t:
        table = death_table(args.n, theta, t, config.settings)
        logger.info("t=%s: row sum %.15f, max precision %d bits", t, table.row_sum(args.n), table.max_precision)
        bits = max(bits, table.max_precision)
        records.extend(table.to_rows(precision_report=args.precision_report))
    if args.precision_report:
        logger.info("highest working precision over %d times: %d bits", len(args.t), bits)
    return records


def _dual_transition(args: argparse.Namespace, config: RunConfig) -> List[Dict[str, Any]]:
    theta = to_number(args.theta)
    if args.omega is not None:
        law = {args.omega: dual_transition(args.eta, args.omega, theta, args.t, config.settings)}
    else:
        law = dual_transition_law(args.eta, theta, args.t, config.settings)
    return [
        {"eta": args.eta.to_json(), "omega": omega.to_json(), "t": args.t, "probability": value}
        for omega, value in sorted(law.items(), key=lambda item: item[0].sort_key())
    ]


def _sample(args: argparse.Namespace, config: RunConfig) -> List[Dict[str, Any]]:
    rng, params, settings = config.rng(), config.params, config.settings
    theta = params.theta if params is not None else to_number(args.theta)
    records = []
    if args.mode not in THETA_ONLY_MODES:
        _require(args, "alpha")
    if args.mode == "transition":
        _require(args, "x", "t")
    elif args.mode in ("death-path", "block-count", "split-urn"):
        _require(args, "t")
    if args.mode == "death-path":
        _require(args, "eta")
    if args.mode == "split-urn":
        _require(args, "n")
    for index in range(args.count):
        if args.mode == "pd":
            record = stick_breaking_sampler(params, rng, settings).top(args.top).to_json()
        elif args.mode == "urn":
            record = {"partition": polya_urn_extend(args.omega, args.m, params, rng).to_json()}
        elif args.mode == "pd-cond":
            record = sample_pd_conditional(args.omega, params, rng, settings).top(args.top).to_json()
        elif args.mode == "transition":
            record = sample_transition(args.x, args.t, params, rng, settings).top(args.top).to_json()
        elif args.mode == "death-path":
            record = simulate_death_path(args.eta, theta, args.t, rng).to_json()
        elif args.mode == "block-count":
            record = {"block_count": sample_block_count_from_infinity(theta, args.t, rng, settings=settings)}
        else:
            record = split_urn(args.n, args.t, params, rng, settings).to_json()
        records.append({"index": index, **record})
    return records


def _density(args: argparse.Namespace, config: RunConfig) -> List[Dict[str, Any]]:
    if args.t < config.settings.min_density_time and not args.force:
        raise UsageError(
            f"t={args.t} is below the reliable range t >= {config.settings.min_density_time}; pass --force to evaluate"
        )
    evaluate = density_mixture if args.form == "mixture" else density_spectral
    return [evaluate(args.x, args.y, args.t, config.params, args.trunc, config.settings).to_json()]


def _verify(args: argparse.Namespace, config: RunConfig) -> MCReport:
    rng, params, settings = config.rng(), config.params, config.settings
    progress = not args.no_progress
    if args.what == "duality":
        _require(args, "eta", "x", "t")
        return verify_duality(
            args.eta, args.x, args.t, params, args.trials, rng, config.workers, settings, progress
        )
    if args.what == "split-urn":
        _require(args, "n", "t")
        return verify_split_urn(args.n, args.t, params, args.trials, rng, config.workers, settings)
    if args.what == "representation":
        _require(args, "n")
        return empirical_representation_check(args.n, params, args.trials, rng, settings, progress)
    if args.what == "urn-conditional":
        _require(args, "omega", "m")
        return verify_urn_conditional(args.omega, args.m, params, args.trials, rng, settings)
    _require(args, "omega", "eta")
    return verify_rn_weight(args.omega, args.eta, params, args.trials, rng, settings)


def _write_cells(path: str, report: MCReport) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["cell", "observed", "expected"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(report.cells)


COMMANDS = {
    "partitions": _partitions,
    "ewens-pitman": _ewens_pitman,
    "death-probs": _death_probs,
    "dual-transition": _dual_transition,
    "sample": _sample,
    "density": _density,
}


def _dispatch(args: argparse.Namespace, config: RunConfig, stream: TextIO) -> int:
    if args.command == "verify":
        report = _verify(args, config)
        if args.cells is not None:
            _write_cells(args.cells, report)
        _write(config, [report.to_json()], stream)
        return EXIT_OK if report.passed else EXIT_FAILED
    _write(config, COMMANDS[args.command](args, config), stream)
    return EXIT_OK


def run(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    """
    Parse `argv`, run the subcommand and return the exit code: 0 on success,
    1 when a verification fails, 2 on a usage error, 3 on a numerical error.

    Args:
        argv (`Sequence[str]`, optional):
            Arguments without the program name, `sys.argv[1:]` by default.
        stdout (`TextIO`, optional):
            Stream receiving the output when no `--output` is given.

    Returns:
        `int`: the exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    configure_logging(args.log_level)
    console = Console(stderr=True)
    try:
        config = _config(args)
        if config.workers < 1:
            raise UsageError(f"--workers must be positive, got {config.workers}")
        if args.output is None:
            return _dispatch(args, config, stdout or sys.stdout)
        with open(args.output, "w", newline="") as f:
            return _dispatch(args, config, f)
    except NumericalError as e:
        console.print(f"[bold red]numerical error[/]: {e}")
        return EXIT_NUMERICAL
    except (ValueError, TypeError, ZeroDivisionError) as e:
        console.print(f"[bold red]error[/]: {e}")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
