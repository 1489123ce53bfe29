"""
Terminal front end for EMHD Lab.

Parses the command line, loads the configuration, runs one experiment and
summarizes it in a rich table. Series go to `<out>/<name>.csv`, the echoed
configuration to `<out>/config.echo` and provenance to `<out>/run_log.jsonl`.
"""
import argparse
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from emhd_lab import __version__
from emhd_lab.exceptions import (
    ConfigError, EMHDError, FieldValueError, IntegrationAbort, RangeError,
    RepresentabilityError, SeriesWriteError, SnapshotError,
)
from emhd_lab.models import StateAB, format_index
from emhd_lab.models.config import RunConfig
from emhd_lab.services import (
    CsvSeriesWriter, DEFAULT_CONFIG_TEXT, LittlewoodPaleyService, RunLogService,
    WavenumberService, echo_config, load_config, random_lowmode_state, read_snapshot,
    run_energy_audit, run_monitor, run_radial_suite, run_scaling_check, run_simulation,
    run_sync_experiment, wavenumber_reports, write_snapshot,
)
from emhd_lab.services.experiments import initial_state

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_WRITE_FAILED = 1
EXIT_INVALID = 2
EXIT_ABORTED = 3

COMMANDS = {
    "simulate": "plain run with its energy ledger",
    "audit": "energy balance E(t) - E(0) + mu int D - int work",
    "sync": "low-mode synchronization of two solutions",
    "radial": "cancellation checks for radial data",
    "wavenumber": "dissipation wavenumbers of one state",
    "monitor": "low-mode regularity monitors along a run",
    "scale-check": "shell quantities under dyadic rescaling",
}


def _fmt(value: float) -> str:
    return format(value, ".6g")


class TerminalUI:
    """Command-line interface of EMHD Lab.

    Args:
        console: Console for summaries; a new one on stdout when omitted
        error_console: Console for diagnostics; stderr when omitted
    """

    def __init__(self, console: Optional[Console] = None,
                 error_console: Optional[Console] = None):
        self.console = console or Console()
        self.error_console = error_console or Console(stderr=True)
        self.run_log: Optional[RunLogService] = None

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="emhd-lab",
            description="Electron-MHD simulations and Littlewood-Paley diagnostics.",
        )
        parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
        for name, help_text in COMMANDS.items():
            sub = subparsers.add_parser(name, help=help_text)
            sub.add_argument("--config", metavar="PATH", help="key=value configuration file")
            sub.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
            sub.add_argument("--seed", metavar="U64", type=int, help="random seed (overrides seed)")
            sub.add_argument("--verbose", action="store_true", help="log debug messages")
            if name == "wavenumber":
                sub.add_argument("--snapshot", metavar="PATH", help="state to analyse")
        return parser

    def configure_logging(self, verbose: bool) -> None:
        """Route log records through rich on the diagnostic stream."""
        handler = RichHandler(console=self.error_console, show_path=False, rich_tracebacks=True)
        logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                            format="%(message)s", datefmt="[%X]", handlers=[handler], force=True)

    def load(self, args: argparse.Namespace) -> RunConfig:
        """Read the configuration file and apply command-line overrides.

        Raises:
            ConfigError: If the file is unreadable or invalid
        """
        if args.config:
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except (OSError, UnicodeDecodeError) as error:
                raise ConfigError([f"cannot read {args.config}: {error}"]) from error
        else:
            text = DEFAULT_CONFIG_TEXT
        overrides = {"experiment.name": args.command, "output.dir": args.out, "seed": args.seed}
        return load_config(text, overrides)

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """Run one subcommand and return the process exit code."""
        args = self.build_parser().parse_args(argv)
        self.configure_logging(args.verbose)

        try:
            config = self.load(args)
        except ConfigError as error:
            self.error_console.print(f"[red]✗ {error}[/red]")
            return EXIT_INVALID

        out_dir = Path(config.output.dir)
        experiment = config.experiment.name
        try:
            echo_path = out_dir / "config.echo"
            out_dir.mkdir(parents=True, exist_ok=True)
            echo_path.write_text(echo_config(config), encoding="utf-8")
            self.run_log = RunLogService(str(out_dir / "run_log.jsonl"))
        except OSError as error:
            self.error_console.print(f"[red]✗ cannot prepare {out_dir}: {error}[/red]")
            return EXIT_WRITE_FAILED
        self.run_log.log_start(experiment, config.seed, str(echo_path))
        self.show_header(config)

        handlers: Dict[str, Callable[[RunConfig, argparse.Namespace], Dict[str, Any]]] = {
            "simulate": self.simulate,
            "audit": self.audit,
            "sync": self.sync,
            "radial": self.radial,
            "wavenumber": self.wavenumber,
            "monitor": self.monitor,
            "scale-check": self.scale_check,
        }
        try:
            summary = handlers[experiment](config, args)
        except IntegrationAbort as error:
            logger.warning("integration aborted at t=%.17g: %s", error.time, error)
            self.error_console.print(f"[red]✗ aborted at t={error.time:.17g}[/red]")
            self.run_log.log_abort(experiment, str(error), error.time)
            return EXIT_ABORTED
        except SeriesWriteError as error:
            self.error_console.print(f"[red]✗ {error}[/red]")
            self.run_log.log_abort(experiment, str(error))
            return EXIT_WRITE_FAILED
        except (ConfigError, RangeError, RepresentabilityError, SnapshotError, FieldValueError) as error:
            self.error_console.print(f"[red]✗ {error}[/red]")
            self.run_log.log_abort(experiment, str(error))
            return EXIT_INVALID
        except EMHDError as error:
            self.error_console.print(f"[red]✗ {error}[/red]")
            self.run_log.log_abort(experiment, str(error))
            return EXIT_INVALID
        except OSError as error:
            self.error_console.print(f"[red]✗ {error}[/red]")
            self.run_log.log_abort(experiment, str(error))
            return EXIT_WRITE_FAILED

        self.run_log.log_finish(experiment, summary)
        self.console.print(f"[green]✓ {experiment} finished, output in {out_dir}[/green]")
        return EXIT_OK

    def show_header(self, config: RunConfig) -> None:
        panel = Panel(
            f"[bold cyan]{config.experiment.name}[/bold cyan]  "
            f"N={config.grid.n}  L={_fmt(config.grid.l)}  "
            f"{config.physics.variant.value}  mu={_fmt(config.physics.mu)}  seed={config.seed}",
            title=f"EMHD Lab {__version__}",
            border_style="cyan",
        )
        self.console.print(panel)

    def show_summary(self, title: str, rows: List[Sequence[str]]) -> None:
        table = Table(title=title)
        table.add_column("Quantity", style="cyan")
        table.add_column("Value", style="magenta")
        for name, value in rows:
            table.add_row(name, value)
        self.console.print(table)

    def _writer(self, config: RunConfig, name: str) -> CsvSeriesWriter:
        return CsvSeriesWriter.for_experiment(config.output.dir, name)

    # -- subcommands -------------------------------------------------------

    def simulate(self, config: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
        with self._writer(config, "simulate") as writer:
            state, ledger = run_simulation(config, sink=writer.append)
        if config.output.snapshots:
            path = write_snapshot(Path(config.output.dir) / "final.snap", state)
            logger.info("final state written to %s", path)
        self._show_ledger("Simulation", state, ledger)
        return {"t": state.t, "max_abs_residual": ledger.max_abs_residual}

    def audit(self, config: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
        with self._writer(config, "audit") as writer:
            ledger = run_energy_audit(config, sink=writer.append)
        self._show_ledger("Energy audit", None, ledger)
        return {"max_abs_residual": ledger.max_abs_residual}

    def _show_ledger(self, title: str, state: Optional[StateAB], ledger) -> None:
        rows = []
        if state is not None:
            rows.append(("final time", _fmt(state.t)))
        if ledger.rows:
            rows.append(("E(0)", _fmt(ledger.rows[0].energy)))
            rows.append(("E(T)", _fmt(ledger.rows[-1].energy)))
        rows.extend([
            ("max |residual|", _fmt(ledger.max_abs_residual)),
            ("sup ||a||_H1", _fmt(ledger.sup_a_h1)),
            ("sup ||b||_L2", _fmt(ledger.sup_b_l2)),
            ("int ||a||_H2^2", _fmt(ledger.int_a_h2_sq)),
            ("int ||b||_H1^2", _fmt(ledger.int_b_h1_sq)),
        ])
        self.show_summary(title, rows)

    def sync(self, config: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
        with self._writer(config, "sync") as writer:
            report = run_sync_experiment(config, sink=writer.append)
        last = report.samples[-1]
        self.show_summary("Low-mode synchronization", [
            ("initial ||h||_Hs", _fmt(report.initial_hs_norm)),
            ("final ||h||_Hs", _fmt(last.hs_norm)),
            ("decay ratio", _fmt(report.decay_ratio)),
            ("monotone after transient", "yes" if report.monotone_after_transient else "no"),
            ("final Q", format_index(last.q_index)),
            ("saturated samples", f"{report.saturated_samples} of {len(report.samples)}"),
        ])
        return {"decay_ratio": report.decay_ratio, "monotone": report.monotone_after_transient,
                "saturated_samples": report.saturated_samples}

    def radial(self, config: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
        report = run_radial_suite(config)
        with self._writer(config, "radial") as writer:
            for check in report.checks:
                writer.append(check.as_row())
        table = Table(title="Radial cancellation checks")
        for column in ("check", "residual", "bound", "passed"):
            table.add_column(column, style="cyan" if column == "check" else "magenta")
        for check in report.checks:
            mark = "[green]✓[/green]" if check.passed else "[red]✗[/red]"
            table.add_row(check.name, _fmt(check.residual), _fmt(check.bound), mark)
        self.console.print(table)
        if not report.passed:
            logger.warning("radial suite failed: %s",
                           ", ".join(c.name for c in report.checks if not c.passed))
        return {"passed": report.passed}

    def wavenumber(self, config: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
        snapshot = getattr(args, "snapshot", None)
        state = read_snapshot(snapshot) if snapshot else initial_state(config)
        diag = config.diag
        reports = wavenumber_reports(state, diag.r, diag.c_r, diag.allow_out_of_range)
        with self._writer(config, "wavenumber") as writer:
            for report in reports:
                writer.append([report.kind, report.q_index, report.lambda_q,
                               report.r, report.c_r, report.mu])
        self.show_summary("Dissipation wavenumbers", [
            (f"Q({report.kind})", f"{format_index(report.q_index)}  (lambda={_fmt(report.lambda_q)})")
            for report in reports
        ])
        return {report.kind: format_index(report.q_index) for report in reports}

    def monitor(self, config: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
        with self._writer(config, "monitor") as writer:
            state, series = run_monitor(config, sink=writer.append)
        bank = LittlewoodPaleyService.build_filter_bank(state.grid)
        critical = WavenumberService(bank, config.diag.c_r,
                                     allow_out_of_range=config.diag.allow_out_of_range).critical_norms(state)
        last = series.samples[-1]
        self.show_summary("Regularity monitors", [
            ("int f1 dt", _fmt(last.int_f1)),
            ("int f2 dt", _fmt(last.int_f2)),
            (f"int ||b||_L{_fmt(series.r)}^{_fmt(series.s)} dt", _fmt(series.lps_integral)),
            ("final Q(a), Q(b)", f"{format_index(last.q_a)}, {format_index(last.q_b)}"),
            ("critical norm of a", _fmt(critical["a_critical"])),
            ("critical norm of b", _fmt(critical["b_critical"])),
        ])
        return {"int_lps": series.lps_integral, **critical}

    def scale_check(self, config: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
        m = config.experiment.m
        state = self.scaling_state(config)
        report = run_scaling_check(state, m, config.diag.r)
        with self._writer(config, "scale-check") as writer:
            for row in report.shell_rows:
                writer.append(row.as_row())
        linf_error = max((row.relative_error for row in report.linf_rows), default=0.0)
        self.show_summary(f"Dyadic scaling, lambda=2^{m}", [
            ("shells compared", str(len(report.shell_rows))),
            ("max relative error", _fmt(report.max_relative_error)),
            ("max error of low-pass sup norms", _fmt(linf_error)),
            ("within tolerance", "yes" if report.passed else "no"),
        ])
        return {"max_relative_error": report.max_relative_error, "passed": report.passed}

    @staticmethod
    def scaling_state(config: RunConfig) -> StateAB:
        """Random data narrow enough that its 2^m dilation stays below the cutoff.

        Raises:
            RepresentabilityError: If no shell fits at this resolution
        """
        grid = config.torus_grid()
        factor = 2 ** config.experiment.m
        shells = config.experiment.shells
        while shells >= 0 and factor * (2 ** (shells + 1) - 1) > grid.cutoff:
            shells -= 1
        if shells < 0:
            raise RepresentabilityError(
                f"no random data survives rescaling by 2^{config.experiment.m} at N={grid.n}")
        if shells != config.experiment.shells:
            logger.info("scale check: random data limited to shells q <= %d", shells)
        return random_lowmode_state(grid, config.seed, config.experiment.energy, shells,
                                    mu=config.physics.mu)
