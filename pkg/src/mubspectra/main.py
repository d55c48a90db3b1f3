#!/usr/bin/env python3
"""mubspectra: spectra of random Gram matrices drawn from mutually unbiased bases."""

import sys
from pathlib import Path
from typing import Annotated, Callable

from cyclopts import App, Parameter

from mubspectra import APP_NAME, __version__
from mubspectra.config import (
    EXPERIMENT_GROUP,
    OUTPUT_GROUP,
    ExperimentConfig,
    ExperimentFlags,
)
from mubspectra.experiments import (
    RunReport,
    run_esd,
    run_gen,
    run_moments,
    run_mp,
    run_paths,
    run_variance,
    run_verify,
)
from mubspectra.utils import configure_logging

app = App(
    name=APP_NAME,
    version=__version__,
    help="Construct MUBs and check their Gram spectra against Marchenko-Pastur.",
)

Flags = Annotated[ExperimentFlags, Parameter(name="*", group=EXPERIMENT_GROUP)]


def _fail(e: ValueError) -> None:
    print(f"ERROR: {e}", file=sys.stderr)
    raise SystemExit(2)


def _finish(report: RunReport) -> None:
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name}: {check.detail}")
    for warning in report.warnings:
        print(f"WARNING {warning}")
    if not report.passed:
        raise SystemExit(1)


def _run(runner: Callable[[ExperimentConfig], RunReport], flags: ExperimentFlags):
    configure_logging(flags.verbose)
    try:
        config = ExperimentConfig.from_runtime_args(flags)
        report = runner(config)
    except ValueError as e:
        _fail(e)
    _finish(report)


@app.command
def gen(
    n: Annotated[int, Parameter(help="Dimension (a prime power).")],
    *,
    out: Annotated[
        Path, Parameter(help="Output directory.", group=OUTPUT_GROUP)
    ] = Path("out"),
    verbose: Annotated[bool, Parameter(help="Debug logging.")] = False,
):
    """Construct the complete family for dimension n and write it as JSON."""
    configure_logging(verbose)
    try:
        report = run_gen(n, out)
    except ValueError as e:
        _fail(e)
    print(f"within-basis defect {report.results['within_defect']:.3g}")
    print(f"cross-basis defect  {report.results['cross_defect']:.3g}")
    _finish(report)


@app.command
def verify(
    path: Annotated[Path, Parameter(help="Basis file written by gen.")],
    *,
    verbose: Annotated[bool, Parameter(help="Debug logging.")] = False,
):
    """Check orthonormality and unbiasedness of a basis file."""
    configure_logging(verbose)
    try:
        report = run_verify(path)
    except ValueError as e:
        _fail(e)
    print(f"within-basis defect {report.results['within_defect']:.3g}")
    print(f"cross-basis defect  {report.results['cross_defect']:.3g}")
    _finish(report)


@app.command
def esd(*, flags: Flags = ExperimentFlags()):
    """Trial-averaged eigenvalue distribution and its KS distance to MP."""
    _run(run_esd, flags)


@app.command
def moments(*, flags: Flags = ExperimentFlags()):
    """Monte-Carlo trace moments against MP moments and exact oracles."""
    _run(run_moments, flags)


@app.command
def paths(*, flags: Flags = ExperimentFlags()):
    """Enumerate closed paths of length --lmax with their W values."""
    _run(run_paths, flags)


@app.command
def variance(*, flags: Flags = ExperimentFlags()):
    """Sample variance of the trace moments along a dimension sweep."""
    _run(run_variance, flags)


@app.command
def mp(*, flags: Flags = ExperimentFlags()):
    """Closed-form against quadrature moments of the MP law."""
    _run(run_mp, flags)


if __name__ == "__main__":
    app()
