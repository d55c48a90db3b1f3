"""Experiment runners behind the CLI subcommands.

Each runner writes its CSV/JSON outputs under the configured directory and
returns a RunReport whose checks decide the exit code.
"""

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, TypeVar

import numpy as np
from loguru import logger

from mubspectra.config import ExperimentConfig
from mubspectra.eigen import Spectrum, eigenvalues_hermitian
from mubspectra.marchenko_pastur import (
    ESD,
    MPParams,
    esd_histogram,
    ks_distance,
    mp_moment,
    mp_quadrature_moment,
    mp_quantile,
)
from mubspectra.mubs import (
    MubFamily,
    coherence,
    construct_complete_mubs,
    load_family,
    save_family,
    verify_unbiased,
)
from mubspectra.oracles import (
    MAX_EXACT_MOMENT,
    MAX_EXACT_VARIANCE,
    CostGuardError,
    expectation_exact,
    variance_exact,
    w_exact,
)
from mubspectra.paths import enumerate_paths, gamma_table, reduce
from mubspectra.sampling import (
    SampleMatrix,
    SampleSpec,
    draw_trial,
    gram,
    trace_moments,
)
from mubspectra.utils import mix_seed, write_csv, write_json

W_COLUMNS_MAX_LENGTH = 4
W_BOUND_CONSTANT = 4.0
MP_TOL = 1e-8
VARIANCE_DECAY_RATIO = 4.0
VARIANCE_RATIO_SPAN = 4

T = TypeVar("T")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class RunReport:
    command: str
    config: dict[str, Any]
    trial_seeds: list[int] = field(default_factory=list)
    results: dict[str, Any] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))
        log = logger.info if passed else logger.warning
        log("{} {}: {}", "PASS" if passed else "FAIL", name, detail)

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config,
            "trial_seeds": self.trial_seeds,
            "results": self.results,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
            "warnings": self.warnings,
            "passed": self.passed,
        }

    def write(self, out: Path) -> Path:
        return write_json(out / f"{self.command}_report.json", self.to_dict())


def _new_report(command: str, config: ExperimentConfig) -> RunReport:
    report = RunReport(command=command, config=config.to_dict())
    for n in config.dimensions:
        cfg = config.for_dimension(n)
        if cfg.below_sqrt_bound:
            report.warnings.append(
                f"m={cfg.bases} < sqrt(n)={math.sqrt(n):.3f} for n={n}"
            )
    return report


def load_or_construct(config: ExperimentConfig) -> MubFamily:
    """The first `config.bases` bases, from the basis file or constructed."""
    if config.basis is not None:
        fam = load_family(config.basis)
        if fam.n != config.n:
            raise ValueError(
                f"Basis file {config.basis} has n={fam.n}, config has n={config.n}"
            )
    else:
        fam = construct_complete_mubs(config.n)
    return fam.subfamily(config.bases)


def sample_spec(config: ExperimentConfig) -> SampleSpec:
    return SampleSpec(
        n=config.n,
        m=config.bases,
        p=config.p,
        y=config.y,
        seed=config.seed,
        trials=config.trials,
    )


def run_trials(
    fam: MubFamily,
    spec: SampleSpec,
    measure: Callable[[SampleMatrix], T],
    workers: int = 1,
) -> list[T]:
    """Draw and measure every trial; results come back in trial order."""

    def one(trial: int) -> T:
        phi = draw_trial(fam, spec.p, spec.seed, trial)
        result = measure(phi)
        logger.debug("n={} trial {} (key {:#018x}) done", spec.n, trial, phi.seed)
        return result

    if workers == 1:
        return [one(t) for t in range(spec.trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(spec.trials)))


def _trial_seeds(config: ExperimentConfig) -> list[int]:
    return [mix_seed(config.seed, t) for t in range(config.trials)]


def run_gen(n: int, out: Path) -> RunReport:
    started = time.perf_counter()
    fam = construct_complete_mubs(n)
    path = save_family(fam, out / f"mubs_n{n}.json")
    report = _verify_into(RunReport(command="gen", config={"n": n}), fam)
    report.results["basis_file"] = str(path)
    logger.info("gen n={} took {:.3f}s", n, _since(started))
    report.write(out)
    return report


def run_verify(path: Path) -> RunReport:
    fam = load_family(path)
    report = RunReport(command="verify", config={"basis": str(path)})
    return _verify_into(report, fam)


def _verify_into(report: RunReport, fam: MubFamily) -> RunReport:
    result = verify_unbiased(fam)
    report.results.update(
        n=fam.n,
        m=fam.m,
        within_defect=result.within_defect,
        cross_defect=result.cross_defect,
        coherence=coherence(fam),
    )
    report.check(
        "unbiased",
        result.passed,
        f"within {result.within_defect:.3g}, cross {result.cross_defect:.3g}",
    )
    return report


def run_esd(config: ExperimentConfig) -> RunReport:
    """Pooled ESD over all trials, its histogram and its KS distance to MP."""
    started = time.perf_counter()
    report = _new_report("esd", config)
    fam = load_or_construct(config)
    spec = sample_spec(config)

    def measure(phi: SampleMatrix) -> tuple[Spectrum, dict[str, Any]]:
        return eigenvalues_hermitian(gram(phi)), phi.metadata(fam.m, config.y)

    results = run_trials(fam, spec, measure, config.workers)
    spectra = [spectrum for spectrum, _ in results]
    esd = ESD.pooled(spectra)
    params = MPParams(config.y)
    ks = ks_distance(esd, params)

    write_csv(
        config.out / "esd_histogram.csv",
        ["bin_left", "bin_right", "empirical_density", "mp_density"],
        esd_histogram(esd, params, config.bins),
    )
    write_json(config.out / "samples.json", [metadata for _, metadata in results])
    report.trial_seeds = _trial_seeds(config)
    report.results.update(
        p=spec.p,
        ks=ks,
        eigenvalue_count=len(esd.values),
        mean_eigenvalue=float(esd.values.mean()),
    )
    report.check("ks", ks <= config.ks_threshold, f"{ks:.4f} <= {config.ks_threshold}")
    logger.info("esd n={} KS={:.4f} took {:.3f}s", config.n, ks, _since(started))
    report.write(config.out)
    return report


def _since(started: float) -> float:
    return time.perf_counter() - started


def _safe_exact(compute: Callable[[], float]) -> float | None:
    try:
        return compute()
    except CostGuardError as e:
        logger.debug("Skipping exact column: {}", e)
        return None


def _moment_tolerance(ell: int, m: int, n: int) -> float:
    return 5 * ell**2 * (1 / m + 1 / n)


def run_moments(config: ExperimentConfig) -> RunReport:
    """Monte-Carlo E(A_l) against the MP moments and, when cheap, the exact value."""
    started = time.perf_counter()
    report = _new_report("moments", config)
    rows = []
    errors: dict[int, dict[int, float]] = {}
    for n in config.dimensions:
        cfg = config.for_dimension(n)
        fam = load_or_construct(cfg)
        spec = sample_spec(cfg)
        samples = np.array(
            run_trials(
                fam, spec, lambda phi: trace_moments(gram(phi), cfg.lmax), cfg.workers
            )
        )
        ratio = spec.p / n
        for ell in range(1, cfg.lmax + 1):
            column = samples[:, ell - 1]
            empirical = float(column.mean())
            stderr = (
                float(column.std(ddof=1) / math.sqrt(len(column)))
                if len(column) > 1
                else None
            )
            reference = mp_moment(ell, ratio)
            error = abs(empirical - reference)
            exact = (
                _safe_exact(lambda: expectation_exact(ell, spec.p, fam))
                if ell <= MAX_EXACT_MOMENT
                else None
            )
            rows.append((n, ell, empirical, stderr, reference, error, exact))
            errors.setdefault(ell, {})[n] = error
            tolerance = _moment_tolerance(ell, fam.m, n)
            report.check(
                f"moment n={n} l={ell}",
                error <= tolerance,
                f"|error| {error:.4g} <= {tolerance:.4g}",
            )

    write_csv(
        config.out / "moments.csv",
        ["n", "l", "empirical", "stderr", "mp", "abs_error", "exact"],
        rows,
    )
    if len(config.dimensions) > 1:
        smallest, largest = min(config.dimensions), max(config.dimensions)
        for ell in range(2, config.lmax + 1):
            first, last = errors[ell][smallest], errors[ell][largest]
            report.check(
                f"moment trend l={ell}",
                last < first,
                f"error {last:.4g} at n={largest} < {first:.4g} at n={smallest}",
            )
    report.trial_seeds = _trial_seeds(config)
    report.results["rows"] = len(rows)
    logger.info("moments took {:.3f}s", _since(started))
    report.write(config.out)
    return report


def run_variance(config: ExperimentConfig) -> RunReport:
    """Sample variance of A_l across trials for each dimension of the sweep."""
    started = time.perf_counter()
    report = _new_report("variance", config)
    rows = []
    variances: dict[int, dict[int, float]] = {}
    for n in config.dimensions:
        cfg = config.for_dimension(n)
        fam = load_or_construct(cfg)
        spec = sample_spec(cfg)
        samples = np.array(
            run_trials(
                fam, spec, lambda phi: trace_moments(gram(phi), cfg.lmax), cfg.workers
            )
        )
        ddof = 1 if len(samples) > 1 else 0
        for ell in range(1, cfg.lmax + 1):
            variance = float(samples[:, ell - 1].var(ddof=ddof))
            exact = (
                _safe_exact(lambda: variance_exact(ell, spec.p, fam))
                if ell <= MAX_EXACT_VARIANCE
                else None
            )
            rows.append((n, ell, spec.p, variance, exact))
            variances.setdefault(ell, {})[n] = variance

    write_csv(
        config.out / "variance.csv",
        ["n", "l", "p", "sample_variance", "exact"],
        rows,
    )
    ordered = sorted(config.dimensions)
    for ell in range(2, config.lmax + 1):
        for n1, n2 in itertools.pairwise(ordered):
            v1, v2 = variances[ell][n1], variances[ell][n2]
            report.check(
                f"variance decay l={ell} n={n1}->{n2}",
                v2 < v1,
                f"{v2:.4g} < {v1:.4g}",
            )
    # only checked when the sweep spans at least a factor VARIANCE_RATIO_SPAN in n
    smallest, largest = ordered[0], ordered[-1]
    if largest >= VARIANCE_RATIO_SPAN * smallest:
        for ell in range(2, config.lmax + 1):
            v1, v2 = variances[ell][smallest], variances[ell][largest]
            report.check(
                f"variance ratio l={ell} n={smallest}->{largest}",
                v1 >= VARIANCE_DECAY_RATIO * v2,
                f"{v1:.4g} >= {VARIANCE_DECAY_RATIO:g} * {v2:.4g}",
            )
    report.trial_seeds = _trial_seeds(config)
    report.results["rows"] = len(rows)
    logger.info("variance took {:.3f}s", _since(started))
    report.write(config.out)
    return report


def run_paths(config: ExperimentConfig) -> RunReport:
    """Enumerate paths of length lmax, classify them and attach W oracles."""
    started = time.perf_counter()
    ell = config.lmax
    report = _new_report("paths", config)
    fam = load_or_construct(config) if ell <= W_COLUMNS_MAX_LENGTH else None

    rows = []
    constants = []
    for path in enumerate_paths(ell):
        trace = reduce(path)
        value = None
        if fam is not None:
            try:
                value = w_exact(path, fam)
            except CostGuardError as e:
                logger.debug("No W for {}: {}", path, e)
        if value is not None and value.observed_constant is not None:
            constants.append(value.observed_constant)
        rows.append(
            (
                str(path),
                ell,
                path.vertex_count,
                trace.single_loop,
                trace.u,
                trace.w,
                None if value is None else value.value.real,
                None if value is None else value.value.imag,
                None if value is None else value.predicted,
                None if value is None else value.bound,
                None if value is None else value.within(W_BOUND_CONSTANT),
            )
        )

    write_csv(
        config.out / "paths.csv",
        [
            "word",
            "l",
            "v",
            "in_gamma",
            "u",
            "w",
            "w_exact_re",
            "w_exact_im",
            "predicted",
            "bound",
            "within_bound",
        ],
        rows,
    )
    for v, count, expected in gamma_table(ell):
        report.check(f"narayana l={ell} v={v}", count == expected, f"{count}")
    checked = [row[-1] for row in rows if row[-1] is not None]
    if checked:
        report.check(
            "w bound",
            all(checked),
            f"{sum(checked)}/{len(checked)} paths within prediction or bound",
        )
    report.results.update(
        paths=len(rows),
        gamma_members=sum(row[3] for row in rows),
        max_observed_constant=max(constants, default=None),
    )
    logger.info("paths l={} took {:.3f}s", ell, _since(started))
    report.write(config.out)
    return report


def run_mp(config: ExperimentConfig) -> RunReport:
    """Closed-form against quadrature moments of the MP law at ratio y."""
    report = _new_report("mp", config)
    params = MPParams(config.y)
    rows = []
    for ell in range(1, config.lmax + 1):
        closed = mp_moment(ell, config.y)
        quadrature = mp_quadrature_moment(ell, config.y)
        rows.append((ell, config.y, closed, quadrature, abs(closed - quadrature)))
    write_csv(
        config.out / "mp.csv",
        ["l", "y", "closed_form", "quadrature", "abs_error"],
        rows,
    )
    normalization = mp_quadrature_moment(0, config.y)
    worst = max(row[-1] for row in rows)
    report.results.update(
        a=params.a,
        b=params.b,
        median=mp_quantile(params, 0.5),
        normalization=normalization,
        max_moment_error=worst,
    )
    report.check("moments agree", worst <= MP_TOL, f"max error {worst:.3g}")
    report.check(
        "normalized",
        abs(normalization - 1) <= MP_TOL,
        f"integral {normalization:.12f}",
    )
    report.write(config.out)
    return report
