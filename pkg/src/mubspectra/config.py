"""Experiment configuration: defaults, a JSON config file, and CLI flags."""

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Annotated, Any

from cyclopts import Group, Parameter
from loguru import logger

from mubspectra.paths import MAX_PATH_LENGTH

EXPERIMENT_GROUP = Group.create_ordered("Experiment parameters")
OUTPUT_GROUP = Group.create_ordered("Output parameters")


@dataclass
class ExperimentFlags:
    """Flags shared by every experiment subcommand; None means not given."""

    n: Annotated[int | None, Parameter(help="Dimension (a prime power).")] = None
    m: Annotated[
        int | None, Parameter(help="Number of bases; defaults to n+1.")
    ] = None
    y: Annotated[float | None, Parameter(help="Aspect ratio p/n.")] = None
    trials: Annotated[int | None, Parameter(help="Monte-Carlo trials.")] = None
    seed: Annotated[int | None, Parameter(help="Run seed.")] = None
    lmax: Annotated[
        int | None, Parameter(help="Largest moment order (path length for paths).")
    ] = None
    bins: Annotated[int | None, Parameter(help="Histogram bins.")] = None
    out: Annotated[
        Path | None, Parameter(help="Output directory.", group=OUTPUT_GROUP)
    ] = None
    config: Annotated[
        Path | None, Parameter(help="JSON config file; flags override it.")
    ] = None
    basis: Annotated[
        Path | None, Parameter(help="Basis file to load instead of constructing.")
    ] = None
    sweep: Annotated[
        list[int] | None,
        Parameter(help="Dimensions to sweep; repeat the flag for each."),
    ] = None
    workers: Annotated[int | None, Parameter(help="Worker threads for trials.")] = None
    ks_threshold: Annotated[
        float | None, Parameter(help="Largest acceptable KS distance.")
    ] = None
    verbose: Annotated[bool, Parameter(help="Log every trial.")] = False


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment; `m=None` means the complete family."""

    n: int = 13
    m: int | None = None
    y: float = 0.5
    trials: int = 100
    seed: int = 0
    lmax: int = 4
    bins: int = 40
    out: Path = Path("out")
    basis: Path | None = None
    sweep: tuple[int, ...] = field(default_factory=tuple)
    workers: int = 1
    ks_threshold: float = 0.08
    verbose: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"Dimension must be at least 2, got n={self.n}")
        if not 1 <= self.bases <= self.n + 1:
            raise ValueError(f"Need 1 <= m <= n+1 = {self.n + 1}, got m={self.bases}")
        if not 0 < self.y < 1:
            raise ValueError(f"Aspect ratio y must lie in (0, 1), got {self.y}")
        if not 1 <= self.p < self.n:
            raise ValueError(f"p = round(y·n) = {self.p} must lie in [1, n)")
        if self.trials < 1:
            raise ValueError(f"Need at least one trial, got {self.trials}")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError(f"Seed must fit in 64 unsigned bits, got {self.seed}")
        if not 1 <= self.lmax <= MAX_PATH_LENGTH:
            raise ValueError(f"lmax must lie in 1..{MAX_PATH_LENGTH}, got {self.lmax}")
        if self.bins < 1:
            raise ValueError(f"Need at least one bin, got {self.bins}")
        if self.workers < 1:
            raise ValueError(f"Need at least one worker, got {self.workers}")
        if self.ks_threshold <= 0:
            raise ValueError(f"KS threshold must be positive, got {self.ks_threshold}")

    @property
    def bases(self) -> int:
        return self.n + 1 if self.m is None else self.m

    @property
    def p(self) -> int:
        return round(self.y * self.n)

    @property
    def below_sqrt_bound(self) -> bool:
        return self.bases < math.sqrt(self.n)

    @property
    def dimensions(self) -> tuple[int, ...]:
        """The sweep, or just n when no sweep is configured."""
        return self.sweep or (self.n,)

    def for_dimension(self, n: int) -> "ExperimentConfig":
        return replace(self, n=n, sweep=())

    def to_dict(self) -> dict[str, Any]:
        payload = asdict(self)
        payload["out"] = str(self.out)
        payload["basis"] = None if self.basis is None else str(self.basis)
        payload["sweep"] = list(self.sweep)
        payload["p"] = self.p
        payload["bases"] = self.bases
        return payload

    @classmethod
    def from_runtime_args(
        cls, flags: ExperimentFlags, config_path: Path | None = None
    ) -> "ExperimentConfig":
        """Resolve all runtime arguments into a config.

        Precedence (later overrides earlier):
        1. Built-in defaults
        2. JSON config file
        3. Individual flags
        """
        # === LAYER 2: JSON config file (layer 1 is the dataclass defaults) ===
        config_path = config_path or flags.config
        values: dict[str, Any] = {}
        if config_path is not None:
            values.update(_read_config_file(config_path))

        # === LAYER 3: individual flags ===
        for name in _FIELD_NAMES:
            value = getattr(flags, name, None)
            if value is not None and value is not False:
                values[name] = value

        if "sweep" in values:
            values["sweep"] = tuple(values["sweep"])
        for key in ("out", "basis"):
            if values.get(key) is not None:
                values[key] = Path(values[key])

        return cls(**values)


_FIELD_NAMES = tuple(f.name for f in fields(ExperimentConfig))

# JSON types accepted per field; paths arrive as strings, the sweep as a list
_JSON_TYPES: dict[str, tuple[type, ...]] = {
    "n": (int,),
    "m": (int, type(None)),
    "y": (int, float),
    "trials": (int,),
    "seed": (int,),
    "lmax": (int,),
    "bins": (int,),
    "out": (str,),
    "basis": (str, type(None)),
    "sweep": (list,),
    "workers": (int,),
    "ks_threshold": (int, float),
    "verbose": (bool,),
}


def _check_json_type(path: Path, key: str, value: Any) -> None:
    expected = _JSON_TYPES[key]
    # bool is an int subclass; only "verbose" takes one
    wrong = not isinstance(value, expected) or (
        isinstance(value, bool) and bool not in expected
    )
    if key == "sweep" and not wrong:
        wrong = any(isinstance(n, bool) or not isinstance(n, int) for n in value)
    if wrong:
        names = " or ".join(t.__name__ for t in expected)
        raise ValueError(
            f"Config key {key!r} in {path} must be {names}, got {value!r}"
        )


def _read_config_file(path: Path) -> dict[str, Any]:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ValueError(f"Cannot read config file {path}: {e}") from e
    if not isinstance(payload, dict):
        raise ValueError(f"Config file {path} must hold a JSON object")
    unknown = sorted(set(payload) - set(_FIELD_NAMES))
    if unknown:
        raise ValueError(f"Unknown keys in {path}: {', '.join(unknown)}")
    for key, value in payload.items():
        _check_json_type(path, key, value)
    logger.debug("Loaded config {}: {}", path, payload)
    return payload
