import csv
import json
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence

from loguru import logger

MASK64 = (1 << 64) - 1

# SplitMix64 constants (golden-ratio increment and the two finalizer multipliers)
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULT_1 = 0xBF58476D1CE4E5B9
MIX_MULT_2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijective avalanche mix of a 64-bit word."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_MULT_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MULT_2) & MASK64
    return z ^ (z >> 31)


def mix_seed(seed: int, index: int) -> int:
    """Derive the 64-bit key of substream `index` from a run seed.

    The key is the `index + 1`-th output of a SplitMix64 generator started at
    `seed`, so distinct trial indices give well separated keys.
    """
    if seed < 0 or index < 0:
        raise ValueError(f"Seed and index must be non-negative, got {seed}, {index}")
    return mix64((seed & MASK64) + GOLDEN_GAMMA * (index + 1))


def fmt(value: Any) -> str:
    """Format a CSV cell: floats with 17 significant digits, bools lowercase."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            assert len(row) == len(header), (row, header)
            writer.writerow([fmt(v) for v in row])
    logger.info("Wrote {}", path)
    return path


def write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    logger.info("Wrote {}", path)
    return path


def configure_logging(verbose: bool = False) -> None:
    """Route loguru to stderr at INFO, or DEBUG when verbose."""
    logger.remove()
    logger.add(
        sys.stderr,
        level="DEBUG" if verbose else "INFO",
        format="<level>{level: <8}</level> {message}",
    )


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_power(n: int) -> tuple[int, int] | None:
    """Return (p, k) with n = p**k, or None when n is not a prime power."""
    if n < 2:
        return None
    p = next(d for d in range(2, n + 1) if n % d == 0)
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return (p, k) if n == 1 else None
