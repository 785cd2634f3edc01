"""Time series containers, UCR ingestion and instance sampling."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .warping import GlobalConstraint, NO_CONSTRAINT


class ParseError(ValueError):
    """Malformed UCR or instance input."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ReductionError(ValueError):
    """Block reduction to an impossible length."""


class TimeSeries:
    """An immutable finite univariate series of floats."""

    __slots__ = ("_values",)

    def __init__(self, values: Iterable[float]):
        arr = np.array(list(values) if not isinstance(values, np.ndarray) else values,
                       dtype=np.float64).ravel()
        if arr.size < 1:
            raise ValueError("time series must have length >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("time series values must be finite")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __len__(self) -> int:
        return self._values.size

    def __getitem__(self, idx):
        return self._values[idx]

    def __iter__(self):
        return iter(self._values.tolist())

    def __array__(self, dtype=None, copy=None):
        return self._values if dtype is None else self._values.astype(dtype)

    def __eq__(self, other) -> bool:
        if isinstance(other, TimeSeries):
            return np.array_equal(self._values, other._values)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._values.tobytes())

    def __repr__(self) -> str:
        return f"TimeSeries({self._values.tolist()!r})"

    def tolist(self) -> list[float]:
        return self._values.tolist()


@dataclass(frozen=True)
class LabeledSeries:
    label: int
    series: TimeSeries


@dataclass(frozen=True)
class Instance:
    """A sample of ``k`` series plus an optional global constraint."""

    samples: tuple[TimeSeries, ...]
    constraint: GlobalConstraint = NO_CONSTRAINT
    name: str = "instance"

    def __post_init__(self):
        samples = tuple(s if isinstance(s, TimeSeries) else TimeSeries(s) for s in self.samples)
        if not samples:
            raise ValueError("an instance needs at least one series")
        object.__setattr__(self, "samples", samples)

    @property
    def k(self) -> int:
        return len(self.samples)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.samples)

    def with_constraint(self, constraint: GlobalConstraint) -> "Instance":
        return Instance(self.samples, constraint, self.name)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "constraint": self.constraint.to_json(),
            "series": [s.tolist() for s in self.samples],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Instance":
        try:
            series = [TimeSeries(s) for s in data["series"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad instance JSON: {exc}") from exc
        return cls(tuple(series), GlobalConstraint.from_json(data.get("constraint")),
                   data.get("name", "instance"))


_SPLIT = re.compile(r"[,\s]+")


def parse_ucr(text: str) -> list[LabeledSeries]:
    """Parse UCR rows: an integer label followed by the series values.

    Fields are separated by commas or runs of whitespace. The label is
    truncated to an integer (UCR files sometimes write ``1.0``).
    """
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f for f in _SPLIT.split(line) if f]
        try:
            nums = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(f"non-numeric token ({exc})", lineno) from None
        if len(nums) < 2:
            raise ParseError("label without values", lineno)
        if not all(math.isfinite(v) for v in nums):
            raise ParseError("non-finite value", lineno)
        out.append(LabeledSeries(int(nums[0]), TimeSeries(nums[1:])))
    return out


def format_ucr(rows: Sequence[LabeledSeries], sep: str = "\t") -> str:
    """Inverse of :func:`parse_ucr`; floats are written with ``repr`` precision."""
    lines = []
    for row in rows:
        lines.append(sep.join([str(row.label)] + [repr(float(v)) for v in row.series]))
    return "\n".join(lines) + ("\n" if lines else "")


def load_ucr(path) -> list[LabeledSeries]:
    return parse_ucr(Path(path).read_text())


def block_reduce(s: TimeSeries, m: int) -> TimeSeries:
    """Average successive disjoint blocks of ``len(s) // m`` values.

    Values beyond the first ``m`` blocks are dropped.
    """
    n = len(s)
    if m < 1 or m > n:
        raise ReductionError(f"cannot reduce a series of length {n} to length {m}")
    size = n // m
    vals = np.asarray(s, dtype=float)[: m * size]
    return TimeSeries(vals.reshape(m, size).mean(axis=1))


def sample_instance(pool: Sequence[TimeSeries], k: int, m: int, seed: int,
                    constraint: GlobalConstraint = NO_CONSTRAINT,
                    name: Optional[str] = None) -> Instance:
    """Draw ``k`` series from ``pool`` and block-reduce each to length ``m``.

    Draws are without replacement unless ``k`` exceeds the pool size.
    """
    if not pool:
        raise ValueError("cannot sample from an empty pool")
    if k < 1:
        raise ValueError("k must be positive")
    if m > min(len(s) for s in pool):
        raise ReductionError(f"m={m} exceeds the shortest pool series")
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    idx = rng.choice(len(pool), size=k, replace=k > len(pool))
    samples = tuple(block_reduce(pool[int(i)], m) for i in idx)
    return Instance(samples, constraint, name or f"sample-k{k}-m{m}-seed{seed}")


def load_instance(path) -> Instance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return Instance.from_json(data)


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(inst.to_json(), indent=2) + "\n")
