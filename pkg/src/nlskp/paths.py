"""Piecewise-constant cadlag paths sampled on finite time grids.

A path holds one value per grid instant and equals ``values[i]`` on
[t_i, t_{i+1}) and ``values[-1]`` from the last instant on.  Suprema and
infima over closed index windows are attained at grid points, so the
window extrema, oscillations and shifts used by the reflection machinery
are exact, not approximations.

Everything here is immutable and pure; paths are safe to share across
threads.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import InputError

__all__ = [
    "TimeGrid",
    "CadlagPath",
    "union_grid",
    "constant_path",
    "pointwise",
    "add_scalar",
    "read_path_csv",
    "write_path_csv",
]


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing finite instants t_0 < ... < t_{n-1} with t_0 = 0."""

    times: tuple[float, ...]

    def __post_init__(self) -> None:
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", times)
        if not times:
            raise InputError("a grid needs at least one instant")
        if not all(math.isfinite(t) for t in times):
            raise InputError("grid instants must be finite")
        if times[0] != 0.0:
            raise InputError("grids start at t=0; shifted grids renormalize")
        for a, b in zip(times, times[1:]):
            if not a < b:
                raise InputError("grid instants must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.times)

    @property
    def horizon(self) -> float:
        return self.times[-1]

    def index_of(self, t: float) -> int:
        """Index of an exact grid instant; off-grid times are refused."""
        i = bisect.bisect_left(self.times, t)
        if i == len(self.times) or self.times[i] != t:
            raise InputError(f"t={t!r} is not a grid instant")
        return i

    def locate(self, t: float) -> int:
        """Largest index i with t_i <= t (right-continuous lookup)."""
        if t < 0:
            raise InputError("lookup time must be nonnegative")
        return bisect.bisect_right(self.times, t) - 1


def union_grid(*grids: TimeGrid) -> TimeGrid:
    """Union of several grids; two-path operations align here first."""
    if not grids:
        raise InputError("union_grid needs at least one grid")
    times: set[float] = set()
    for g in grids:
        times.update(g.times)
    return TimeGrid(tuple(sorted(times)))


@dataclass(frozen=True)
class CadlagPath:
    """Right-continuous step path: ``values[i]`` on [t_i, t_{i+1})."""

    grid: TimeGrid
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) != self.grid.n:
            raise InputError("one value per grid instant required")
        if not all(math.isfinite(v) for v in values):
            raise InputError("path values must be finite")

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def times(self) -> tuple[float, ...]:
        return self.grid.times

    def at(self, t: float) -> float:
        """Right-continuous lookup, constant after the last sample."""
        return self.values[self.grid.locate(t)]

    def left_limit(self, i: int, pre_origin: float | None = None) -> float:
        """Value just before t_i.

        At i=0 the declared pre-origin value applies: inputs extend
        flat (default, value[0]); regulators pass ``pre_origin=0.0``.
        """
        if not 0 <= i < self.n:
            raise InputError(f"index {i} out of range")
        if i > 0:
            return self.values[i - 1]
        return self.values[0] if pre_origin is None else float(pre_origin)

    def _check_window(self, i: int, j: int) -> None:
        if not 0 <= i <= j < self.n:
            raise InputError(f"bad window [{i}, {j}] for n={self.n}")

    def window_extrema(self, i: int, j: int) -> tuple[float, float]:
        """Exact (min, max) of the path over [t_i, t_j]."""
        self._check_window(i, j)
        window = self.values[i : j + 1]
        return min(window), max(window)

    def oscillation(self, i: int, j: int) -> float:
        """sup |path(a) - path(b)| over a, b in [t_i, t_j]."""
        lo, hi = self.window_extrema(i, j)
        return hi - lo

    def shift_plain(self, d: float) -> "CadlagPath":
        """Tail from grid instant d on the renormalized grid (lookahead H_d)."""
        j = self.grid.index_of(d)
        times = tuple(t - d for t in self.times[j:])
        return CadlagPath(TimeGrid(times), self.values[j:])

    def shift_centered(self, d: float) -> "CadlagPath":
        """Tail from d, recentered to start at 0 (increment view T_d)."""
        j = self.grid.index_of(d)
        times = tuple(t - d for t in self.times[j:])
        base = self.values[j]
        return CadlagPath(TimeGrid(times), tuple(v - base for v in self.values[j:]))

    def on(self, grid: TimeGrid) -> "CadlagPath":
        """Resample onto a refining grid by right-continuous lookup.

        The target must contain every instant of the original grid so the
        step structure is preserved exactly.
        """
        own = set(self.times)
        if not own.issubset(grid.times):
            raise InputError("target grid must refine the path's grid")
        return CadlagPath(grid, tuple(self.at(t) for t in grid.times))


def constant_path(value: float, grid: TimeGrid | None = None) -> CadlagPath:
    if grid is None:
        grid = TimeGrid((0.0,))
    return CadlagPath(grid, (float(value),) * grid.n)


def pointwise(fn: Callable[..., float], *paths: CadlagPath) -> CadlagPath:
    """Combine same-grid paths value by value."""
    if not paths:
        raise InputError("pointwise needs at least one path")
    grid = paths[0].grid
    for p in paths[1:]:
        if p.grid != grid:
            raise InputError("pointwise requires identical grids; merge first")
    return CadlagPath(grid, tuple(fn(*vs) for vs in zip(*(p.values for p in paths))))


def add_scalar(path: CadlagPath, c: float) -> CadlagPath:
    return CadlagPath(path.grid, tuple(v + c for v in path.values))


def read_path_csv(source) -> CadlagPath:
    """Read a ``t,value`` CSV; strictly increasing t, first t must be 0."""

    def parse(rows: Iterable[list[str]]) -> CadlagPath:
        it = iter(rows)
        try:
            header = next(it)
        except StopIteration:
            raise InputError("empty path CSV") from None
        if [h.strip() for h in header] != ["t", "value"]:
            raise InputError("path CSV header must be exactly 't,value'")
        times: list[float] = []
        values: list[float] = []
        for row in it:
            if not row:
                continue
            if len(row) != 2:
                raise InputError(f"malformed path CSV row: {row!r}")
            try:
                times.append(float(row[0]))
                values.append(float(row[1]))
            except ValueError as exc:
                raise InputError(f"non-numeric path CSV row: {row!r}") from exc
        return CadlagPath(TimeGrid(tuple(times)), tuple(values))

    if hasattr(source, "read"):
        return parse(csv.reader(source))
    with open(source, newline="") as fh:
        return parse(csv.reader(fh))


def write_path_csv(path: CadlagPath, dest) -> None:
    """Write a path as ``t,value`` rows with full float round-trip precision."""

    def emit(fh) -> None:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        for t, v in zip(path.times, path.values):
            w.writerow([f"{t:.17g}", f"{v:.17g}"])

    if hasattr(dest, "write"):
        emit(dest)
    else:
        with open(dest, "w", newline="") as fh:
            emit(fh)
