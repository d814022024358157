"""Nonlinear constraint families, strictly increasing and bi-Lipschitz in x.

Three closed-form families ship:

* ``linear``  g(t, x) = x - b_t                 (c = C = 1)
* ``scaled``  g(t, x) = a * (x - b_t)           (c = C = a)
* ``sine``    g(t, x) = x + eps*sin(omega*x) - b_t
              (c = 1 - |eps*omega|, C = 1 + |eps*omega|, needs |eps*omega| < 1)

b is a cadlag offset path, so t -> g(t, x) is cadlag for fixed x.  The
sandwich constants are analytic per family, never estimated.  A pair
(ceiling, floor) must share family and shape parameters, which makes the
gap floor - ceiling independent of x and the separation alpha exact: it is
the minimum of the offset gap over the merged offset grid.

Solutions are constrained by ``ceiling(t, X_t) <= 0 <= floor(t, X_t)``:
the ceiling caps X from above (its root drives the pull-down regulator),
the floor supports it from below (its root drives the push-up regulator).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError, NumericError
from .paths import CadlagPath, TimeGrid, constant_path, read_path_csv, union_grid

__all__ = [
    "FAMILIES",
    "BoundaryFunction",
    "BoundaryPair",
    "AssumptionReport",
    "validate_assumption",
    "boundary_from_jsonable",
    "boundary_to_jsonable",
    "pair_from_jsonable",
    "pair_to_jsonable",
    "load_pair",
]

FAMILIES = ("linear", "scaled", "sine")

# Residual target for root inversion: 1e-12 relative to the defect being
# killed; the bracket is guaranteed, so 200 halvings is generous.
ROOT_RTOL = 1e-12
ROOT_MAX_ITER = 200


@dataclass(frozen=True)
class BoundaryFunction:
    """One constraint g(t, x) from a shipped family."""

    family: str
    offset: CadlagPath
    a: float = 1.0
    eps: float = 0.0
    omega: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InputError(f"unknown boundary family {self.family!r}")
        if self.family == "scaled" and not self.a > 0:
            raise InputError("scaled family needs a > 0")
        if self.family == "sine" and not abs(self.eps * self.omega) < 1.0:
            raise InputError("sine family needs |eps*omega| < 1 (else c <= 0)")

    @property
    def c(self) -> float:
        if self.family == "scaled":
            return self.a
        if self.family == "sine":
            return 1.0 - abs(self.eps * self.omega)
        return 1.0

    @property
    def C(self) -> float:
        if self.family == "scaled":
            return self.a
        if self.family == "sine":
            return 1.0 + abs(self.eps * self.omega)
        return 1.0

    def value(self, t: float, x: float) -> float:
        b = self.offset.at(t)
        if self.family == "linear":
            return x - b
        if self.family == "scaled":
            return self.a * (x - b)
        return x + self.eps * math.sin(self.omega * x) - b

    def invert(self, t: float, v: float, tol: float | None = None) -> float:
        """Root x* of g(t, v + x) = 0, to residual |g| <= tol.

        The bracket {-g(t,v)/c, -g(t,v)/C} straddles the root by the
        bi-Lipschitz sandwich; for c == C it already is the root.
        """
        g0 = self.value(t, v)
        if g0 == 0.0:
            return 0.0
        lo = -g0 / self.c
        hi = -g0 / self.C
        if lo == hi:
            return lo
        if lo > hi:
            lo, hi = hi, lo
        if tol is None:
            tol = ROOT_RTOL * max(1.0, abs(g0))

        def f(x: float) -> float:
            return self.value(t, v + x)

        # Rounding of the bracket endpoints can exclude the root by an ulp;
        # nudge outward geometrically before declaring failure.
        pad = math.ldexp(max(1.0, abs(lo), abs(hi)), -48)
        tries = 0
        while f(lo) > 0.0:
            lo -= pad
            pad *= 2.0
            tries += 1
            if tries > 16:
                raise NumericError("root bracket lost below (should be unreachable)")
        pad = math.ldexp(max(1.0, abs(lo), abs(hi)), -48)
        tries = 0
        while f(hi) < 0.0:
            hi += pad
            pad *= 2.0
            tries += 1
            if tries > 16:
                raise NumericError("root bracket lost above (should be unreachable)")

        for _ in range(ROOT_MAX_ITER):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if abs(fm) <= tol:
                return mid
            if fm < 0.0:
                lo = mid
            else:
                hi = mid
        raise NumericError(
            f"root inversion did not reach |g| <= {tol:g} in {ROOT_MAX_ITER} steps"
        )

    def temporal_gap(self, t: float, s: float) -> float:
        """sup_x |g(t, x) - g(s, x)|, analytic: the offset move (scaled by a)."""
        d = abs(self.offset.at(t) - self.offset.at(s))
        return self.a * d if self.family == "scaled" else d

    def shifted(self, d: float, grid: TimeGrid | None = None) -> "BoundaryFunction":
        """Constraint seen from time d on: offset replaced by its tail.

        ``grid``, when given, refines the offset first so d need not sit on
        the offset's own grid.
        """
        off = self.offset if grid is None else self.offset.on(grid)
        return BoundaryFunction(self.family, off.shift_plain(d), self.a, self.eps, self.omega)


def _same_shape(u: BoundaryFunction, v: BoundaryFunction) -> bool:
    return (
        u.family == v.family
        and u.a == v.a
        and u.eps == v.eps
        and u.omega == v.omega
    )


@dataclass(frozen=True)
class BoundaryPair:
    """Ordered constraints with exact positive separation.

    ``ceiling`` is the g that must stay <= 0, ``floor`` the one that must
    stay >= 0.  Both share family and shape parameters (construction rule),
    so floor - ceiling is x-free and alpha = inf_t (floor - ceiling) is
    computed exactly from the two offset paths.
    """

    ceiling: BoundaryFunction
    floor: BoundaryFunction
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if not _same_shape(self.ceiling, self.floor):
            raise InputError(
                "pair members must share family and shape parameters "
                "(the x-free-gap rule); mixed pairs cannot certify separation"
            )
        grid = union_grid(self.ceiling.offset.grid, self.floor.offset.grid)
        scale = self.ceiling.a if self.ceiling.family == "scaled" else 1.0
        gaps = [
            scale * (self.ceiling.offset.at(t) - self.floor.offset.at(t))
            for t in grid.times
        ]
        alpha = min(gaps)
        if not alpha > 0.0:
            raise InputError(
                f"separation alpha = {alpha:g} must be positive; "
                "offsets cross or touch"
            )
        object.__setattr__(self, "alpha", alpha)

    @property
    def c(self) -> float:
        return self.ceiling.c

    @property
    def C(self) -> float:
        return self.ceiling.C

    def gap(self, t: float) -> float:
        """floor(t, x) - ceiling(t, x); independent of x."""
        scale = self.ceiling.a if self.ceiling.family == "scaled" else 1.0
        return scale * (self.ceiling.offset.at(t) - self.floor.offset.at(t))


@dataclass(frozen=True)
class AssumptionReport:
    """Worst sampled violations of monotonicity, sandwich and separation."""

    passed: bool
    worst_monotonicity: float
    worst_sandwich: float
    min_separation: float
    alpha: float


def validate_assumption(
    pair: BoundaryPair,
    grid: TimeGrid,
    x_lo: float,
    x_hi: float,
    m: int,
    tol: float = 1e-9,
) -> AssumptionReport:
    """Smoke-test the pair on samples; the analytic constants stay authoritative."""
    if not x_lo < x_hi:
        raise InputError("need x_lo < x_hi")
    if m < 2:
        raise InputError("need at least two x samples")
    xs = [x_lo + (x_hi - x_lo) * k / (m - 1) for k in range(m)]
    worst_mono = -math.inf
    worst_sand = -math.inf
    min_sep = math.inf
    for t in grid.times:
        for g in (pair.ceiling, pair.floor):
            prev = g.value(t, xs[0])
            for k in range(1, m):
                cur = g.value(t, xs[k])
                dg = cur - prev
                dx = xs[k] - xs[k - 1]
                worst_mono = max(worst_mono, -dg)
                worst_sand = max(worst_sand, g.c * dx - abs(dg), abs(dg) - g.C * dx)
                prev = cur
        for x in xs:
            min_sep = min(min_sep, pair.floor.value(t, x) - pair.ceiling.value(t, x))
    passed = worst_mono <= tol and worst_sand <= tol and min_sep >= pair.alpha - tol
    return AssumptionReport(passed, worst_mono, worst_sand, min_sep, pair.alpha)


def _offset_from_jsonable(obj, base_dir: str | Path) -> CadlagPath:
    if not isinstance(obj, dict):
        raise InputError("offset must be an object with 'const' or 'file'")
    if "const" in obj:
        return constant_path(float(obj["const"]))
    if "file" in obj:
        return read_path_csv(Path(base_dir) / obj["file"])
    raise InputError("offset needs 'const' or 'file'")


def boundary_from_jsonable(obj, base_dir: str | Path = ".") -> BoundaryFunction:
    if not isinstance(obj, dict) or "family" not in obj:
        raise InputError("boundary JSON needs a 'family' key")
    family = obj["family"]
    if family not in FAMILIES:
        raise InputError(f"unknown boundary family {family!r}")
    offset = _offset_from_jsonable(obj.get("offset", {"const": 0.0}), base_dir)
    return BoundaryFunction(
        family,
        offset,
        a=float(obj.get("a", 1.0)),
        eps=float(obj.get("eps", 0.0)),
        omega=float(obj.get("omega", 0.0)),
    )


def boundary_to_jsonable(b: BoundaryFunction) -> dict:
    out: dict = {"family": b.family}
    if b.offset.n == 1:
        out["offset"] = {"const": b.offset.values[0]}
    else:
        # No canonical file home when serializing; inline the samples.
        out["offset"] = {
            "times": list(b.offset.times),
            "values": list(b.offset.values),
        }
    if b.family == "scaled":
        out["a"] = b.a
    if b.family == "sine":
        out["eps"] = b.eps
        out["omega"] = b.omega
    return out


def _maybe_inline_offset(obj, base_dir) -> CadlagPath | None:
    if isinstance(obj, dict) and "times" in obj and "values" in obj:
        return CadlagPath(TimeGrid(tuple(obj["times"])), tuple(obj["values"]))
    return None


def pair_from_jsonable(obj, base_dir: str | Path = ".") -> BoundaryPair:
    if not isinstance(obj, dict) or "L" not in obj or "R" not in obj:
        raise InputError("pair JSON needs 'L' and 'R' boundaries")

    def build(spec) -> BoundaryFunction:
        inline = _maybe_inline_offset(spec.get("offset"), base_dir) if isinstance(spec, dict) else None
        if inline is not None:
            return BoundaryFunction(
                spec["family"],
                inline,
                a=float(spec.get("a", 1.0)),
                eps=float(spec.get("eps", 0.0)),
                omega=float(spec.get("omega", 0.0)),
            )
        return boundary_from_jsonable(spec, base_dir)

    return BoundaryPair(ceiling=build(obj["L"]), floor=build(obj["R"]))


def pair_to_jsonable(pair: BoundaryPair) -> dict:
    return {"L": boundary_to_jsonable(pair.ceiling), "R": boundary_to_jsonable(pair.floor)}


def load_pair(path: str | Path) -> BoundaryPair:
    path = Path(path)
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read pair file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"pair file {path} is not valid JSON: {exc}") from exc
    return pair_from_jsonable(obj, base_dir=path.parent)
