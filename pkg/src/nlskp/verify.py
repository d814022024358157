"""Executable theorem suite over solved instances and instance pairs.

Every check asserts a quantified, per-grid-instant statement with an
explicit tolerance and reports the worst violation and where it happened.
Inequalities are asserted pointwise exactly as displayed; the only
metric-level claim (the J1 bound) is asserted through its per-time-change
proof form plus an exact dynamic-programming distance oracle on small
grids.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .boundaries import BoundaryFunction, BoundaryPair
from .decomposition import split_variation, support_check
from .errors import InputError
from .paths import CadlagPath, TimeGrid, add_scalar, union_grid
from .reflector import (
    TOL_CHECK,
    SkorokhodSolution,
    solve,
    solve_one_sided,
)

__all__ = [
    "VerificationReport",
    "TimeChange",
    "j1_distance",
    "check_definition",
    "check_shift",
    "check_comparison_one_sided",
    "check_comparison_net",
    "check_comparison_split",
    "check_monotone_boundaries",
    "check_uniform_continuity",
    "check_j1_bound",
    "check_oscillation_domination",
]


@dataclass(frozen=True)
class VerificationReport:
    check_name: str
    passed: bool
    worst_violation: float
    location: int | None
    details: str

    def to_jsonable(self) -> dict:
        return {
            "check_name": self.check_name,
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "location": self.location,
            "details": self.details,
        }


class _Tracker:
    """Running worst violation with its grid index and label."""

    def __init__(self) -> None:
        self.worst = -math.inf
        self.location: int | None = None
        self.label = ""

    def update(self, violation: float, location: int | None, label: str) -> None:
        if violation > self.worst:
            self.worst = violation
            self.location = location
            self.label = label

    def scan(self, violations, label: str) -> None:
        for i, v in enumerate(violations):
            self.update(v, i, label)

    def report(self, name: str, tol: float, extra: str = "") -> VerificationReport:
        worst = 0.0 if self.worst == -math.inf else self.worst
        passed = worst <= tol
        details = f"worst from {self.label or 'none'}; tol={tol:g}"
        if extra:
            details += "; " + extra
        return VerificationReport(name, passed, worst, self.location, details)


@dataclass(frozen=True)
class TimeChange:
    """Strictly increasing continuous reparametrization of [0, T] onto itself.

    Stored as knot values on a grid, linear in between.
    """

    grid: TimeGrid
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) != self.grid.n:
            raise InputError("one value per grid instant required")
        if values[0] != 0.0:
            raise InputError("a time change must fix the origin")
        if values[-1] != self.grid.horizon:
            raise InputError("a time change must fix the horizon")
        for a, b in zip(values, values[1:]):
            if not a < b:
                raise InputError("time change values must be strictly increasing")

    def max_displacement(self) -> float:
        """sup_t |lambda(t) - t|; attained at knots for the linear interpolant."""
        return max(abs(v - t) for v, t in zip(self.values, self.grid.times))


# ---------------------------------------------------------------------------
# J1 distance oracle (small grids)


def j1_distance(f: CadlagPath, g: CadlagPath, max_points: int = 16) -> float:
    """Exact J1 distance between two step paths on one grid.

    Bottleneck dynamic program over monotone traversals of the segment
    cells: staying in cell (i, j) costs max(value mismatch, interval gap),
    crossing a corner diagonally (matched jumps) costs the time mismatch of
    the matched instants.  Exponentially many time changes collapse to this
    cubic-size program, so it is restricted to small grids.
    """
    if f.grid != g.grid:
        raise InputError("J1 oracle needs both paths on one grid")
    n = f.grid.n
    if n > max_points:
        raise InputError(f"J1 oracle restricted to n <= {max_points}")
    F = f.values
    G = g.values
    t = f.grid.times
    end_cost = abs(F[-1] - G[-1])
    if n == 1:
        return end_cost
    m = n - 1

    def gap(i: int, j: int) -> float:
        return max(0.0, t[j] - t[i + 1], t[i] - t[j + 1])

    dp = [[0.0] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            cell = max(abs(F[i] - G[j]), gap(i, j))
            if i == 0 and j == 0:
                best = 0.0
            else:
                best = math.inf
                if i > 0:
                    best = min(best, dp[i - 1][j])
                if j > 0:
                    best = min(best, dp[i][j - 1])
                if i > 0 and j > 0:
                    best = min(best, max(dp[i - 1][j - 1], abs(t[i] - t[j])))
            dp[i][j] = max(cell, best)
    return max(dp[m - 1][m - 1], end_cost)


# ---------------------------------------------------------------------------
# Definition conformance and non-anticipation


def check_definition(
    sol: SkorokhodSolution, pair: BoundaryPair, tol: float = TOL_CHECK
) -> VerificationReport:
    """Definition conformance: identity, constraints, split structure,
    flat-off-contact, and the sign rule for an initial regulator jump."""
    tr = _Tracker()
    times = sol.grid.times
    sv, kv, xv = sol.S.values, sol.K.values, sol.X.values
    krv, klv = sol.Kr.values, sol.Kl.values

    tr.scan((abs(x - (s + k)) for s, k, x in zip(sv, kv, xv)), "X = S + K identity")
    tr.scan(
        (pair.ceiling.value(t, x) for t, x in zip(times, xv)), "ceiling constraint"
    )
    tr.scan(
        (-pair.floor.value(t, x) for t, x in zip(times, xv)), "floor constraint"
    )

    prev_r, prev_l = 0.0, 0.0
    for i, (r, l) in enumerate(zip(krv, klv)):
        dr, dl = r - prev_r, l - prev_l
        tr.update(-dr, i, "push-up part monotone")
        tr.update(-dl, i, "pull-down part monotone")
        if dr > 0.0 and dl > 0.0:
            tr.update(min(dr, dl), i, "split increments not mutually exclusive")
        prev_r, prev_l = r, l
    tr.scan(
        (abs(k - (r - l)) for k, r, l in zip(kv, krv, klv)),
        "K = Kr - Kl decomposition",
    )

    sup = support_check(sol, pair, tol)
    for v in sup.violations:
        tr.update(abs(v.constraint_value), v.index, f"flat-off-contact ({v.side})")

    if kv[0] > tol:
        tr.update(abs(pair.floor.value(times[0], xv[0])), 0, "initial jump sign rule")
    elif kv[0] < -tol:
        tr.update(abs(pair.ceiling.value(times[0], xv[0])), 0, "initial jump sign rule")

    return tr.report("definition", tol)


def check_shift(
    sol: SkorokhodSolution, pair: BoundaryPair, d: float, tol: float = 0.0
) -> VerificationReport:
    """Re-solve from d with the state folded into the driver; the tails of X
    and K must reappear (bitwise at tol=0 on exactly-representable data)."""
    grid = sol.grid
    j = grid.index_of(d)
    pair_d = BoundaryPair(
        pair.ceiling.shifted(d, grid), pair.floor.shifted(d, grid)
    )
    driver = add_scalar(sol.S.shift_centered(d), sol.X.values[j])
    re = solve(driver, pair_d)
    want_x = sol.X.shift_plain(d)
    want_k = sol.K.shift_centered(d)
    tr = _Tracker()
    if re.grid != want_x.grid:
        tr.update(math.inf, None, "shifted grid mismatch")
    else:
        tr.scan(
            (abs(a - b) for a, b in zip(re.X.values, want_x.values)),
            "tail of X under re-solve",
        )
        tr.scan(
            (abs(a - b) for a, b in zip(re.K.values, want_k.values)),
            "tail of K under re-solve",
        )
    return tr.report("shift", tol, extra=f"d index {j}")


# ---------------------------------------------------------------------------
# Comparison suite


def _validate_staircase(nu: CadlagPath, require_zero_origin: bool) -> None:
    if nu.values[0] < 0.0:
        raise InputError("nu must be nonnegative")
    if require_zero_origin and nu.values[0] != 0.0:
        raise InputError("nu must vanish at the origin for the split comparison")
    for a, b in zip(nu.values, nu.values[1:]):
        if b < a:
            raise InputError("nu must be nondecreasing")


def _validate_driver_order(s1: CadlagPath, s2: CadlagPath, nu: CadlagPath) -> None:
    if s1.values[0] != 0.0 or s2.values[0] != 0.0:
        raise InputError("comparison drivers must start at 0")
    for i, (a, b, v) in enumerate(zip(s1.values, s2.values, nu.values)):
        if not (b <= a <= b + v):
            raise InputError(f"need S2 <= S1 <= S2 + nu; violated at index {i}")


def _comparison_grid(*paths_and_offsets) -> TimeGrid:
    return union_grid(*(p.grid for p in paths_and_offsets))


def _comparison_asserts(
    tr: _Tracker,
    k1,
    k2,
    x1,
    x2,
    nu,
    c01: float,
    c02: float,
) -> None:
    up21 = max(c02 - c01, 0.0)
    up12 = max(c01 - c02, 0.0)
    for i in range(len(k1)):
        tr.update(k1[i] - up21 - k2[i], i, "lower regulator comparison")
        tr.update(k2[i] - (k1[i] + nu[i] + up12), i, "upper regulator comparison")
        tr.update(x2[i] - nu[i] - up21 - x1[i], i, "lower solution comparison")
        tr.update(x1[i] - (x2[i] + nu[i] + up12), i, "upper solution comparison")


def check_comparison_one_sided(
    S1: CadlagPath,
    S2: CadlagPath,
    c01: float,
    c02: float,
    nu: CadlagPath,
    floor: BoundaryFunction,
    tol: float = TOL_CHECK,
    k1_override: CadlagPath | None = None,
) -> VerificationReport:
    """Ordered drivers give ordered one-sided regulators and solutions,
    with additive corrections nu and (start gap)^+."""
    grid = _comparison_grid(S1, S2, nu, floor.offset)
    s1, s2, v = S1.on(grid), S2.on(grid), nu.on(grid)
    _validate_staircase(v, require_zero_origin=False)
    _validate_driver_order(s1, s2, v)
    x1, k1 = solve_one_sided(add_scalar(s1, c01), floor)
    x2, k2 = solve_one_sided(add_scalar(s2, c02), floor)
    if k1_override is not None:
        k1 = k1_override.on(grid)
        x1 = CadlagPath(grid, tuple(a + c01 + b for a, b in zip(s1.values, k1.values)))
    tr = _Tracker()
    _comparison_asserts(
        tr, k1.values, k2.values, x1.values, x2.values, v.values, c01, c02
    )
    return tr.report("comparison_one_sided", tol)


def check_comparison_net(
    S1: CadlagPath,
    S2: CadlagPath,
    c01: float,
    c02: float,
    nu: CadlagPath,
    pair: BoundaryPair,
    tol: float = TOL_CHECK,
    k1_override: CadlagPath | None = None,
) -> VerificationReport:
    """Same sandwich for the net regulator of the two-sided problem."""
    grid = _comparison_grid(S1, S2, nu, pair.ceiling.offset, pair.floor.offset)
    s1, s2, v = S1.on(grid), S2.on(grid), nu.on(grid)
    _validate_staircase(v, require_zero_origin=False)
    _validate_driver_order(s1, s2, v)
    sol1 = solve(add_scalar(s1, c01), pair)
    sol2 = solve(add_scalar(s2, c02), pair)
    k1, x1 = sol1.K, sol1.X
    if k1_override is not None:
        k1 = k1_override.on(grid)
        x1 = CadlagPath(grid, tuple(a + c01 + b for a, b in zip(s1.values, k1.values)))
    tr = _Tracker()
    _comparison_asserts(
        tr, k1.values, k2=sol2.K.values, x1=x1.values, x2=sol2.X.values,
        nu=v.values, c01=c01, c02=c02,
    )
    return tr.report("comparison_net", tol)


def check_comparison_split(
    S2: CadlagPath,
    c01: float,
    c02: float,
    nu: CadlagPath,
    pair: BoundaryPair,
    tol: float = TOL_CHECK,
    k1_override: CadlagPath | None = None,
) -> VerificationReport:
    """Componentwise comparison under the exact hypothesis S1 = S2 + nu."""
    grid = _comparison_grid(S2, nu, pair.ceiling.offset, pair.floor.offset)
    s2, v = S2.on(grid), nu.on(grid)
    if s2.values[0] != 0.0:
        raise InputError("comparison drivers must start at 0")
    _validate_staircase(v, require_zero_origin=True)
    s1 = CadlagPath(grid, tuple(a + b for a, b in zip(s2.values, v.values)))
    sol1 = solve(add_scalar(s1, c01), pair)
    sol2 = solve(add_scalar(s2, c02), pair)
    if k1_override is not None:
        kr1, kl1, _ = split_variation(k1_override.on(grid))
    else:
        kr1, kl1 = sol1.Kr, sol1.Kl
    kr2, kl2 = sol2.Kr, sol2.Kl
    up21 = max(c02 - c01, 0.0)
    up12 = max(c01 - c02, 0.0)
    tr = _Tracker()
    for i in range(grid.n):
        tr.update(kr1.values[i] - up21 - kr2.values[i], i, "push-up lower comparison")
        tr.update(
            kr2.values[i] - (kr1.values[i] + v.values[i] + up12),
            i,
            "push-up upper comparison",
        )
        tr.update(kl2.values[i] - up21 - kl1.values[i], i, "pull-down lower comparison")
        tr.update(
            kl1.values[i] - (kl2.values[i] + v.values[i] + up12),
            i,
            "pull-down upper comparison",
        )
    return tr.report("comparison_split", tol)


def check_monotone_boundaries(
    S: CadlagPath,
    pair1: BoundaryPair,
    pair2: BoundaryPair,
    tol: float = TOL_CHECK,
    k1_override: CadlagPath | None = None,
) -> VerificationReport:
    """Tighter constraints (larger ceiling g, smaller floor g) push and pull
    more: both regulator parts of pair2 dominate pair1's."""
    c1, f1 = pair1.ceiling, pair1.floor
    c2, f2 = pair2.ceiling, pair2.floor
    if (c1.family, c1.a, c1.eps, c1.omega) != (c2.family, c2.a, c2.eps, c2.omega):
        raise InputError("pairs must share family and shape parameters")
    grid = _comparison_grid(S, c1.offset, f1.offset, c2.offset, f2.offset)
    for t in grid.times:
        if c1.offset.at(t) < c2.offset.at(t):
            raise InputError("hypothesis violated: need ceiling1 <= ceiling2 (offsets ordered)")
        if f1.offset.at(t) > f2.offset.at(t):
            raise InputError("hypothesis violated: need floor1 >= floor2 (offsets ordered)")
    sol1 = solve(S.on(grid), pair1)
    sol2 = solve(S.on(grid), pair2)
    if k1_override is not None:
        kr1, kl1, _ = split_variation(k1_override.on(grid))
    else:
        kr1, kl1 = sol1.Kr, sol1.Kl
    tr = _Tracker()
    tr.scan(
        (a - b for a, b in zip(kr1.values, sol2.Kr.values)),
        "push-up monotone in boundaries",
    )
    tr.scan(
        (a - b for a, b in zip(kl1.values, sol2.Kl.values)),
        "pull-down monotone in boundaries",
    )
    return tr.report("monotone_boundaries", tol)


# ---------------------------------------------------------------------------
# Continuity suite


def _offset_gap_sup(a: BoundaryFunction, b: BoundaryFunction, grid: TimeGrid) -> float:
    scale = a.a if a.family == "scaled" else 1.0
    return scale * max(
        abs(a.offset.at(t) - b.offset.at(t)) for t in grid.times
    )


def check_uniform_continuity(
    S1: CadlagPath,
    S2: CadlagPath,
    pair1: BoundaryPair,
    pair2: BoundaryPair,
    tol: float = TOL_CHECK,
    k1_override: CadlagPath | None = None,
) -> VerificationReport:
    """Uniform bounds: envelope and regulator moves are controlled by
    (C/c) sup|dS| plus the analytic constraint gaps over the horizon."""
    c1 = pair1.ceiling
    c2 = pair2.ceiling
    if (c1.family, c1.a, c1.eps, c1.omega) != (c2.family, c2.a, c2.eps, c2.omega):
        raise InputError("pairs must share family and shape parameters")
    grid = _comparison_grid(
        S1, S2, pair1.ceiling.offset, pair1.floor.offset,
        pair2.ceiling.offset, pair2.floor.offset,
    )
    sol1 = solve(S1.on(grid), pair1)
    sol2 = solve(S2.on(grid), pair2)
    k1 = k1_override.on(grid) if k1_override is not None else sol1.K
    lbar = _offset_gap_sup(pair1.ceiling, pair2.ceiling, grid)
    rbar = _offset_gap_sup(pair1.floor, pair2.floor, grid)
    sup_s = max(abs(a - b) for a, b in zip(sol1.S.values, sol2.S.values))
    ratio = pair1.C / pair1.c
    tr = _Tracker()

    def sup_diff(p: CadlagPath, q: CadlagPath) -> tuple[float, int]:
        diffs = [abs(a - b) for a, b in zip(p.values, q.values)]
        i = max(range(len(diffs)), key=diffs.__getitem__)
        return diffs[i], i

    d, i = sup_diff(sol1.Phi, sol2.Phi)
    tr.update(d - (ratio * sup_s + lbar / pair1.c), i, "upper envelope bound")
    d, i = sup_diff(sol1.Psi, sol2.Psi)
    tr.update(d - (ratio * sup_s + rbar / pair1.c), i, "lower envelope bound")
    d, i = sup_diff(k1, sol2.K)
    tr.update(d - (ratio * sup_s + max(lbar, rbar) / pair1.c), i, "regulator bound")
    return tr.report(
        "uniform_continuity",
        tol,
        extra=f"sup|dS|={sup_s:g}, gaps=({lbar:g},{rbar:g})",
    )


def _sweep_windows(times, lam_values):
    """Per grid cell, the inclusive index window the time change sweeps."""
    n = len(times)
    wins = []
    for i in range(n - 1):
        jlo = bisect.bisect_right(times, lam_values[i]) - 1
        jhi = bisect.bisect_left(times, lam_values[i + 1]) - 1
        wins.append((i, jlo, max(jlo, jhi)))
    wins.append((n - 1, n - 1, n - 1))  # the horizon is fixed by the time change
    return wins


def check_j1_bound(
    S: CadlagPath,
    lam: TimeChange,
    pair: BoundaryPair,
    tol: float = TOL_CHECK,
    s_prime: CadlagPath | None = None,
    k_prime_override: CadlagPath | None = None,
) -> VerificationReport:
    """Per-time-change form of the J1 estimate.

    With K' solved from S' (default: S sampled along the time change) under
    the original constraints, the sweep supremum of |K'_t - K_{lambda(t)}|
    is bounded by the analytic constraint oscillation along the time change
    plus (C/c) times the sweep supremum of |S'_t - S_{lambda(t)}|.  On small
    grids the exact J1 distance oracle must sit below the per-change value.
    """
    grid = S.grid
    if lam.grid != grid:
        raise InputError("time change must live on the driver grid")
    full = union_grid(grid, pair.ceiling.offset.grid, pair.floor.offset.grid)
    if full != grid:
        raise InputError(
            "merge the driver grid with the constraint offsets before "
            "building the time change"
        )
    times = grid.times
    b_up = pair.ceiling.offset.on(grid).values
    b_lo = pair.floor.offset.on(grid).values
    scale = pair.ceiling.a if pair.ceiling.family == "scaled" else 1.0

    sol = solve(S, pair)
    if s_prime is None:
        s_prime = CadlagPath(
            grid, tuple(S.values[grid.locate(v)] for v in lam.values)
        )
    elif s_prime.grid != grid:
        raise InputError("S' must live on the driver grid")
    solp = solve(s_prime, pair)
    kp = k_prime_override.on(grid) if k_prime_override is not None else solp.K

    wins = _sweep_windows(times, lam.values)
    lhs = -math.inf
    loc = None
    sup_s = 0.0
    lhat = 0.0
    rhat = 0.0
    for i, jlo, jhi in wins:
        for j in range(jlo, jhi + 1):
            v = abs(kp.values[i] - sol.K.values[j])
            if v > lhs:
                lhs, loc = v, i
            sup_s = max(sup_s, abs(s_prime.values[i] - S.values[j]))
            lhat = max(lhat, scale * abs(b_up[i] - b_up[j]))
            rhat = max(rhat, scale * abs(b_lo[i] - b_lo[j]))
    rhs = max(lhat, rhat) / pair.c + (pair.C / pair.c) * sup_s
    tr = _Tracker()
    tr.update(lhs - rhs, loc, "per-change J1 inequality")
    extra = f"lhs={lhs:g}, rhs={rhs:g}"
    if grid.n <= 12:
        d = j1_distance(kp, sol.K)
        per_change = max(lam.max_displacement(), lhs)
        tr.update(d - per_change, None, "J1 oracle below per-change value")
        extra += f", dp={d:g}, per_change={per_change:g}"
    return tr.report("j1_bound", tol, extra=extra)


# ---------------------------------------------------------------------------
# Oscillation domination


def check_oscillation_domination(
    sol: SkorokhodSolution, tol: float = TOL_CHECK, max_full_n: int = 512
) -> VerificationReport:
    """osc K <= osc Phi + osc Psi over every window (all of them up to
    max_full_n points, a deterministic stride of window starts above)."""
    k = np.asarray(sol.K.values)
    ph = np.asarray(sol.Phi.values)
    ps = np.asarray(sol.Psi.values)
    n = k.size
    if n <= max_full_n:
        starts = range(n)
    else:
        stride = -(-n // max_full_n)
        starts = range(0, n, stride)
    tr = _Tracker()
    for i in starts:
        osc_k = np.maximum.accumulate(k[i:]) - np.minimum.accumulate(k[i:])
        osc_p = np.maximum.accumulate(ph[i:]) - np.minimum.accumulate(ph[i:])
        osc_q = np.maximum.accumulate(ps[i:]) - np.minimum.accumulate(ps[i:])
        v = osc_k - osc_p - osc_q
        j = int(np.argmax(v))
        tr.update(float(v[j]), i + j, f"window start {i}")
    return tr.report("oscillation_domination", tol)
