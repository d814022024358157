"""Solver core: envelope paths, the explicit regulator, and cross-checks.

Given a driver S and a constraint pair, the envelopes are the pointwise
roots Phi_t of ceiling(t, S_t + Phi_t) = 0 and Psi_t of
floor(t, S_t + Psi_t) = 0.  The regulator K keeps X = S + K inside the
constraints and admits a closed double max/min expression over the
envelopes.  ``reflect_direct`` evaluates that expression literally in
O(n^2) and serves as the oracle; ``reflect_stream`` is the O(n) clamp
recursion used in production, whose bitwise agreement with the oracle is
the first acceptance gate.

All outputs are lattice selections of envelope values and 0, so the
sandwich Psi <= K <= Phi holds exactly in floating point and identical
inputs give bitwise identical outputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .boundaries import BoundaryFunction, BoundaryPair
from .decomposition import split_variation
from .errors import InputError, NumericError
from .paths import CadlagPath, TimeGrid, union_grid

__all__ = [
    "TOL_CHECK",
    "TOL_SEP",
    "TOL_FIX",
    "MAX_SWEEPS",
    "SkorokhodSolution",
    "envelopes",
    "reflect_direct",
    "reflect_stream",
    "solve",
    "solve_one_sided",
    "coupled_fixpoint",
    "write_solution_csv",
    "read_solution_csv",
]

# One order above root tolerance, absorbing accumulation across a grid.
TOL_CHECK = 1e-9
TOL_SEP = 1e-9
TOL_FIX = 1e-10
MAX_SWEEPS = 100


@dataclass(frozen=True)
class SkorokhodSolution:
    """Everything the theorems quantify over, on one shared grid.

    X = S + K pointwise; Kr/Kl are the nondecreasing push-up/pull-down
    parts with K = Kr - Kl; TV is the running total variation Kr + Kl.
    """

    S: CadlagPath
    Phi: CadlagPath
    Psi: CadlagPath
    K: CadlagPath
    X: CadlagPath
    Kr: CadlagPath
    Kl: CadlagPath
    TV: CadlagPath

    @property
    def grid(self) -> TimeGrid:
        return self.S.grid


def envelopes(
    S: CadlagPath, pair: BoundaryPair, tol_root: float | None = None
) -> tuple[CadlagPath, CadlagPath]:
    """Envelope paths on the merged grid of driver and offsets.

    Phi_t solves ceiling(t, S_t + .) = 0, Psi_t solves floor(t, S_t + .) = 0.
    The returned paths satisfy min(Phi - Psi) >= alpha/C - TOL_SEP; a worse
    separation means the root solver failed and raises.
    """
    grid = union_grid(S.grid, pair.ceiling.offset.grid, pair.floor.offset.grid)
    s = S.on(grid)
    phi = tuple(pair.ceiling.invert(t, v, tol_root) for t, v in zip(grid.times, s.values))
    psi = tuple(pair.floor.invert(t, v, tol_root) for t, v in zip(grid.times, s.values))
    floor_sep = pair.alpha / pair.C - TOL_SEP
    min_sep = min(p - q for p, q in zip(phi, psi))
    if min_sep < floor_sep or min_sep <= 0.0:
        raise NumericError(
            f"envelope separation {min_sep:g} fell below alpha/C - tol = {floor_sep:g}"
        )
    return CadlagPath(grid, phi), CadlagPath(grid, psi)


def _check_envelope_pair(phi: CadlagPath, psi: CadlagPath) -> None:
    if phi.grid != psi.grid:
        raise InputError("envelopes must share one grid")
    if min(p - q for p, q in zip(phi.values, psi.values)) <= 0.0:
        raise InputError("envelope order violated: need Phi > Psi everywhere")


def _clean_zero(v: float) -> float:
    # Collapse -0.0 so all reflectors emit literally identical bits.
    return v if v != 0.0 else 0.0


def reflect_direct(phi: CadlagPath, psi: CadlagPath) -> CadlagPath:
    """Literal O(n^2) evaluation of the closed regulator expression.

    K_t = -max( (-Phi_0)^+ /\\ inf_{r<=t}(-Psi_r),
                sup_{s<=t} [ (-Phi_s) /\\ inf_{r in [s,t]}(-Psi_r) ] )

    Window infima are exact on piecewise-constant paths, so each K_t is an
    element of {0} | {Phi_s} | {Psi_s}.
    """
    _check_envelope_pair(phi, psi)
    ph = phi.values
    ps = psi.values
    n = len(ph)
    out = []
    for i in range(n):
        run = -ps[i]  # inf of (-Psi) over [s, i], shrinking s
        best = min(-ph[i], run)
        for s in range(i - 1, -1, -1):
            if -ps[s] < run:
                run = -ps[s]
            cand = min(-ph[s], run)
            if cand > best:
                best = cand
        head = min(max(-ph[0], 0.0), run)
        out.append(_clean_zero(-max(head, best)))
    return CadlagPath(phi.grid, tuple(out))


def reflect_stream(phi: CadlagPath, psi: CadlagPath) -> CadlagPath:
    """O(n) clamp recursion: K_i = min(Phi_i, max(K_{i-1}, Psi_i)).

    Starts from K_0 = max(min(Phi_0, 0), Psi_0), the median of
    (Psi_0, 0, Phi_0).  Output matches reflect_direct bitwise; the
    equivalence is discharged by the differential campaign, not assumed.
    """
    _check_envelope_pair(phi, psi)
    ph = phi.values
    ps = psi.values
    k = max(min(ph[0], 0.0), ps[0])
    out = [_clean_zero(k)]
    for i in range(1, len(ph)):
        k = min(ph[i], max(k, ps[i]))
        out.append(_clean_zero(k))
    return CadlagPath(phi.grid, tuple(out))


def solve(
    S: CadlagPath, pair: BoundaryPair, tol_root: float | None = None
) -> SkorokhodSolution:
    """Full solve on the merged grid: envelopes, regulator, variation split."""
    if pair.alpha <= TOL_SEP:
        raise InputError(
            f"pair separation alpha = {pair.alpha:g} <= {TOL_SEP:g}; "
            "refusing (bounded variation of K not certifiable)"
        )
    phi, psi = envelopes(S, pair, tol_root)
    s = S.on(phi.grid)
    k = reflect_stream(phi, psi)
    x = CadlagPath(phi.grid, tuple(a + b for a, b in zip(s.values, k.values)))
    kr, kl, tv = split_variation(k)
    return SkorokhodSolution(S=s, Phi=phi, Psi=psi, K=k, X=x, Kr=kr, Kl=kl, TV=tv)


def solve_one_sided(
    S: CadlagPath, floor: BoundaryFunction, tol_root: float | None = None
) -> tuple[CadlagPath, CadlagPath]:
    """Single lower constraint floor(t, X_t) >= 0: K is the running max of Psi^+."""
    grid = union_grid(S.grid, floor.offset.grid)
    s = S.on(grid)
    psi = [floor.invert(t, v, tol_root) for t, v in zip(grid.times, s.values)]
    k = []
    run = 0.0
    for p in psi:
        if p > run:
            run = p
        k.append(run)
    K = CadlagPath(grid, tuple(k))
    X = CadlagPath(grid, tuple(a + b for a, b in zip(s.values, k)))
    return X, K


def coupled_fixpoint(
    S: CadlagPath,
    pair: BoundaryPair,
    sol: SkorokhodSolution,
    tol_fix: float = TOL_FIX,
    max_sweeps: int = MAX_SWEEPS,
    tol_root: float | None = None,
) -> tuple[CadlagPath, CadlagPath]:
    """Recover (Kr, Kl) as the fixed point of the coupled running-max system.

    Alternating sweeps from (0, 0):

        Kr = running max of (psi_r)^+   with floor(t, S_t - Kl_t + psi_r) = 0
        Kl = running max of (phi_l)^+   with ceiling(t, S_t + Kr_t - phi_l) = 0

    Iterates increase monotonically to the admissible decomposition; the
    result must match sol.Kr / sol.Kl within tol_fix or a NumericError with
    the residual is raised.
    """
    grid = sol.grid
    s = S.on(grid)
    times = grid.times
    n = grid.n
    kr = [0.0] * n
    kl = [0.0] * n
    delta = float("inf")
    for _ in range(max_sweeps):
        new_kr = []
        run = 0.0
        for i in range(n):
            psi_r = pair.floor.invert(times[i], s.values[i] - kl[i], tol_root)
            if psi_r > run:
                run = psi_r
            new_kr.append(run)
        new_kl = []
        run = 0.0
        for i in range(n):
            phi_l = -pair.ceiling.invert(times[i], s.values[i] + new_kr[i], tol_root)
            if phi_l > run:
                run = phi_l
            new_kl.append(run)
        delta = max(
            max(abs(a - b) for a, b in zip(new_kr, kr)),
            max(abs(a - b) for a, b in zip(new_kl, kl)),
        )
        kr, kl = new_kr, new_kl
        if delta < tol_fix:
            break
    else:
        raise NumericError(
            f"coupled fixed point did not converge in {max_sweeps} sweeps "
            f"(last sweep moved {delta:g})"
        )
    residual = max(
        max(abs(a - b) for a, b in zip(kr, sol.Kr.values)),
        max(abs(a - b) for a, b in zip(kl, sol.Kl.values)),
    )
    if residual > tol_fix:
        raise NumericError(
            f"coupled fixed point disagrees with the variation split by {residual:g}"
        )
    return CadlagPath(grid, tuple(kr)), CadlagPath(grid, tuple(kl))


_SOLUTION_COLUMNS = ("t", "S", "Phi", "Psi", "K", "X", "Kr", "Kl", "TV")


def write_solution_csv(sol: SkorokhodSolution, dest) -> None:
    """One row per grid instant, 17 significant digits (float round-trip)."""

    def emit(fh) -> None:
        w = csv.writer(fh)
        w.writerow(_SOLUTION_COLUMNS)
        cols = (sol.S, sol.Phi, sol.Psi, sol.K, sol.X, sol.Kr, sol.Kl, sol.TV)
        for i, t in enumerate(sol.grid.times):
            w.writerow([f"{t:.17g}"] + [f"{p.values[i]:.17g}" for p in cols])

    if hasattr(dest, "write"):
        emit(dest)
    else:
        with open(dest, "w", newline="") as fh:
            emit(fh)


def read_solution_csv(source) -> SkorokhodSolution:
    def parse(rows) -> SkorokhodSolution:
        it = iter(rows)
        try:
            header = next(it)
        except StopIteration:
            raise InputError("empty solution CSV") from None
        if tuple(h.strip() for h in header) != _SOLUTION_COLUMNS:
            raise InputError(
                "solution CSV header must be exactly " + ",".join(_SOLUTION_COLUMNS)
            )
        data: list[list[float]] = [[] for _ in _SOLUTION_COLUMNS]
        for row in it:
            if not row:
                continue
            if len(row) != len(_SOLUTION_COLUMNS):
                raise InputError(f"malformed solution CSV row: {row!r}")
            for col, cell in zip(data, row):
                col.append(float(cell))
        grid = TimeGrid(tuple(data[0]))
        paths = [CadlagPath(grid, tuple(col)) for col in data[1:]]
        return SkorokhodSolution(*paths)

    if hasattr(source, "read"):
        return parse(csv.reader(source))
    with open(source, newline="") as fh:
        return parse(csv.reader(fh))
