"""Variation split of the regulator and its piecewise-monotone structure.

On a grid the regulator alternates between two regimes: a running minimum
of the upper envelope (pull-down active) and a running maximum of the lower
envelope (push-up active).  The switch indices generalize first-hitting
times; assembling the segments must reproduce the closed-form regulator
bitwise, which the campaigns assert.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import ConsistencyError, InputError
from .paths import CadlagPath

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .boundaries import BoundaryPair
    from .reflector import SkorokhodSolution

__all__ = [
    "split_variation",
    "OscillationSchedule",
    "oscillation_times",
    "piecewise_representation",
    "SupportViolation",
    "SupportReport",
    "support_check",
]


def split_variation(K: CadlagPath) -> tuple[CadlagPath, CadlagPath, CadlagPath]:
    """Split K into nondecreasing push-up / pull-down parts plus running TV.

    Grid increments split by sign (the pre-origin value of K is 0, so the
    origin increment is K_0 itself): dKr = (dK)^+, dKl = (dK)^-.  Exactly
    one of the two moves per instant.
    """
    kr: list[float] = []
    kl: list[float] = []
    tv: list[float] = []
    up = 0.0
    down = 0.0
    prev = 0.0
    for v in K.values:
        d = v - prev
        if d > 0.0:
            up += d
        elif d < 0.0:
            down -= d
        kr.append(up)
        kl.append(down)
        tv.append(up + down)
        prev = v
    g = K.grid
    return CadlagPath(g, tuple(kr)), CadlagPath(g, tuple(kl)), CadlagPath(g, tuple(tv))


@dataclass(frozen=True)
class OscillationSchedule:
    """Alternating regime-switch indices for one envelope pair.

    case is "never" (regulator identically 0), "upper_first" (the upper
    envelope signs first: sigma* < tau*) or "lower_first" (tau* < sigma*).
    ``taus`` mark switches into the running-max-of-lower regime, ``sigmas``
    into the running-min-of-upper regime.  In the upper_first case taus[0]
    is the conventional 0 and not a boundary touch.
    """

    case: str
    sigma_star: int | None
    tau_star: int | None
    taus: tuple[int, ...]
    sigmas: tuple[int, ...]

    def to_jsonable(self) -> dict:
        return {
            "case": self.case,
            "sigma_star": self.sigma_star,
            "tau_star": self.tau_star,
            "taus": list(self.taus),
            "sigmas": list(self.sigmas),
        }

    @staticmethod
    def from_jsonable(obj: dict) -> "OscillationSchedule":
        try:
            return OscillationSchedule(
                case=obj["case"],
                sigma_star=obj["sigma_star"],
                tau_star=obj["tau_star"],
                taus=tuple(obj["taus"]),
                sigmas=tuple(obj["sigmas"]),
            )
        except KeyError as exc:
            raise InputError(f"schedule JSON missing key {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_jsonable())


def oscillation_times(phi: CadlagPath, psi: CadlagPath) -> OscillationSchedule:
    """First-hitting and alternating switch indices on the grid.

    The continuous-time first times are inf over t > 0; on a right-continuous
    step path a strict sign at the origin already rules the first cell, so
    index 0 qualifies exactly when Phi_0 < 0 (resp. Psi_0 > 0), the same case
    split the origin value of the regulator makes.  Later indices use the
    non-strict predicates.  Ties are impossible while Phi - Psi > 0.
    """
    if phi.grid != psi.grid:
        raise InputError("envelopes must share one grid")
    ph = phi.values
    ps = psi.values
    n = len(ph)
    if min(p - q for p, q in zip(ph, ps)) <= 0.0:
        raise InputError("envelope order violated: need Phi > Psi everywhere")

    sigma_star = 0 if ph[0] < 0.0 else next((i for i in range(1, n) if ph[i] <= 0.0), None)
    tau_star = 0 if ps[0] > 0.0 else next((i for i in range(1, n) if ps[i] >= 0.0), None)

    if sigma_star is None and tau_star is None:
        return OscillationSchedule("never", None, None, (), ())

    def next_tau(sigma: int) -> int | None:
        # first j > sigma with min Phi over [sigma, j] <= Psi_j
        run = ph[sigma]
        for j in range(sigma + 1, n):
            if ph[j] < run:
                run = ph[j]
            if run <= ps[j]:
                return j
        return None

    def next_sigma(tau: int) -> int | None:
        # first j > tau with max Psi over [tau, j] >= Phi_j
        run = ps[tau]
        for j in range(tau + 1, n):
            if ps[j] > run:
                run = ps[j]
            if run >= ph[j]:
                return j
        return None

    taus: list[int] = []
    sigmas: list[int] = []
    if sigma_star is not None and (tau_star is None or sigma_star < tau_star):
        case = "upper_first"
        taus.append(0)  # convention; not a boundary touch
        sigmas.append(sigma_star)
        cur, want = sigma_star, "tau"
    else:
        case = "lower_first"
        taus.append(tau_star)
        cur, want = tau_star, "sigma"
    while True:
        if want == "tau":
            nxt = next_tau(cur)
            if nxt is None:
                break
            taus.append(nxt)
            want = "sigma"
        else:
            nxt = next_sigma(cur)
            if nxt is None:
                break
            sigmas.append(nxt)
            want = "tau"
        cur = nxt
    return OscillationSchedule(case, sigma_star, tau_star, tuple(taus), tuple(sigmas))


def piecewise_representation(
    phi: CadlagPath, psi: CadlagPath, sched: OscillationSchedule
) -> CadlagPath:
    """Assemble the regulator segment by segment from the schedule.

    0 before the first switch; running min of the upper envelope from each
    sigma; running max of the lower envelope from each tau.  Must equal the
    closed-form regulator bitwise.
    """
    if phi.grid != psi.grid:
        raise InputError("envelopes must share one grid")
    if oscillation_times(phi, psi) != sched:
        raise ConsistencyError("schedule does not belong to this envelope pair")
    ph = phi.values
    ps = psi.values
    n = len(ph)
    out = [0.0] * n

    switches: list[tuple[int, str]] = []
    if sched.case == "never":
        return CadlagPath(phi.grid, tuple(out))
    if sched.case == "upper_first":
        switches.append((sched.sigmas[0], "phi"))
        for k in range(1, max(len(sched.taus), len(sched.sigmas))):
            if k < len(sched.taus):
                switches.append((sched.taus[k], "psi"))
            if k < len(sched.sigmas):
                switches.append((sched.sigmas[k], "phi"))
    else:
        for k in range(max(len(sched.taus), len(sched.sigmas))):
            if k < len(sched.taus):
                switches.append((sched.taus[k], "psi"))
            if k < len(sched.sigmas):
                switches.append((sched.sigmas[k], "phi"))

    for which, (start, regime) in enumerate(switches):
        end = switches[which + 1][0] if which + 1 < len(switches) else n
        if regime == "phi":
            run = ph[start]
            for i in range(start, end):
                if ph[i] < run:
                    run = ph[i]
                out[i] = run
        else:
            run = ps[start]
            for i in range(start, end):
                if ps[i] > run:
                    run = ps[i]
                out[i] = run
    return CadlagPath(phi.grid, tuple(v if v != 0.0 else 0.0 for v in out))


@dataclass(frozen=True)
class SupportViolation:
    index: int
    side: str  # "push_up" (floor should bind) or "pull_down" (ceiling should bind)
    increment: float
    constraint_value: float


@dataclass(frozen=True)
class SupportReport:
    """Flat-off-contact audit: regulator parts may only move on contact."""

    passed: bool
    violations: tuple[SupportViolation, ...]
    worst: float

    @property
    def details(self) -> str:
        if self.passed:
            return "all regulator increments sit on their contact set"
        v = self.violations[0]
        return (
            f"{len(self.violations)} off-contact increment(s); first at index "
            f"{v.index} ({v.side}): d={v.increment:g} while g={v.constraint_value:g}"
        )


def support_check(sol: "SkorokhodSolution", pair: "BoundaryPair", tol: float) -> SupportReport:
    """Every material increment of Kr needs floor(t, X_t) ~ 0, of Kl ceiling ~ 0."""
    times = sol.grid.times
    viols: list[SupportViolation] = []
    worst = 0.0
    prev_r = 0.0
    prev_l = 0.0
    for i, t in enumerate(times):
        x = sol.X.values[i]
        dr = sol.Kr.values[i] - prev_r
        dl = sol.Kl.values[i] - prev_l
        if dr > tol:
            g = pair.floor.value(t, x)
            if abs(g) > tol:
                viols.append(SupportViolation(i, "push_up", dr, g))
                worst = max(worst, abs(g))
        if dl > tol:
            g = pair.ceiling.value(t, x)
            if abs(g) > tol:
                viols.append(SupportViolation(i, "pull_down", dl, g))
                worst = max(worst, abs(g))
        prev_r = sol.Kr.values[i]
        prev_l = sol.Kl.values[i]
    return SupportReport(passed=not viols, violations=tuple(viols), worst=worst)
