"""Seeded driver and staircase generators for the test campaigns.

Randomness comes from xoshiro256++ (Blackman/Vigna shift-register
generator, published constants) seeded through splitmix64, implemented
here so campaigns are reproducible from a 64-bit seed alone, independent
of interpreter or library versions.  Gaussian variates use Box-Muller.

Values of the stochastic kinds are quantized to multiples of 2^-26.  That
keeps every sum and difference of generated values exactly representable
in binary64 (magnitudes here stay far below 2^26), which the exactness
campaigns (bitwise oracle agreement, non-anticipation) lean on.
Deterministic kinds (ramp, sawtooth, step) evaluate their closed form
directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import InputError
from .paths import CadlagPath, TimeGrid

__all__ = ["GenSpec", "Xoshiro256PP", "generate", "quantize"]

_MASK = (1 << 64) - 1

KINDS = ("brownian", "jump", "ramp", "sawtooth", "step", "staircase_nu")


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31), state


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256PP:
    """xoshiro256++ with splitmix64 state expansion."""

    def __init__(self, seed: int) -> None:
        state = seed & _MASK
        s = []
        for _ in range(4):
            word, state = _splitmix64(state)
            s.append(word)
        self._s = s

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[0] + s[3]) & _MASK, 23) + s[0]) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0**-53)

    def gaussian(self) -> float:
        """Standard normal via Box-Muller (cosine branch)."""
        u1 = 1.0 - self.uniform()  # (0, 1]: keeps the log finite
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def choice(self, seq):
        return seq[self.next_u64() % len(seq)]


def quantize(x: float) -> float:
    """Snap to the 2^-26 lattice (exactly representable, sums stay exact)."""
    return math.ldexp(float(round(math.ldexp(x, 26))), -26)


@dataclass(frozen=True)
class GenSpec:
    """Recipe for one generated path; equal specs give bitwise equal paths."""

    kind: str
    seed: int
    n: int
    horizon: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InputError(f"unknown path kind {self.kind!r}")
        if self.n < 1:
            raise InputError("need n >= 1")
        if not self.horizon > 0:
            raise InputError("need horizon > 0")
        for key, val in self.params.items():
            if key in ("volatility", "intensity") and val < 0:
                raise InputError(f"{key} must be nonnegative")

    def to_jsonable(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "n": self.n,
            "horizon": self.horizon,
            "params": dict(self.params),
        }

    @staticmethod
    def from_jsonable(obj: dict) -> "GenSpec":
        try:
            return GenSpec(
                kind=obj["kind"],
                seed=int(obj["seed"]),
                n=int(obj["n"]),
                horizon=float(obj.get("horizon", 1.0)),
                params={k: float(v) for k, v in obj.get("params", {}).items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad GenSpec JSON: {exc}") from exc

    @staticmethod
    def loads(text: str) -> "GenSpec":
        try:
            return GenSpec.from_jsonable(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InputError(f"GenSpec is not valid JSON: {exc}") from exc


def _uniform_grid(n: int, horizon: float) -> TimeGrid:
    if n == 1:
        return TimeGrid((0.0,))
    step = horizon / (n - 1)
    times = tuple(i * step for i in range(n - 1)) + (horizon,)
    return TimeGrid(times)


def generate(spec: GenSpec) -> CadlagPath:
    grid = _uniform_grid(spec.n, spec.horizon)
    rng = Xoshiro256PP(spec.seed)
    p = spec.params
    kind = spec.kind

    if kind == "brownian":
        vol = p.get("volatility", 1.0)
        vals = [0.0]
        level = 0.0
        for i in range(1, spec.n):
            dt = grid.times[i] - grid.times[i - 1]
            level += vol * math.sqrt(dt) * rng.gaussian()
            vals.append(quantize(level))
        return CadlagPath(grid, tuple(vals))

    if kind == "jump":
        intensity = p.get("intensity", 4.0)
        scale = p.get("scale", 0.5)
        events: list[tuple[float, float]] = []
        t = 0.0
        while True:
            u = rng.uniform()
            t += -math.log(1.0 - u) / intensity if intensity > 0 else math.inf
            if t >= spec.horizon or not math.isfinite(t):
                break
            events.append((t, scale * rng.gaussian()))
        vals = []
        level = 0.0
        ei = 0
        for gt in grid.times:
            while ei < len(events) and events[ei][0] <= gt:
                level += events[ei][1]
                ei += 1
            vals.append(quantize(level))
        return CadlagPath(grid, tuple(vals))

    if kind == "ramp":
        amp = p.get("amplitude", 1.0)
        return CadlagPath(grid, tuple(amp * (t / spec.horizon) for t in grid.times))

    if kind == "sawtooth":
        amp = p.get("amplitude", 1.0)
        cycles = p.get("cycles", 2.0)

        def tri(u: float) -> float:
            u -= math.floor(u)
            if u < 0.25:
                return 4.0 * u
            if u < 0.75:
                return 2.0 - 4.0 * u
            return 4.0 * u - 4.0

        return CadlagPath(
            grid, tuple(amp * tri(cycles * t / spec.horizon) for t in grid.times)
        )

    if kind == "step":
        amp = p.get("amplitude", 1.0)
        at = p.get("at", 0.5) * spec.horizon
        return CadlagPath(grid, tuple(amp if t >= at else 0.0 for t in grid.times))

    # staircase_nu: nondecreasing, nonnegative, zero at the origin; feeds the
    # comparison hypotheses directly.
    scale = p.get("scale", 0.5)
    vals = [0.0]
    level = 0.0
    for _ in range(1, spec.n):
        if rng.uniform() < 0.5:
            level += scale * rng.uniform()
        vals.append(quantize(level))
    return CadlagPath(grid, tuple(vals))
