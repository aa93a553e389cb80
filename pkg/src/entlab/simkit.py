"""Simulators: exact-analytic and literal-sampling rejection samplers.

The exact form computes each step's output distribution in closed form
(success mass 1-(1-p)^T as a rational), which makes identity checks
tolerance-tight.  The sampling form executes the literal resampling loop with
a seeded Mersenne Twister (`random.Random`) and exposes an attempt trace, so
the stated per-step oracle-call budget is observable.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .genkit import BlockGenerator, OnlineGenerator
from .probkit import BOT, TOL, FiniteDist, Outcome, log2_fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def _check_dist(d: dict[str, Fraction], label: str) -> dict[str, Fraction]:
    clean = {k: Fraction(v) for k, v in d.items() if Fraction(v) != 0}
    if any(v < 0 for v in clean.values()):
        raise ValueError(f"{label}: negative mass")
    if sum(clean.values(), ZERO) != 1:
        raise ValueError(f"{label}: masses must sum to 1 exactly")
    return clean


class Simulator:
    """Randomized map from an instance to a distribution over seeds, with the
    failure symbol absorbing whatever mass the simulator gives up on."""

    __slots__ = ("table",)

    def __init__(self, table: dict[str, dict[str, Fraction]]):
        self.table = {
            y: _check_dist(dist, f"simulator output for {y!r}") for y, dist in table.items()
        }

    def dist(self, y: str) -> dict[str, Fraction]:
        return self.table[y]

    def instances(self) -> tuple[str, ...]:
        return tuple(sorted(self.table))

    @classmethod
    def deterministic(cls, mapping: dict[str, str]) -> "Simulator":
        return cls({y: {r: ONE} for y, r in mapping.items()})

    def __repr__(self) -> str:
        return f"Simulator({len(self.table)} instances)"


class OnlineSimulator:
    """Step-by-step simulator for an online generator.

    step_tables[i] maps (seed prefix r_<i, target block y_i) to an exact
    distribution over {0,1}^{s_i} plus the failure symbol.  Validity is
    checked on construction: any non-failure output must actually make the
    generator reproduce y_i.  The failure symbol is absorbing; queries with a
    failed prefix return a point mass on it without consulting the tables.
    """

    __slots__ = ("generator", "num_steps", "step_tables")

    def __init__(
        self,
        generator: OnlineGenerator,
        step_tables: Sequence[dict[tuple[tuple[str, ...], str], dict[str, Fraction]]],
        num_steps: int | None = None,
    ):
        self.generator = generator
        self.num_steps = len(step_tables) if num_steps is None else int(num_steps)
        if self.num_steps != len(step_tables):
            raise ValueError("one step table per simulated block")
        if self.num_steps > generator.num_blocks:
            raise ValueError("more steps than generator blocks")
        fixed = []
        for i, table in enumerate(step_tables):
            out = {}
            for (prefix, y_i), dist in table.items():
                prefix = tuple(prefix)
                dist = _check_dist(dist, f"step {i} at {(prefix, y_i)}")
                for r_hat in dist:
                    if r_hat == BOT:
                        continue
                    if generator.block(i, prefix + (r_hat,)) != y_i:
                        raise ValueError(
                            f"step {i}: output {r_hat!r} does not reproduce block {y_i!r}"
                        )
                out[(prefix, y_i)] = dist
            fixed.append(out)
        self.step_tables = tuple(fixed)

    def step_dist(self, r_prefix: tuple[str, ...], y_i: str) -> dict[str, Fraction]:
        i = len(r_prefix)
        if BOT in r_prefix:
            return {BOT: ONE}
        return self.step_tables[i][(tuple(r_prefix), y_i)]

    def path_dist(self, y: Sequence[str]) -> dict[tuple[str, ...], Fraction]:
        """Exact distribution of the simulated seed tuple for a target block
        sequence, failure symbol included."""
        paths: dict[tuple[str, ...], Fraction] = {(): ONE}
        for i in range(self.num_steps):
            nxt: dict[tuple[str, ...], Fraction] = {}
            for prefix, mass in paths.items():
                for r_hat, p in self.step_dist(prefix, y[i]).items():
                    key = prefix + (r_hat,)
                    nxt[key] = nxt.get(key, ZERO) + mass * p
            paths = nxt
        return paths

    def __repr__(self) -> str:
        return f"OnlineSimulator({self.num_steps} steps)"


@dataclass(frozen=True)
class RejectionConfig:
    """Configuration of the resampling simulator: the target generator, the
    number of blocks it simulates (defaults to all), and the attempt bound T.
    attempts=None is the analytic unbounded form: no failure mass whenever a
    matching seed exists."""

    generator: OnlineGenerator
    attempts: int | None = None
    num_steps: int | None = None

    def __post_init__(self):
        if self.attempts is not None and self.attempts < 1:
            raise ValueError("attempt bound must be at least 1")
        steps = self.generator.num_blocks if self.num_steps is None else self.num_steps
        if not 1 <= steps <= self.generator.num_blocks:
            raise ValueError("num_steps out of range")
        object.__setattr__(self, "num_steps", steps)


def _success_mass(p: Fraction, attempts: int | None) -> Fraction:
    """Probability that resampling hits the target within the attempt bound."""
    if p == 0:
        return ZERO
    if attempts is None:
        return ONE
    return 1 - (1 - p) ** attempts


def _preimages(g: OnlineGenerator, i: int, r_prefix: tuple[str, ...], y_i: str) -> list[str]:
    from .probkit import bitstrings

    return [r for r in bitstrings(g.seed_widths[i]) if g.block(i, r_prefix + (r,)) == y_i]


def rejection_simulator_exact(cfg: RejectionConfig) -> OnlineSimulator:
    """The resampling simulator's exact step distributions: conditioned on
    success the output is uniform on the matching seeds, and the failure mass
    is exactly (1-p)^T."""
    from .probkit import bitstrings, iter_tuples

    g = cfg.generator
    tables = []
    for i in range(cfg.num_steps):
        seed_space = 1 << g.seed_widths[i]
        table: dict[tuple[tuple[str, ...], str], dict[str, Fraction]] = {}
        for r_prefix in iter_tuples(g.seed_widths[:i]):
            for y_i in bitstrings(g.block_widths[i]):
                matching = _preimages(g, i, r_prefix, y_i)
                p = Fraction(len(matching), seed_space)
                succ = _success_mass(p, cfg.attempts)
                dist: dict[str, Fraction] = {}
                if succ > 0:
                    share = succ / len(matching)
                    for r in matching:
                        dist[r] = share
                if succ < 1:
                    dist[BOT] = 1 - succ
                table[(r_prefix, y_i)] = dist
        tables.append(table)
    return OnlineSimulator(g, tables)


class SamplingSimulator:
    """Literal resampling loop with a deterministic seeded RNG.

    Each step draws fresh candidate seeds until the generator reproduces the
    target block or the attempt bound is hit, in which case it emits the
    failure symbol.  Attempt counts are recorded per step for cost reports.
    """

    def __init__(self, cfg: RejectionConfig, rng_seed: int):
        if cfg.attempts is None:
            raise ValueError("the sampling form needs a finite attempt bound")
        self.cfg = cfg
        self.rng_seed = int(rng_seed)
        self.rng = random.Random(self.rng_seed)
        self.attempt_trace: list[tuple[int, int]] = []  # (step index, oracle calls)

    def _draw(self, width: int) -> str:
        if width == 0:
            return ""
        return format(self.rng.getrandbits(width), f"0{width}b")

    def step(self, r_prefix: tuple[str, ...], y_i: str) -> str:
        i = len(r_prefix)
        if BOT in r_prefix:
            self.attempt_trace.append((i, 0))
            return BOT
        g = self.cfg.generator
        r_hat = BOT
        calls = 0
        for _ in range(self.cfg.attempts):
            candidate = self._draw(g.seed_widths[i])
            calls += 1
            if g.block(i, r_prefix + (candidate,)) == y_i:
                r_hat = candidate
                break
        self.attempt_trace.append((i, calls))
        return r_hat

    def simulate(self, y: Sequence[str]) -> tuple[str, ...]:
        r_hats: tuple[str, ...] = ()
        for i in range(self.cfg.num_steps):
            r_hats = r_hats + (self.step(r_hats, y[i]),)
        return r_hats

    def empirical_step_dist(self, r_prefix: tuple[str, ...], y_i: str, trials: int) -> dict[str, float]:
        counts: dict[str, int] = {}
        for _ in range(trials):
            r = self.step(r_prefix, y_i)
            counts[r] = counts.get(r, 0) + 1
        return {r: c / trials for r, c in counts.items()}


def rejection_simulator_sampling(cfg: RejectionConfig, rng_seed: int) -> SamplingSimulator:
    return SamplingSimulator(cfg, rng_seed)


def total_variation(a: dict[str, float | Fraction], b: dict[str, float | Fraction]) -> float:
    keys = set(a) | set(b)
    return 0.5 * sum(abs(float(a.get(k, 0)) - float(b.get(k, 0))) for k in keys)


# ---------------------------------------------------------------------------
# Error terms
# ---------------------------------------------------------------------------


def rejection_error_term(g: OnlineGenerator, i: int, r_prefix: tuple[str, ...], attempts: int | None) -> float:
    """Expected log-loss of the resampling step: over a block drawn by the
    generator itself at this prefix, E[log2 1/(1-(1-p)^T)], exact in
    probability space."""
    from .probkit import bitstrings

    seed_space = 1 << g.seed_widths[i]
    counts: dict[str, int] = {}
    for r in bitstrings(g.seed_widths[i]):
        y = g.block(i, tuple(r_prefix) + (r,))
        counts[y] = counts.get(y, 0) + 1
    total = 0.0
    for y, c in counts.items():
        p = Fraction(c, seed_space)
        succ = _success_mass(p, attempts)
        total += float(p) * log2_fraction(1 / succ)
    return total


def rejection_error_bound(codomain_size: int, attempts: int | None) -> float:
    """The closed-form dominating bound log2(1 + (L-1)/T)."""
    if codomain_size < 1:
        raise ValueError("codomain size must be at least 1")
    if attempts is None:
        return 0.0
    if attempts < 1:
        raise ValueError("attempt bound must be at least 1")
    return math.log2(1 + Fraction(codomain_size - 1, attempts))


def expected_total_rejection_error(g: OnlineGenerator, attempts: int | None, num_steps: int | None = None) -> float:
    """Sum over steps of the expected error term, the prefix drawn from the
    generator's own uniform seeds."""
    from .probkit import iter_tuples

    steps = g.num_blocks if num_steps is None else num_steps
    total = 0.0
    for i in range(steps):
        space = 1
        for s in g.seed_widths[:i]:
            space <<= s
        weight = 1.0 / space
        for r_prefix in iter_tuples(g.seed_widths[:i]):
            total += weight * rejection_error_term(g, i, r_prefix, attempts)
    return total


def sample_error_ratios(g: OnlineGenerator, seeds: tuple[str, ...], attempts: int | None, num_steps: int | None = None) -> list[Fraction]:
    """Per-step exact success masses 1-(1-p)^T along one generator run; the
    per-sample error term is -log2 of each."""
    steps = g.num_blocks if num_steps is None else num_steps
    out = []
    seed_space = [1 << s for s in g.seed_widths]
    for i in range(steps):
        r_prefix = seeds[:i]
        y_i = g.block(i, seeds[: i + 1])
        matching = _preimages(g, i, r_prefix, y_i)
        p = Fraction(len(matching), seed_space[i])
        out.append(_success_mass(p, attempts))
    return out


# ---------------------------------------------------------------------------
# Convexity of the per-step loss
# ---------------------------------------------------------------------------


def convexity_check(t: int, grid: int) -> bool:
    """Second-difference sweep of x -> x/(1-(1-x)^t) on a uniform grid over
    [0,1], with the removable value 1/t at x=0.  Convexity of this map is
    what pins the worst case of the error bound at the simplex corners."""
    if t < 1:
        raise ValueError("t must be at least 1")
    if grid < 3:
        raise ValueError("need at least 3 grid points")

    def f(x: float) -> float:
        if x == 0.0:
            return 1.0 / t
        return x / (1.0 - (1.0 - x) ** t)

    xs = [j / (grid - 1) for j in range(grid)]
    values = [f(x) for x in xs]
    return all(
        values[j + 1] - 2.0 * values[j] + values[j - 1] >= -TOL
        for j in range(1, grid - 1)
    )


# ---------------------------------------------------------------------------
# Stock simulators for two-block generators
# ---------------------------------------------------------------------------


def conditional_seed_simulator(g: BlockGenerator, instances: Iterable[str] | None = None) -> Simulator:
    """The posterior sampler: given an instance, uniform over the seeds whose
    first block equals it.  This is the pointwise-optimal simulator for any
    fixed generator; instances outside the generator's image fail."""
    groups: dict[str, list[str]] = {}
    for seed in g.seeds():
        groups.setdefault(g.block(0, seed), []).append(seed)
    if instances is None:
        instances = sorted(groups)
    table = {}
    for y in instances:
        seeds = groups.get(y)
        if not seeds:
            table[y] = {BOT: ONE}
        else:
            share = Fraction(1, len(seeds))
            table[y] = {r: share for r in seeds}
    return Simulator(table)


def uniform_seed_simulator(g: BlockGenerator, instances: Iterable[str] | None = None) -> Simulator:
    """Ignores the instance and outputs a uniform seed."""
    if instances is None:
        instances = sorted({g.block(0, seed) for seed in g.seeds()})
    share = Fraction(1, 1 << g.seed_width)
    return Simulator({y: {r: share for r in g.seeds()} for y in instances})


def lexmin_preimage_simulator(g: BlockGenerator, instances: Iterable[str] | None = None) -> Simulator:
    """Deterministic picker: the lexicographically smallest matching seed."""
    groups: dict[str, list[str]] = {}
    for seed in g.seeds():
        groups.setdefault(g.block(0, seed), []).append(seed)
    if instances is None:
        instances = sorted(groups)
    table = {}
    for y in instances:
        seeds = groups.get(y)
        table[y] = {min(seeds): ONE} if seeds else {BOT: ONE}
    return Simulator(table)
