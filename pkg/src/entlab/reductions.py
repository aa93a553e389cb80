"""Constructive reductions and verifiers for the proved identities/bounds.

Every verifier returns a ReductionReport whose `holds` flag reflects the
checked inequality or identity at tolerance TOL.  Identities are checked in
exact rational space wherever the two sides are rationals, with the float
comparison as a second line.

Model-constant conventions: all Omega(.) constants are 1, "time" counts
oracle calls and table lookups, and attempt bounds computed from budgets are
rounded up (the ceiling preserves the error-bound direction).
"""

from __future__ import annotations

import itertools
import math
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .genkit import (
    BlockGenerator,
    OnlineGenerator,
    Relation,
    SearchProblem,
    online_supported_on,
)
from .notions import (
    AdversaryPair,
    NotionValue,
    hardness_re,
    inaccessible_entropy,
    nb_hardness_re,
    nb_inaccessible_re,
    relative_pseudoentropy,
    witness_hardness_re,
)
from .probkit import (
    BOT,
    BudgetExceeded,
    DomainError,
    FiniteDist,
    NotFlat,
    Outcome,
    SupportViolation,
    TOL,
    bitstrings,
    iter_tuples,
    log2_fraction,
)
from .simkit import (
    OnlineSimulator,
    RejectionConfig,
    Simulator,
    conditional_seed_simulator,
    rejection_error_bound,
    rejection_simulator_exact,
    sample_error_ratios,
)

ZERO = Fraction(0)
ONE = Fraction(1)

LN2 = math.log(2)

DEFAULT_ENUM_CAP = 65536
ENUM_CAP_ENV = "ENTLAB_MAX_ENUM"


def enum_cap_default() -> int:
    value = os.environ.get(ENUM_CAP_ENV)
    return int(value) if value else DEFAULT_ENUM_CAP


@dataclass
class ReductionReport:
    """Outcome of one verifier: the two compared quantities, the guaranteed
    bound where the statement has one, and the per-sample ledger."""

    name: str
    lhs_value: float
    rhs_value: float
    bound: float | None
    holds: bool
    max_deviation: float
    decomposition: list[dict] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "lhs_value": repr(self.lhs_value),
            "rhs_value": repr(self.rhs_value),
            "bound": None if self.bound is None else repr(self.bound),
            "holds": self.holds,
            "max_deviation": repr(self.max_deviation),
            "decomposition": self.decomposition,
            "details": {k: (repr(v) if isinstance(v, float) else v) for k, v in self.details.items()},
        }


@dataclass(frozen=True)
class ParamBudget:
    """Parameter bundle flowing through the hardness calculators.

    `spend` is the amount of hardness sacrificed to pay for simulation in the
    block reductions; `hardness` is the conclusion-side value a calculator
    writes.  `t` is abstract cost (oracle calls); `T` the attempt bound.
    """

    t: float = 1.0
    eps: Fraction | None = None
    delta: Fraction | None = None
    delta_prime: Fraction | None = None
    ell: int | None = None
    m: int | None = None
    T: int | None = None
    spend: float | None = None
    hardness: float | None = None

    def __post_init__(self):
        if self.eps is not None:
            object.__setattr__(self, "eps", Fraction(self.eps))
            if not 0 < self.eps <= 1:
                raise DomainError(f"eps must be in (0,1], got {self.eps}")
        for name in ("delta", "delta_prime"):
            value = getattr(self, name)
            if value is not None:
                value = Fraction(value)
                object.__setattr__(self, name, value)
                if not 0 <= value <= 1:
                    raise DomainError(f"{name} must be in [0,1], got {value}")
        if self.T is not None and self.T < 1:
            raise DomainError("attempt bound T must be at least 1")
        for name in ("ell", "m"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise DomainError(f"{name} must be at least 1")


# ---------------------------------------------------------------------------
# Solver composition and success bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComposedSolver:
    """The search-problem solver obtained by feeding simulated coins into the
    generator's witness block."""

    generator: BlockGenerator
    simulator: Simulator

    def witness_dist(self, y: str) -> dict[str, Fraction]:
        out: dict[str, Fraction] = {}
        for r, p in self.simulator.table.get(y, {BOT: ONE}).items():
            w = BOT if r == BOT else self.generator.block(1, r)
            out[w] = out.get(w, ZERO) + p
        return out

    def success_probability(self, rel: Relation, instance_dist: FiniteDist) -> Fraction:
        total = ZERO
        for (y,), p in instance_dist.items():
            for w, q in self.witness_dist(y).items():
                if w != BOT and rel.holds(y, w):
                    total += p * q
        return total


def adversary_from_pair(g: BlockGenerator, s: Simulator) -> ComposedSolver:
    if g.num_blocks != 2:
        raise ValueError("needs a two-block generator")
    return ComposedSolver(g, s)


def _pow2(exponent: float) -> float:
    if exponent == float("-inf"):
        return 0.0
    return 2.0 ** exponent


def verify_success_lower_bound(
    problem: SearchProblem,
    adv: AdversaryPair,
    delta: Fraction = Fraction(1, 2),
) -> ReductionReport:
    """Checks that the composed solver succeeds with probability at least
    2**(-divergence), and at least delta * 2**(-delta-quantile)."""
    nv = hardness_re(problem, adv, delta=delta, allow_infinite=True)
    solver = adversary_from_pair(adv.generator, adv.simulator)
    success = solver.success_probability(problem.relation, problem.instance_dist)
    bound_exp = _pow2(-nv.value)
    bound_min = float(delta) * _pow2(-nv.delta_quantile)
    ok = float(success) >= bound_exp - TOL and float(success) >= bound_min - TOL
    return ReductionReport(
        name="solver-success-lower-bound",
        lhs_value=float(success),
        rhs_value=nv.value,
        bound=max(bound_exp, bound_min),
        holds=ok,
        max_deviation=max(bound_exp - float(success), bound_min - float(success), 0.0),
        decomposition=[
            {"outcome": list(t.outcome), "weight": [t.weight.numerator, t.weight.denominator], "value": repr(t.value)}
            for t in nv.samples
        ],
        details={
            "delta": str(delta),
            "divergence": nv.value,
            "divergence_quantile": nv.delta_quantile,
            "success_num": success.numerator,
            "success_den": success.denominator,
            "bound_expectation": bound_exp,
            "bound_quantile": bound_min,
        },
    )


def verify_witness_bounds(
    rel: Relation,
    yw: FiniteDist,
    adv: AdversaryPair,
    delta: Fraction = Fraction(1, 2),
) -> ReductionReport:
    """Same success bounds driven by the three-component divergence, plus the
    ordering check that adding the witness never decreases the divergence.

    The quantile bound is computed directly as the delta-quantile of the
    three-component samples; no quantile data-processing step is involved
    (there is no such inequality to lean on).
    """
    if not isinstance(adv.generator, BlockGenerator):
        raise ValueError("witness bounds need the two-block form")
    wv = witness_hardness_re(rel, yw, adv, delta=delta, allow_infinite=True)
    problem = SearchProblem(rel, yw.marginal([0]))
    hv = hardness_re(problem, adv, allow_infinite=True)
    solver = adversary_from_pair(adv.generator, adv.simulator)
    success = solver.success_probability(rel, problem.instance_dist)
    bound_exp = _pow2(-wv.value)
    bound_min = float(delta) * _pow2(-wv.delta_quantile)
    ordering_ok = hv.value <= wv.value + TOL
    ok = (
        float(success) >= bound_exp - TOL
        and float(success) >= bound_min - TOL
        and ordering_ok
    )
    return ReductionReport(
        name="witness-success-lower-bound",
        lhs_value=float(success),
        rhs_value=wv.value,
        bound=max(bound_exp, bound_min),
        holds=ok,
        max_deviation=max(bound_exp - float(success), bound_min - float(success), hv.value - wv.value, 0.0),
        details={
            "delta": str(delta),
            "witness_divergence": wv.value,
            "witness_divergence_quantile": wv.delta_quantile,
            "instance_divergence": hv.value,
            "ordering_holds": ordering_ok,
            "min_form_method": "direct-quantile-of-three-component-samples",
            "success_num": success.numerator,
            "success_den": success.denominator,
        },
    )


# ---------------------------------------------------------------------------
# Blockwise splitting and the simulator decomposition
# ---------------------------------------------------------------------------


def split_into_blocks(
    y: FiniteDist,
    g: OnlineGenerator,
    s: OnlineSimulator,
) -> ReductionReport:
    """Per-sample equality between the blockwise divergence sum and the
    whole-string divergence of the flattened pair."""
    nb = nb_hardness_re(y, g, s)

    total = 1
    for sw in g.seed_widths:
        total <<= sw
    seed_mass = Fraction(1, total)
    left: dict[Outcome, Fraction] = {}
    for seeds in g.seed_tuples():
        key = seeds + g.run(seeds)
        left[key] = left.get(key, ZERO) + seed_mass
    right: dict[Outcome, Fraction] = {}
    for o, p in y.items():
        for path, q in s.path_dist(o).items():
            key = path + o
            right[key] = right.get(key, ZERO) + p * q

    max_dev = 0.0
    rows = []
    direct_total = 0.0
    exact_match = True
    by_outcome = {t.outcome: t for t in nb.samples}
    for outcome, mass in sorted(left.items()):
        r_mass = right.get(outcome, ZERO)
        if r_mass == 0:
            raise SupportViolation(f"flattened pair has zero right mass at {outcome}")
        ratio = mass / r_mass
        direct_value = log2_fraction(ratio)
        direct_total += float(mass) * direct_value
        term = by_outcome[outcome]
        if term.ratio != ratio:
            exact_match = False
        dev = abs(term.value - direct_value)
        max_dev = max(max_dev, dev)
        rows.append({"outcome": list(outcome), "blockwise": repr(term.value), "direct": repr(direct_value)})
    ok = exact_match and max_dev < TOL and abs(nb.value - direct_total) < TOL
    return ReductionReport(
        name="blockwise-split-identity",
        lhs_value=nb.value,
        rhs_value=direct_total,
        bound=None,
        holds=ok,
        max_deviation=max_dev,
        decomposition=rows,
        details={"exact_ratio_match": exact_match, "terms": [repr(t) for t in (nb.terms or [])]},
    )


def bkl_pipeline(
    rel: Relation,
    yw: FiniteDist,
    g: OnlineGenerator,
    budget: ParamBudget,
    delta: Fraction | None = None,
    decompose_with: OnlineGenerator | None = None,
) -> ReductionReport:
    """Build the resampling simulator for the instance blocks, then check the
    exact decomposition

        witness divergence = blockwise divergence sum + resampling error,

    per sample and in expectation, together with the error budget implied by
    the attempt bound.  `decompose_with` substitutes a different generator on
    the decomposition side (fault-injection hook; defaults to g).
    """
    m = g.num_blocks - 1
    if m < 1:
        raise ValueError("need at least one instance block plus the witness block")
    if not online_supported_on(g, yw):
        raise ValueError("generator output leaves the target support")
    attempts = budget.T
    ell = max(g.block_widths[:m])
    g_dec = decompose_with if decompose_with is not None else g

    sim = rejection_simulator_exact(RejectionConfig(g, attempts=attempts, num_steps=m))
    wv = witness_hardness_re(rel, yw, AdversaryPair(g, sim), delta=delta)
    nb = nb_inaccessible_re(yw, g_dec, delta=delta)

    # blockwise samples keyed by (instance seeds, outputs); the trailing seed
    # blocks only relabel samples with identical value.
    nb_by_key: dict[Outcome, Fraction] = {}
    for t in nb.samples:
        key = t.outcome[:m] + t.outcome[g_dec.num_blocks :]
        prev = nb_by_key.get(key)
        if prev is not None and prev != t.ratio:
            raise SupportViolation(f"inconsistent blockwise samples at {key}")
        nb_by_key[key] = t.ratio

    max_dev = 0.0
    exact_match = True
    err_expect = 0.0
    rows = []
    for t in wv.samples:
        seeds = t.outcome[:m]
        err_ratios = sample_error_ratios(g_dec, seeds, attempts, num_steps=m)
        err_ratio = ONE
        for sr in err_ratios:
            err_ratio *= sr
        err_value = log2_fraction(1 / err_ratio)
        err_expect += float(t.weight) * err_value
        nb_ratio = nb_by_key.get(t.outcome)
        if nb_ratio is None or t.ratio != nb_ratio / err_ratio:
            exact_match = False
        nb_value = float("nan") if nb_ratio is None else log2_fraction(nb_ratio)
        dev = abs(t.value - (nb_value + err_value))
        max_dev = max(max_dev, dev) if dev == dev else float("inf")
        rows.append(
            {
                "outcome": list(t.outcome),
                "witness": repr(t.value),
                "blockwise": repr(nb_value),
                "error": repr(err_value),
            }
        )

    expectation_dev = abs(wv.value - (nb.value + err_expect))
    error_budget = sum(rejection_error_bound(1 << g.block_widths[i], attempts) for i in range(m))
    checks = {
        "per_sample_identity": exact_match and max_dev < TOL,
        "expectation_identity": expectation_dev < TOL,
        "error_within_codomain_bound": err_expect <= error_budget + TOL,
    }

    details: dict = {
        "attempts": attempts,
        "ell": ell,
        "m": m,
        "error_expectation": err_expect,
        "error_budget": error_budget,
        "witness_value": wv.value,
        "blockwise_value": nb.value,
    }
    if budget.spend is not None and attempts is not None:
        t_needed = m * (1 << ell) / (budget.spend * LN2)
        if attempts >= t_needed - TOL:
            checks["error_within_spend"] = err_expect <= budget.spend + TOL
            details["spend"] = budget.spend
    if budget.delta_prime is not None and budget.delta_prime > 0 and attempts is not None:
        threshold = m * (1 << ell) / (attempts * float(budget.delta_prime) * LN2)
        tail_mass = ZERO
        for t in wv.samples:
            err_ratios = sample_error_ratios(g_dec, t.outcome[:m], attempts, num_steps=m)
            err_ratio = ONE
            for sr in err_ratios:
                err_ratio *= sr
            if log2_fraction(1 / err_ratio) >= threshold - TOL:
                tail_mass += t.weight
        checks["error_tail_bound"] = float(tail_mass) <= float(budget.delta_prime) + TOL
        details["error_tail_threshold"] = threshold
        details["error_tail_mass"] = float(tail_mass)
    if delta is not None:
        details["witness_quantile"] = wv.delta_quantile
        details["blockwise_quantile"] = nb.delta_quantile

    details["checks"] = checks
    return ReductionReport(
        name="rejection-decomposition-identity",
        lhs_value=wv.value,
        rhs_value=nb.value + err_expect,
        bound=error_budget,
        holds=all(checks.values()),
        max_deviation=max(max_dev, expectation_dev),
        decomposition=rows,
        details=details,
    )


def flat_equivalence(y: FiniteDist, g: OnlineGenerator) -> ReductionReport:
    """On a flat target, the entropy gap and the blockwise divergence agree
    per sample and in expectation; the per-sample entropy sum pins to
    log2 of the support size."""
    if not y.is_flat():
        raise NotFlat("target distribution is not uniform on its support")
    ie = inaccessible_entropy(y, g)
    nb = nb_inaccessible_re(y, g)
    support_bits = log2_fraction(Fraction(len(y.support)))

    # The flat-support identity: every support point carries the same sample
    # entropy, so the per-sample gap can be recomputed from the accessible
    # side alone and compared against the blockwise samples.
    gen_probs_cache: dict[Outcome, Fraction] = {}
    max_dev = 0.0
    rows = []
    nb_by_outcome = {t.outcome: t for t in nb.samples}
    for t in ie.samples:
        seeds = t.outcome[: g.num_blocks]
        outputs = t.outcome[g.num_blocks :]
        accessible_bits = 0.0
        prob = ONE
        for i in range(g.num_blocks):
            p = _block_prob(g, i, seeds[:i], outputs[i], gen_probs_cache)
            prob *= p
        accessible_bits = log2_fraction(1 / prob)
        gap_direct = support_bits - accessible_bits
        dev = abs(gap_direct - nb_by_outcome[t.outcome].value)
        max_dev = max(max_dev, dev)
        rows.append({"outcome": list(t.outcome), "gap": repr(gap_direct), "blockwise": repr(nb_by_outcome[t.outcome].value)})

    expectation_dev = abs(ie.value - nb.value)
    sample_dev = max(
        abs(a.value - b.value) for a, b in zip(ie.samples, nb.samples)
    )
    ok = max_dev < TOL and expectation_dev < TOL and sample_dev < TOL
    return ReductionReport(
        name="flat-gap-equivalence",
        lhs_value=ie.value,
        rhs_value=nb.value,
        bound=None,
        holds=ok,
        max_deviation=max(max_dev, expectation_dev, sample_dev),
        decomposition=rows,
        details={"support_bits": support_bits},
    )


def _block_prob(g: OnlineGenerator, i: int, r_prefix: Outcome, y_i: str, cache: dict) -> Fraction:
    key = (i, r_prefix, y_i)
    if key not in cache:
        space = 1 << g.seed_widths[i]
        count = sum(1 for r in bitstrings(g.seed_widths[i]) if g.block(i, r_prefix + (r,)) == y_i)
        cache[key] = Fraction(count, space)
    return cache[key]


# ---------------------------------------------------------------------------
# Parameter calculators
# ---------------------------------------------------------------------------

THEOREMS = (
    "hardness_re",
    "hardness_re_min",
    "witness_hardness_re",
    "witness_hardness_re_min",
    "blockwise_re",
    "blockwise_re_min",
    "inaccessible_entropy",
    "inaccessible_max_entropy",
    "attempt_bound",
    "attempt_bound_min",
)


def _require(budget: ParamBudget, *names: str) -> None:
    for name in names:
        if getattr(budget, name) is None:
            raise DomainError(f"calculator needs budget field {name!r}")


def _log2_inv(x: Fraction) -> float:
    return log2_fraction(1 / x)


def param_calculator(budget: ParamBudget, theorem: str) -> ParamBudget:
    """Conclusion-side parameters for the named statement, with all model
    constants set to 1 and logs in bits.  Raises DomainError when a required
    inequality on the inputs fails."""
    if theorem not in THEOREMS:
        raise DomainError(f"unknown theorem {theorem!r}; choose from {THEOREMS}")

    if theorem == "hardness_re" or theorem == "witness_hardness_re":
        _require(budget, "eps")
        return replace(budget, hardness=_log2_inv(budget.eps))

    if theorem == "hardness_re_min" or theorem == "witness_hardness_re_min":
        # The two published phrasings log(1/eps)-log(1/delta) and
        # log(delta/eps) are the same number; this is that common value.
        _require(budget, "eps", "delta")
        if budget.delta == 0:
            raise DomainError("delta must be positive for the quantile form")
        return replace(budget, hardness=_log2_inv(budget.eps) - _log2_inv(budget.delta))

    if theorem == "attempt_bound":
        _require(budget, "m", "ell", "spend")
        if budget.spend <= 0:
            raise DomainError("spend must be positive")
        T = math.ceil(budget.m * (1 << budget.ell) / (budget.spend * LN2))
        return replace(budget, T=T)

    if theorem == "attempt_bound_min":
        _require(budget, "m", "ell", "spend", "delta_prime")
        if budget.spend <= 0 or budget.delta_prime <= 0:
            raise DomainError("spend and delta_prime must be positive")
        T = math.ceil(budget.m * (1 << budget.ell) / (float(budget.delta_prime) * budget.spend * LN2))
        return replace(budget, T=T)

    if theorem == "blockwise_re":
        _require(budget, "eps", "m", "ell", "spend")
        base = _log2_inv(budget.eps)
        if not 0 < budget.spend <= base + TOL:
            raise DomainError(f"spend must lie in (0, {base}]")
        T = math.ceil(budget.m * (1 << budget.ell) / (budget.spend * LN2))
        t_out = budget.t * budget.spend / (budget.m ** 2 * (1 << budget.ell))
        return replace(budget, t=t_out, T=T, hardness=base - budget.spend)

    if theorem == "blockwise_re_min":
        _require(budget, "eps", "delta", "delta_prime", "m", "ell", "spend")
        if budget.delta == 0:
            raise DomainError("delta must be positive for the quantile form")
        if budget.delta_prime > 1 - budget.delta:
            raise DomainError("delta_prime must not exceed 1 - delta")
        if budget.delta_prime == 0:
            raise DomainError("delta_prime must be positive")
        base = _log2_inv(budget.eps) - _log2_inv(budget.delta)
        if not 0 < budget.spend <= base + TOL:
            raise DomainError(f"spend must lie in (0, {base}]")
        T = math.ceil(budget.m * (1 << budget.ell) / (float(budget.delta_prime) * budget.spend * LN2))
        t_out = budget.t * float(budget.delta_prime) * budget.spend / (budget.m ** 2 * (1 << budget.ell))
        return replace(
            budget,
            t=t_out,
            T=T,
            delta=budget.delta + budget.delta_prime,
            hardness=base - budget.spend,
        )

    if theorem == "inaccessible_entropy":
        _require(budget, "eps", "m", "ell", "spend")
        base = _log2_inv(budget.eps)
        if not 0 <= budget.spend <= base + TOL:
            raise DomainError(f"spend must lie in [0, {base}]")
        n = budget.m * budget.ell
        t_out = budget.t * budget.spend * budget.ell ** 2 / (n ** 2 * (1 << budget.ell))
        return replace(budget, t=t_out, hardness=base - budget.spend)

    if theorem == "inaccessible_max_entropy":
        _require(budget, "eps", "delta", "m", "ell", "spend")
        if budget.delta == 0:
            raise DomainError("delta must be positive for the quantile form")
        base = _log2_inv(budget.eps) - log2_fraction(2 / budget.delta)
        if budget.spend < 0 or budget.spend > base + TOL:
            raise DomainError(f"spend must lie in [0, {base}]")
        n = budget.m * budget.ell
        t_out = budget.t * float(budget.delta) * budget.spend * budget.ell ** 2 / (n ** 2 * (1 << budget.ell))
        return replace(budget, t=t_out, hardness=base - budget.spend)

    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# Family enumeration and brute-force search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilySpec:
    """Enumeration spec for an adversary family: per-block seed widths, an
    enumeration cap, and an optional seeded randomized fallback used when the
    family exceeds the cap."""

    seed_widths: tuple[int, ...]
    cap: int | None = None
    sample: int | None = None
    rng_seed: int = 0
    in_support: bool = True

    def resolved_cap(self) -> int:
        return self.cap if self.cap is not None else enum_cap_default()


def _online_block_choices(
    target: FiniteDist | None,
    block_widths: Sequence[int],
    seed_widths: Sequence[int],
    chosen_maps: list[dict],
    i: int,
) -> list[tuple[tuple[str, ...], list[str]]]:
    """For block i, the per-prefix lists of admissible outputs given the maps
    chosen for earlier blocks."""
    prefixes = list(iter_tuples(seed_widths[: i + 1]))
    if target is not None:
        prefix_support: set[Outcome] = set()
        for o in target.support:
            prefix_support.add(o[: i + 1])
    out = []
    for prefix in prefixes:
        earlier = tuple(chosen_maps[j][prefix[: j + 1]] for j in range(i))
        if target is None:
            allowed = bitstrings(block_widths[i])
        else:
            allowed = sorted(
                {o[i] for o in prefix_support if o[:i] == earlier}
            )
        out.append((prefix, allowed))
    return out


def _iter_online_maps(
    target: FiniteDist | None,
    block_widths: Sequence[int],
    seed_widths: Sequence[int],
    chosen_maps: list[dict],
    i: int,
) -> Iterator[list[dict]]:
    if i == len(block_widths):
        yield [dict(m) for m in chosen_maps]
        return
    choices = _online_block_choices(target, block_widths, seed_widths, chosen_maps, i)
    prefixes = [p for p, _ in choices]
    if any(not allowed for _, allowed in choices):
        return
    for assignment in itertools.product(*(allowed for _, allowed in choices)):
        chosen_maps.append(dict(zip(prefixes, assignment)))
        yield from _iter_online_maps(target, block_widths, seed_widths, chosen_maps, i + 1)
        chosen_maps.pop()


def iter_online_generators(
    block_widths: Sequence[int],
    seed_widths: Sequence[int],
    target: FiniteDist | None = None,
    cap: int | None = None,
) -> Iterator[OnlineGenerator]:
    """Lexicographic enumeration of online generators; when a target is
    given, only generators whose every output stays inside its support are
    produced (pruned level by level, which is exact because support prefixes
    are projections).  Raises BudgetExceeded beyond the cap."""
    if target is not None and tuple(target.widths) != tuple(block_widths):
        raise ValueError("target widths do not match the requested block widths")
    produced = 0
    limit = cap if cap is not None else enum_cap_default()
    for maps in _iter_online_maps(target, tuple(block_widths), tuple(seed_widths), [], 0):
        produced += 1
        if produced > limit:
            raise BudgetExceeded(f"online family exceeds cap {limit}")
        yield OnlineGenerator(seed_widths, block_widths, maps)


def random_online_generator(
    block_widths: Sequence[int],
    seed_widths: Sequence[int],
    rng: random.Random,
    target: FiniteDist | None = None,
) -> OnlineGenerator:
    """One random member of the (in-support) online family."""
    maps: list[dict] = []
    for i in range(len(block_widths)):
        choices = _online_block_choices(target, tuple(block_widths), tuple(seed_widths), maps, i)
        table = {}
        for prefix, allowed in choices:
            if not allowed:
                raise ValueError("support has no admissible continuation")
            table[prefix] = rng.choice(allowed)
        maps.append(table)
    return OnlineGenerator(seed_widths, block_widths, maps)


def iter_two_block_generators(
    rel: Relation,
    seed_width: int,
    instance_width: int,
    witness_width: int,
    cap: int | None = None,
) -> Iterator[BlockGenerator]:
    """All two-block generators of the given seed width supported on the
    relation (each table row is a relation pair of the right widths)."""
    rows = sorted(
        (y, w) for y, w in rel.pairs if len(y) == instance_width and len(w) == witness_width
    )
    if not rows:
        raise ValueError("relation has no pairs of the requested widths")
    seeds = bitstrings(seed_width)
    produced = 0
    limit = cap if cap is not None else enum_cap_default()
    for assignment in itertools.product(rows, repeat=len(seeds)):
        produced += 1
        if produced > limit:
            raise BudgetExceeded(f"two-block family exceeds cap {limit}")
        yield BlockGenerator(seed_width, (instance_width, witness_width), dict(zip(seeds, assignment)))


@dataclass
class BruteForceResult:
    value: float
    adversary: BlockGenerator | OnlineGenerator
    simulator_kind: str
    notion_value: NotionValue
    exact: bool
    count: int
    index: int


BRUTE_FORCE_NOTIONS = (
    "hardness_re",
    "witness_hardness_re",
    "nb_hardness_re",
    "nb_inaccessible_re",
    "inaccessible_entropy",
)


def _materialize_family(notion: str, target, spec: FamilySpec) -> tuple[list, bool]:
    """The candidate generator list, plus whether it is the whole family."""
    cap = spec.resolved_cap()
    try:
        if notion in ("hardness_re", "witness_hardness_re"):
            if notion == "hardness_re":
                rel, instance_dist = target.relation, target.instance_dist
                iw = len(rel.language[0])
                ww = rel.max_witness_len
            else:
                rel, yw = target
                iw, ww = yw.widths
            gens = list(iter_two_block_generators(rel, spec.seed_widths[0], iw, ww, cap=cap))
        else:
            y = target
            gens = list(
                iter_online_generators(
                    y.widths,
                    spec.seed_widths,
                    target=y if spec.in_support else None,
                    cap=cap,
                )
            )
        return gens, True
    except BudgetExceeded:
        if spec.sample is None:
            raise
    rng = random.Random(spec.rng_seed)
    gens = []
    if notion in ("hardness_re", "witness_hardness_re"):
        if notion == "hardness_re":
            rel = target.relation
            iw = len(rel.language[0])
            ww = rel.max_witness_len
        else:
            rel, yw = target
            iw, ww = yw.widths
        rows = sorted((y0, w0) for y0, w0 in rel.pairs if len(y0) == iw and len(w0) == ww)
        seeds = bitstrings(spec.seed_widths[0])
        for _ in range(spec.sample):
            table = {r: rng.choice(rows) for r in seeds}
            gens.append(BlockGenerator(spec.seed_widths[0], (iw, ww), table))
    else:
        y = target
        for _ in range(spec.sample):
            gens.append(
                random_online_generator(y.widths, spec.seed_widths, rng, target=y if spec.in_support else None)
            )
    return gens, False


def _evaluate_candidate(notion: str, target, g) -> NotionValue:
    """Scores one generator with its analytically optimal simulator.

    The simulator space is continuous, but for each fixed generator the
    divergence is minimized by the exact posterior sampler (whole-string
    form) or the unbounded resampler (blockwise form), so pairing each
    enumerated generator with that simulator searches the full pair space.
    """
    if notion == "hardness_re":
        sim = conditional_seed_simulator(g, instances=[o[0] for o in target.instance_dist.support])
        return hardness_re(target, AdversaryPair(g, sim), allow_infinite=True)
    if notion == "witness_hardness_re":
        rel, yw = target
        sim = conditional_seed_simulator(g, instances=sorted({o[0] for o in yw.support}))
        return witness_hardness_re(rel, yw, AdversaryPair(g, sim), allow_infinite=True)
    if notion == "nb_hardness_re":
        sim = rejection_simulator_exact(RejectionConfig(g, attempts=None))
        return nb_hardness_re(target, g, sim, allow_infinite=True)
    if notion == "nb_inaccessible_re":
        return nb_inaccessible_re(target, g)
    if notion == "inaccessible_entropy":
        return inaccessible_entropy(target, g)
    raise DomainError(f"unknown notion {notion!r}; choose from {BRUTE_FORCE_NOTIONS}")


def brute_force_best(
    notion: str,
    target,
    spec: FamilySpec,
    chunks: int = 1,
    parallel: bool = False,
) -> BruteForceResult:
    """Minimum notion value over the family, with the argmin adversary.

    Enumeration order is lexicographic over tables and the first minimizer
    wins, so the result is reproducible; chunked evaluation reduces by a
    deterministic associative (value, index) minimum, so parallel and serial
    runs agree exactly.
    """
    gens, exact = _materialize_family(notion, target, spec)
    if not gens:
        raise DomainError("empty adversary family")

    def eval_range(indices: Sequence[int]) -> tuple[float, int, NotionValue]:
        best: tuple[float, int, NotionValue] | None = None
        for idx in indices:
            nv = _evaluate_candidate(notion, target, gens[idx])
            key = (nv.value, idx)
            if best is None or key < (best[0], best[1]):
                best = (nv.value, idx, nv)
        return best

    index_chunks = [list(range(k, len(gens), chunks)) for k in range(chunks)]
    index_chunks = [c for c in index_chunks if c]
    if parallel and len(index_chunks) > 1:
        with ThreadPoolExecutor(max_workers=len(index_chunks)) as pool:
            results = list(pool.map(eval_range, index_chunks))
    else:
        results = [eval_range(c) for c in index_chunks]
    value, index, nv = min(results, key=lambda r: (r[0], r[1]))

    sim_kind = {
        "hardness_re": "posterior-seed-sampler",
        "witness_hardness_re": "posterior-seed-sampler",
        "nb_hardness_re": "unbounded-resampler",
        "nb_inaccessible_re": "none",
        "inaccessible_entropy": "none",
    }[notion]
    return BruteForceResult(
        value=value,
        adversary=gens[index],
        simulator_kind=sim_kind,
        notion_value=nv,
        exact=exact,
        count=len(gens),
        index=index,
    )
