"""Block generators, online generators, relations, and search problems.

Generators are explicit truth tables over their full seed space, so every
induced distribution is exact.  "Time" is accounted as table sizes and oracle
calls, never enforced.  All objects are immutable after construction and
serialize to structured-text documents with deterministic ordering.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterator, Sequence

from .probkit import (
    BOT,
    FiniteDist,
    Outcome,
    WidthMismatch,
    bitstrings,
    canonical_json,
    iter_tuples,
)


def bits_to_hex(bits: str) -> str:
    if bits == "":
        return ""
    return format(int(bits, 2), f"0{(len(bits) + 3) // 4}x")


def hex_to_bits(hexstr: str, width: int) -> str:
    if width == 0:
        return ""
    return format(int(hexstr, 16), f"0{width}b")


@dataclass(frozen=True)
class Relation:
    """A finite binary relation between instances and witnesses."""

    pairs: frozenset[tuple[str, str]]
    max_witness_len: int = -1

    def __post_init__(self):
        pairs = frozenset((str(y), str(w)) for y, w in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if not pairs:
            raise ValueError("empty relation")
        longest = max(len(w) for _, w in pairs)
        if self.max_witness_len < 0:
            object.__setattr__(self, "max_witness_len", longest)
        elif self.max_witness_len < longest:
            raise ValueError(f"max_witness_len {self.max_witness_len} below actual {longest}")

    def holds(self, y: str, w: str) -> bool:
        return (y, w) in self.pairs

    @cached_property
    def language(self) -> tuple[str, ...]:
        """Instances that have at least one witness, sorted."""
        return tuple(sorted({y for y, _ in self.pairs}))

    def witnesses(self, y: str) -> tuple[str, ...]:
        return tuple(sorted(w for yy, w in self.pairs if yy == y))

    def to_doc(self) -> dict:
        return {
            "kind": "relation",
            "pairs": sorted([list(p) for p in self.pairs]),
            "max_witness_len": self.max_witness_len,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Relation":
        return cls(frozenset(tuple(p) for p in doc["pairs"]), doc["max_witness_len"])


class BlockGenerator:
    """Deterministic map from a single seed to an m-tuple of output blocks,
    stored as a total table over all 2**seed_width seeds."""

    __slots__ = ("seed_width", "block_widths", "table")

    def __init__(self, seed_width: int, block_widths: Sequence[int], table: dict[str, Outcome]):
        self.seed_width = int(seed_width)
        self.block_widths = tuple(int(w) for w in block_widths)
        expected = bitstrings(self.seed_width)
        if sorted(table) != expected:
            raise ValueError(f"table must cover exactly the {len(expected)} seeds of width {self.seed_width}")
        fixed: dict[str, Outcome] = {}
        for seed in expected:
            out = tuple(table[seed])
            if len(out) != len(self.block_widths):
                raise WidthMismatch(f"output {out} has {len(out)} blocks, expected {len(self.block_widths)}")
            for block, width in zip(out, self.block_widths):
                if len(block) != width or any(c not in "01" for c in block):
                    raise WidthMismatch(f"block {block!r} does not have width {width}")
            fixed[seed] = out
        self.table = fixed

    @classmethod
    def from_function(cls, seed_width: int, block_widths: Sequence[int], fn: Callable[[str], Outcome]) -> "BlockGenerator":
        return cls(seed_width, block_widths, {r: tuple(fn(r)) for r in bitstrings(seed_width)})

    @property
    def num_blocks(self) -> int:
        return len(self.block_widths)

    def seeds(self) -> list[str]:
        return bitstrings(self.seed_width)

    def run(self, seed: str) -> Outcome:
        return self.table[seed]

    def block(self, i: int, seed: str) -> str:
        return self.table[seed][i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, BlockGenerator):
            return NotImplemented
        return (
            self.seed_width == other.seed_width
            and self.block_widths == other.block_widths
            and self.table == other.table
        )

    def __repr__(self) -> str:
        return f"BlockGenerator(s={self.seed_width}, widths={self.block_widths})"

    def to_doc(self) -> dict:
        return {
            "kind": "block",
            "seed_width": self.seed_width,
            "block_widths": list(self.block_widths),
            "rows": [
                [bits_to_hex(seed), [bits_to_hex(b) for b in self.table[seed]]]
                for seed in self.seeds()
            ],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "BlockGenerator":
        widths = doc["block_widths"]
        table = {
            hex_to_bits(row[0], doc["seed_width"]): tuple(
                hex_to_bits(h, w) for h, w in zip(row[1], widths)
            )
            for row in doc["rows"]
        }
        return cls(doc["seed_width"], widths, table)


class OnlineGenerator:
    """Block generator whose i-th output depends only on the first i seed
    blocks; enforced structurally because the i-th table is keyed by the seed
    prefix (r_1..r_i) alone."""

    __slots__ = ("seed_widths", "block_widths", "block_maps")

    def __init__(
        self,
        seed_widths: Sequence[int],
        block_widths: Sequence[int],
        block_maps: Sequence[dict[tuple[str, ...], str]],
    ):
        self.seed_widths = tuple(int(s) for s in seed_widths)
        self.block_widths = tuple(int(w) for w in block_widths)
        if len(self.seed_widths) != len(self.block_widths):
            raise WidthMismatch("need one seed width per block")
        if len(block_maps) != len(self.block_widths):
            raise WidthMismatch("need one block map per block")
        fixed = []
        for i, table in enumerate(block_maps):
            domain = list(iter_tuples(self.seed_widths[: i + 1]))
            if sorted(table) != sorted(domain):
                raise ValueError(f"block {i} table must cover exactly the {len(domain)} seed prefixes")
            out: dict[tuple[str, ...], str] = {}
            for prefix in domain:
                block = table[prefix]
                if len(block) != self.block_widths[i] or any(c not in "01" for c in block):
                    raise WidthMismatch(f"block {block!r} does not have width {self.block_widths[i]}")
                out[prefix] = block
            fixed.append(out)
        self.block_maps = tuple(fixed)

    @classmethod
    def from_function(
        cls,
        seed_widths: Sequence[int],
        block_widths: Sequence[int],
        fns: Sequence[Callable[[tuple[str, ...]], str]],
    ) -> "OnlineGenerator":
        maps = []
        for i, fn in enumerate(fns):
            maps.append({prefix: fn(prefix) for prefix in iter_tuples(seed_widths[: i + 1])})
        return cls(seed_widths, block_widths, maps)

    @property
    def num_blocks(self) -> int:
        return len(self.block_widths)

    def seed_tuples(self) -> Iterator[tuple[str, ...]]:
        return iter_tuples(self.seed_widths)

    def block(self, i: int, prefix: tuple[str, ...]) -> str:
        """Output block i (0-based) for the seed prefix (r_1..r_{i+1})."""
        return self.block_maps[i][tuple(prefix)]

    def run(self, seeds: tuple[str, ...]) -> Outcome:
        seeds = tuple(seeds)
        return tuple(self.block_maps[i][seeds[: i + 1]] for i in range(self.num_blocks))

    def prefix_run(self, seeds: tuple[str, ...]) -> Outcome:
        """Output blocks 1..k for a length-k seed prefix."""
        seeds = tuple(seeds)
        return tuple(self.block_maps[i][seeds[: i + 1]] for i in range(len(seeds)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, OnlineGenerator):
            return NotImplemented
        return (
            self.seed_widths == other.seed_widths
            and self.block_widths == other.block_widths
            and self.block_maps == other.block_maps
        )

    def __repr__(self) -> str:
        return f"OnlineGenerator(s={self.seed_widths}, widths={self.block_widths})"

    def to_doc(self) -> dict:
        return {
            "kind": "online",
            "seed_widths": list(self.seed_widths),
            "block_widths": list(self.block_widths),
            "tables": [
                [
                    [[bits_to_hex(r) for r in prefix], bits_to_hex(table[prefix])]
                    for prefix in sorted(table)
                ]
                for table in self.block_maps
            ],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "OnlineGenerator":
        seed_widths = doc["seed_widths"]
        block_widths = doc["block_widths"]
        maps = []
        for i, rows in enumerate(doc["tables"]):
            table = {}
            for prefix_hex, out_hex in rows:
                prefix = tuple(hex_to_bits(h, seed_widths[j]) for j, h in enumerate(prefix_hex))
                table[prefix] = hex_to_bits(out_hex, block_widths[i])
            maps.append(table)
        return cls(seed_widths, block_widths, maps)


@dataclass(frozen=True)
class SearchProblem:
    """A relation together with an exact instance distribution supported on
    its language."""

    relation: Relation
    instance_dist: FiniteDist

    def __post_init__(self):
        if self.instance_dist.arity != 1:
            raise ValueError("instance distribution must be over single-block outcomes")
        language = set(self.relation.language)
        for (y,), _ in self.instance_dist.items():
            if y not in language:
                raise ValueError(f"instance {y!r} has no witness in the relation")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def output_dist(g: BlockGenerator) -> FiniteDist:
    """Exact distribution of the generator output under a uniform seed."""
    mass = Fraction(1, 1 << g.seed_width)
    acc: dict[Outcome, Fraction] = {}
    for seed in g.seeds():
        out = g.run(seed)
        acc[out] = acc.get(out, Fraction(0)) + mass
    return FiniteDist(acc.items(), widths=g.block_widths)


def supported_on(g: BlockGenerator, rel: Relation) -> bool:
    """True iff every seed's output, read as (instance blocks, witness block),
    concatenates into a pair of the relation.  The last block is the witness."""
    if g.num_blocks < 2:
        raise ValueError("need at least an instance block and a witness block")
    for seed in g.seeds():
        out = g.run(seed)
        y = "".join(out[:-1])
        w = out[-1]
        if not rel.holds(y, w):
            return False
    return True


def online_output_joint(g: OnlineGenerator) -> FiniteDist:
    """Exact joint distribution of (seed blocks, output blocks) under
    independent uniform seeds.  This is the master object every blockwise
    notion is computed from."""
    total = 1
    for s in g.seed_widths:
        total <<= s
    mass = Fraction(1, total)
    items = []
    for seeds in g.seed_tuples():
        items.append((seeds + g.run(seeds), mass))
    return FiniteDist(items, widths=g.seed_widths + g.block_widths)


def online_output_dist(g: OnlineGenerator) -> FiniteDist:
    """Marginal of online_output_joint on the output blocks."""
    joint = online_output_joint(g)
    m = g.num_blocks
    return joint.marginal(range(m, 2 * m))


def online_supported_on(g: OnlineGenerator, target: FiniteDist) -> bool:
    """True iff every reachable output tuple lies in the support of target."""
    if target.widths != g.block_widths:
        return False
    return all(g.run(seeds) in target for seeds in g.seed_tuples())


def partition_blocks(d: FiniteDist, widths: Sequence[int]) -> FiniteDist:
    """Re-chunk each outcome's concatenated bits into blocks of the given
    widths.  The distribution is unchanged; only the block structure moves."""
    widths = tuple(int(w) for w in widths)
    total = sum(d.widths)
    if sum(widths) != total:
        raise WidthMismatch(f"partition widths sum to {sum(widths)}, outcomes have {total} bits")
    if any(BOT in o for o in d.support):
        raise WidthMismatch("cannot re-chunk outcomes containing the failure symbol")

    def rechunk(outcome: Outcome) -> Outcome:
        bits = "".join(outcome)
        out = []
        pos = 0
        for w in widths:
            out.append(bits[pos : pos + w])
            pos += w
        return tuple(out)

    return d.map_outcomes(rechunk, widths=widths)


def merge_blocks(d: FiniteDist) -> FiniteDist:
    """Collapse all blocks into one."""
    return partition_blocks(d, (sum(d.widths),))
