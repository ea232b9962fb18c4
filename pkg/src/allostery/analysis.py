"""Exact measures along a chain: fixed-set proportions, cylinder sets,
stabilizer balls and triviality certificates.

Every reported value is a level-indexed exact rational; the package never
extrapolates the inverse-limit value, it reports the monotone finite-level
brackets (fixed points only project to fixed points, so proportions are
non-increasing in the level).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .actions import PointedAction
from .construction import Chain
from .words import Word, dehn_is_trivial, reduced_words


def worker_count() -> int:
    """Parallelism cap from ALLOSTERY_THREADS (counting is read-only)."""
    try:
        return max(1, int(os.environ.get("ALLOSTERY_THREADS", "1")))
    except ValueError:
        return 1


def _cylinder_mask(act: PointedAction, s_in: Sequence[Word], s_out: Sequence[Word]) -> np.ndarray:
    mask = np.ones(act.degree, dtype=bool)
    for w in s_in:
        mask &= act.fixed_mask(w)
    for w in s_out:
        mask &= ~act.fixed_mask(w)
    return mask


def _count_cylinder(act: PointedAction, s_in: Sequence[Word], s_out: Sequence[Word]) -> int:
    workers = worker_count()
    if workers == 1 or act.degree < 1 << 16:
        return int(_cylinder_mask(act, s_in, s_out).sum())
    # chunk the point range; actions are immutable so reads are safe
    bounds = np.linspace(0, act.degree, workers + 1, dtype=int)

    def count_chunk(lo: int, hi: int) -> int:
        rng = np.arange(lo, hi, dtype=np.int64)
        mask = np.ones(hi - lo, dtype=bool)
        for w in s_in:
            cur = rng.copy()
            for letter in reversed(w.letters):
                cur = act.letter_perm(letter)[cur]
            mask &= cur == rng
        for w in s_out:
            cur = rng.copy()
            for letter in reversed(w.letters):
                cur = act.letter_perm(letter)[cur]
            mask &= cur != rng
        return int(mask.sum())

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(count_chunk, bounds[:-1], bounds[1:])
    return sum(parts)


def fix_proportion(chain: Chain, w: Word, level: int) -> Fraction:
    """|Fix(w)| / degree at the given level, exact."""
    act = chain.action(level)
    return Fraction(_count_cylinder(act, [w], []), act.degree)


def cylinder_measure(
    chain: Chain,
    s_in: Sequence[Word],
    s_out: Sequence[Word],
    level: int,
) -> Fraction:
    """Measure of {x : all of s_in fix x, none of s_out does}, exact.

    With s_out empty this is non-increasing in the level; with s_in the
    A-side generators it equals the partial product of the chain's rates.
    """
    act = chain.action(level)
    return Fraction(_count_cylinder(act, list(s_in), list(s_out)), act.degree)


@dataclass
class ProportionSeries:
    wordset_id: str
    values: list[tuple[int, int, Fraction]]  # (level, degree, value)
    monotone: bool

    def rows(self) -> list[tuple]:
        return [
            (level, degree, self.wordset_id, v.numerator, v.denominator, float(v))
            for level, degree, v in self.values
        ]


def proportion_series(
    chain: Chain,
    s_in: Sequence[Word],
    s_out: Sequence[Word],
    levels: Iterable[int],
    wordset_id: str = "wordset",
) -> ProportionSeries:
    values = []
    for level in levels:
        act = chain.action(level)
        values.append((level, act.degree, cylinder_measure(chain, s_in, s_out, level)))
    plain = [v for _, _, v in values]
    monotone = all(a >= b for a, b in zip(plain, plain[1:]))
    return ProportionSeries(wordset_id=wordset_id, values=values, monotone=monotone)


# ---------------------------------------------------------------------------
# stabilizer balls and triviality certificates
# ---------------------------------------------------------------------------


def stabilizer_ball(chain: Chain, level: int, max_length: int) -> list[Word]:
    """All reduced words of length <= max_length fixing the level basepoint.

    A finite over-approximation of the basepoint stabilizer; non-increasing
    in the level because quotient maps carry fixed points to fixed points.
    """
    act = chain.action(level)
    bp = act.basepoint
    return [
        w
        for w in reduced_words(chain.pres.alphabet, max_length)
        if act.act(w, bp) == bp
    ]


@dataclass
class TrivialityCertificate:
    """First separation level per short nontrivial word.

    An empty failures list certifies that no nontrivial word of length <= L
    fixes the basepoint at every level up to max_level: the finite-level
    criterion for a trivial stabilizer at the basepoint.
    """

    length_bound: int
    max_level: int
    first_moved: list[tuple[str, int]] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json_dict(self) -> dict:
        return {
            "L": self.length_bound,
            "max_level": self.max_level,
            "first_moved": [[w, lvl] for w, lvl in self.first_moved],
            "failures": list(self.failures),
        }


def urs_certificate(chain: Chain, length_bound: int, max_level: int) -> TrivialityCertificate:
    """Record, for every Dehn-nontrivial word of length <= L, the first level
    at which it moves the basepoint; words still fixed at max_level are
    failures."""
    cert = TrivialityCertificate(length_bound=length_bound, max_level=max_level)
    actions = [chain.action(level) for level in range(max_level + 1)]
    for w in reduced_words(chain.pres.alphabet, length_bound):
        trivial, _ = dehn_is_trivial(chain.pres, w)
        if trivial:
            continue
        for level in range(1, max_level + 1):
            act = actions[level]
            if act.act(w, act.basepoint) != act.basepoint:
                cert.first_moved.append((str(w), level))
                break
        else:
            cert.failures.append(str(w))
    return cert


# ---------------------------------------------------------------------------
# comparing chains
# ---------------------------------------------------------------------------


@dataclass
class ChainComparison:
    level: int
    s: Fraction
    t: Fraction
    measure_s: Fraction
    measure_t: Fraction
    gap: Fraction
    tail_s: Fraction
    tail_t: Fraction
    tails_small: bool
    distinct_evidence: bool

    def to_json_dict(self) -> dict:
        return {
            "level": self.level,
            "s": str(self.s),
            "t": str(self.t),
            "measure_s": str(self.measure_s),
            "measure_t": str(self.measure_t),
            "gap": str(self.gap),
            "tail_s": str(self.tail_s),
            "tail_t": str(self.tail_t),
            "tails_small": self.tails_small,
            "distinct_evidence": self.distinct_evidence,
        }


def compare_chains(chain_s: Chain, chain_t: Chain, level: int) -> ChainComparison:
    """Exact gap between the A-side cylinder measures of two chains.

    Evidence that the limiting invariant measures differ: once both partial
    products sit within |s-t|/4 of their targets, the measured gap must
    exceed |s-t|/2, and the comparison certifies it with exact rationals.
    """
    if chain_s.pres != chain_t.pres:
        raise ValueError("chains must share a presentation")
    gens = chain_s.pres.gamma_a_generators()
    ms = cylinder_measure(chain_s, gens, [], level)
    mt = cylinder_measure(chain_t, gens, [], level)
    gap = abs(ms - mt)
    tail_s = abs(ms - chain_s.t)
    tail_t = abs(mt - chain_t.t)
    separation = abs(chain_s.t - chain_t.t)
    tails_small = tail_s < separation / 4 and tail_t < separation / 4
    return ChainComparison(
        level=level,
        s=chain_s.t,
        t=chain_t.t,
        measure_s=ms,
        measure_t=mt,
        gap=gap,
        tail_s=tail_s,
        tail_t=tail_t,
        tails_small=tails_small,
        distinct_evidence=tails_small and gap > separation / 2,
    )
