"""Certified finite-index subgroups and chains of intersections.

``build_lambda`` produces, for a prime p, a p-adic rate r in (0,1), a
nontrivial word gamma and a B-side word delta outside the amalgam closure, a
transitive action whose basepoint stabilizer satisfies, with exact integer
verification on the coset table:

  (i)   gamma moves the basepoint,
  (ii)  the index is a power of p,
  (iii) exactly r * index points are fixed by every A-side generator,
  (iv)  delta fixes no point.

``build_chain`` stacks such subgroups over pairwise distinct primes, taking
orbit products so that level degrees multiply (coprime indices), and records
everything needed to re-verify from serialized data alone.

All rates and measures are exact ``fractions.Fraction`` values; floats never
enter the construction.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import covers
from .actions import (
    PointedAction,
    canonical_relabel,
    fix_all,
    fix_set,
    product_intersection,
    quotient_map,
    trivial_action,
    verify_action,
)
from .errors import ConstructionExhausted, RankExhausted, TargetInvisible
from .words import (
    SurfacePresentation,
    Word,
    boundary_closure_member,
    dehn_is_trivial,
    enumerate_deltas,
    enumerate_nontrivial,
    phi,
)


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from labelled parts (no dependence on hash())."""
    digest = hashlib.sha256("/".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# rate schedules
# ---------------------------------------------------------------------------


def choose_rates(t: Fraction, primes: Sequence[int], depth: int) -> list[tuple[Fraction, int]]:
    """Greedy p-adic approximation of t from above: rates r_n in (0,1) with
    denominator a power of p_n and partial products within 2^-n of t.

    r_n = ceil((t/t_{n-1}) * p^e) / p^e with e minimal such that r_n < 1 and
    1/p^e < 2^-(n+1); this forces t <= t_n and t_n - t < 2^-(n+1).  When a
    partial product hits t exactly (t itself p-adic), later rates switch to
    1 - 1/p^e with e large enough that the total deficit stays below
    2^-(depth+1); partial products then sit just under t instead of above.
    """
    t = Fraction(t)
    if not 0 < t < 1:
        raise ValueError("t must lie strictly between 0 and 1")
    if len(set(primes[:depth])) < depth:
        raise ValueError("primes must be pairwise distinct")
    out: list[tuple[Fraction, int]] = []
    partial = Fraction(1)
    undershoot = 0
    for n in range(1, depth + 1):
        p = primes[n - 1]
        q = t / partial
        if q < 1:
            e = 1
            while True:
                scale = p**e
                num = -((-q.numerator * scale) // q.denominator)  # ceil
                rate = Fraction(num, scale)
                if rate < 1 and Fraction(1, scale) < Fraction(1, 2 ** (n + 1)):
                    break
                e += 1
        else:
            # at or below t already; stay just under 1 with a budgeted deficit
            undershoot += 1
            e = 1
            budget = Fraction(1, 2 ** (depth + 2 + undershoot))
            while partial * Fraction(1, p**e) >= budget:
                e += 1
            rate = Fraction(p**e - 1, p**e)
        out.append((rate, e))
        partial *= rate
        assert abs(partial - t) < Fraction(1, 2**n)
    return out


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass
class SubgroupCertificate:
    """Re-checkable witnesses for properties (i)-(iv), tied to one action."""

    p: int
    d: int
    r: Fraction
    residues: list[int]  # fixed-fiber base vertices (the chosen E)
    seed: int
    rank: int
    gamma: str
    delta: str
    index: int
    index_exponent: int
    gamma_moves_basepoint_to: int
    fixed_by_gamma_a: int
    claimed_fixed: int
    delta_fix_digest: str

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "r": str(self.r),
            "E": self.residues,
            "seed": self.seed,
            "rank": self.rank,
            "gamma": self.gamma,
            "delta": self.delta,
            "index": self.index,
            "index_exponent": self.index_exponent,
            "gamma_moves_basepoint_to": self.gamma_moves_basepoint_to,
            "fixed_by_gamma_a": self.fixed_by_gamma_a,
            "claimed_fixed": self.claimed_fixed,
            "delta_fix_digest": self.delta_fix_digest,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SubgroupCertificate":
        return cls(
            p=data["p"],
            d=data["d"],
            r=Fraction(data["r"]),
            residues=list(data["E"]),
            seed=data["seed"],
            rank=data["rank"],
            gamma=data["gamma"],
            delta=data["delta"],
            index=data["index"],
            index_exponent=data["index_exponent"],
            gamma_moves_basepoint_to=data["gamma_moves_basepoint_to"],
            fixed_by_gamma_a=data["fixed_by_gamma_a"],
            claimed_fixed=data["claimed_fixed"],
            delta_fix_digest=data["delta_fix_digest"],
        )


def _delta_digest(act: PointedAction, delta: Word) -> str:
    return "sha256:" + hashlib.sha256(act.word_images(delta).tobytes()).hexdigest()


@dataclass
class CertificateReport:
    ok: bool
    checks: dict

    def to_json_dict(self) -> dict:
        return {"ok": self.ok, "checks": self.checks}


def verify_certificate(cert: SubgroupCertificate, act: PointedAction) -> CertificateReport:
    """Recompute properties (i)-(iv) from the coset table alone.

    Independent of the construction path: only the permutations, the words
    and the exact rate enter.
    """
    pres = act.pres
    checks: dict = {}
    report = verify_action(act)
    checks["action"] = report.ok
    gamma = pres.word(cert.gamma)
    delta = pres.word(cert.delta)
    moved_to = act.act(gamma, act.basepoint)
    checks["i_gamma_moves_basepoint"] = (
        moved_to != act.basepoint and moved_to == cert.gamma_moves_basepoint_to
    )
    index = act.degree
    k, m = 0, index
    while m % cert.p == 0:
        m //= cert.p
        k += 1
    checks["ii_index_power_of_p"] = (
        m == 1 and k >= 1 and index == cert.index and k == cert.index_exponent
    )
    fixed = fix_all(act, pres.gamma_a_generators())
    count = int(fixed.size)
    r = Fraction(cert.r)
    checks["iii_fixed_count_exact"] = (
        count * r.denominator == r.numerator * index
        and count == cert.fixed_by_gamma_a
        and count == cert.claimed_fixed
    )
    delta_fixed = fix_set(act, delta)
    checks["iv_delta_free"] = (
        delta_fixed.size == 0 and _delta_digest(act, delta) == cert.delta_fix_digest
    )
    return CertificateReport(ok=all(checks.values()), checks=checks)


# ---------------------------------------------------------------------------
# the subgroup engine
# ---------------------------------------------------------------------------


@dataclass
class BuildConfig:
    d_cap_exp: int = 5  # d searched over p^1..p^d_cap_exp
    rank_cap: int = 8
    retries: int = 32
    e_attempts: int = 4  # rotation schedule length for the window offset
    seed: int = 0


def _handle_word(pres: SurfacePresentation, vertex: int, letter: int) -> Word:
    """The A-side handle at a base vertex: b1^-vertex g b1^vertex.

    Walked from the basepoint this crosses exactly the non-tree edge
    (vertex, g) of the cyclic cover, so killing these classes for vertex in E
    pins the fixed fibers over E itself.
    """
    b = pres.b_j0
    return Word(
        pres.alphabet, [-b] * vertex + [letter] + [b] * vertex
    )


def _power_exponent(x: int, p: int) -> int | None:
    k = 0
    while x % p == 0:
        x //= p
        k += 1
    return k if x == 1 else None


def build_lambda(
    pres: SurfacePresentation,
    p: int,
    r: Fraction,
    gamma: Word,
    delta: Word,
    config: BuildConfig | None = None,
) -> tuple[PointedAction, SubgroupCertificate]:
    """Search d, E and a separation map until properties (i)-(iv) verify.

    d runs over powers of p that make r*d integral and leave a window
    {n+1 .. d-1-n} of size >= r*d around the gamma ball (n = |gamma|); E is
    the block of r*d smallest admissible residues, rotated on retry.
    Separation targets are the A-side handles at vertices outside E, gamma's
    class when gamma lies in the cyclic kernel, and the b1-conjugates of
    delta when delta does.  Never returns an uncertified action.
    """
    config = config or BuildConfig()
    r = Fraction(r)
    if not 0 < r < 1:
        raise ValueError("r must lie strictly between 0 and 1")
    den = r.denominator
    e_min = 0
    while den % p == 0:
        den //= p
        e_min += 1
    if den != 1:
        raise ValueError(f"r = {r} is not p-adic for p = {p}")
    e_min = max(e_min, 1)
    trivial, _ = dehn_is_trivial(pres, gamma)
    if trivial:
        raise ValueError("gamma must be a nontrivial word")
    if boundary_closure_member(pres, delta):
        raise ValueError("delta must lie outside the amalgam's normal closure")
    n = len(gamma)
    diagnostics: list[dict] = []
    a_letters = [pres.letter_index(f"a{i}") for i in range(1, pres.size_a + 1)] + [
        pres.letter_index(f"al{i}") for i in range(1, pres.size_a + 1)
    ]
    for exp in range(e_min, config.d_cap_exp + 1):
        d = p**exp
        rd = r * d
        if rd.denominator != 1:
            continue
        rd = int(rd)
        window = d - 1 - 2 * n
        if window < rd or rd < 1:
            diagnostics.append({"d": d, "reason": "window too small"})
            continue
        base = covers.cyclic_cover(pres, d)
        max_offset = min(window - rd, config.e_attempts - 1)
        for offset in range(max_offset + 1):
            residues = list(range(n + 1 + offset, n + 1 + offset + rd))
            kill_words = [
                _handle_word(pres, v, letter) for v in residues for letter in a_letters
            ]
            hd = covers.homology(base, p, kill_words)
            targets = [
                _handle_word(pres, v, letter)
                for v in range(d)
                if v not in set(residues)
                for letter in a_letters
            ]
            if phi(pres, gamma) % d == 0:
                targets.append(gamma)
            if phi(pres, delta) % d == 0:
                targets.extend(
                    Word(pres.alphabet, [-pres.b_j0] * k)
                    * delta
                    * Word(pres.alphabet, [pres.b_j0] * k)
                    for k in range(d)
                )
            seed = derive_seed(config.seed, "lambda", p, d, offset)
            try:
                sm = covers.search_separation(
                    hd, targets, seed, rank_cap=config.rank_cap, tries=config.retries
                )
            except TargetInvisible as exc:
                diagnostics.append(
                    {"d": d, "offset": offset, "reason": f"target invisible: {exc.word}"}
                )
                continue
            except RankExhausted:
                diagnostics.append({"d": d, "offset": offset, "reason": "rank exhausted"})
                continue
            # canonical numbering first: certificate witnesses must survive
            # the round trip through serialized files
            act = canonical_relabel(covers.cocycle_cover(base, hd, sm))
            exponent = _power_exponent(act.degree, p)
            cert = SubgroupCertificate(
                p=p,
                d=d,
                r=r,
                residues=residues,
                seed=seed,
                rank=sm.rank,
                gamma=str(gamma),
                delta=str(delta),
                index=act.degree,
                index_exponent=exponent if exponent is not None else -1,
                gamma_moves_basepoint_to=act.act(gamma, act.basepoint),
                fixed_by_gamma_a=int(fix_all(act, pres.gamma_a_generators()).size),
                claimed_fixed=int(r * act.degree),
                delta_fix_digest=_delta_digest(act, delta),
            )
            report = verify_certificate(cert, act)
            if report.ok:
                act.meta.update(
                    {"kind": "lambda", "p": p, "d": d, "rank": sm.rank, "seed": seed}
                )
                return act, cert
            diagnostics.append(
                {"d": d, "offset": offset, "reason": "verification", "checks": report.checks}
            )
    raise ConstructionExhausted(
        f"no certified subgroup for p={p}, r={r}, gamma={gamma}, delta={delta}",
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------


@dataclass
class ChainLevel:
    n: int
    p: int
    rate: Fraction
    t_partial: Fraction
    gamma: Word
    delta: Word
    lam: PointedAction
    certificate: SubgroupCertificate
    action: PointedAction  # intersection of lambda_1 .. lambda_n


@dataclass
class Chain:
    pres: SurfacePresentation
    t: Fraction
    primes: list[int]
    depth: int
    config: BuildConfig
    levels: list[ChainLevel] = field(default_factory=list)

    def action(self, level: int) -> PointedAction:
        """Level-n intersection action; level 0 is the one-point action."""
        if level == 0:
            return trivial_action(self.pres)
        return self.levels[level - 1].action

    def degree(self, level: int) -> int:
        return self.action(level).degree

    def partial_product(self, level: int) -> Fraction:
        if level == 0:
            return Fraction(1)
        return self.levels[level - 1].t_partial


def build_chain(
    pres: SurfacePresentation,
    t: Fraction,
    depth: int,
    config: BuildConfig | None = None,
    primes: Sequence[int] = (3, 5, 7, 11, 13, 17, 19, 23),
) -> Chain:
    """Build the depth-level chain of intersections for parameter t.

    Level n separates gamma_n, the first enumerated nontrivial word that
    still fixes the previous level's basepoint (lazy selection: words already
    separated are skipped), and frees delta_n, the next enumerated B-side
    word outside the amalgam closure.  Degrees multiply because indices over
    distinct primes are coprime; the quotient map to the previous level is
    verified at every step.
    """
    config = config or BuildConfig()
    t = Fraction(t)
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if depth > len(primes):
        raise ValueError("not enough primes for the requested depth")
    chain = Chain(pres=pres, t=t, primes=list(primes[:depth]), depth=depth, config=config)
    if depth == 0:
        return chain
    rates = choose_rates(t, primes, depth)
    gamma_stream = enumerate_nontrivial(pres, max_length=64)
    delta_stream = enumerate_deltas(pres, max_length=64)
    current = trivial_action(pres)
    partial = Fraction(1)
    for n in range(1, depth + 1):
        rate, _ = rates[n - 1]
        gamma = None
        for candidate in gamma_stream:
            if current.act(candidate, current.basepoint) == current.basepoint:
                gamma = candidate
                break
        if gamma is None:
            raise ConstructionExhausted(f"no unseparated word found at level {n}")
        delta = next(delta_stream)
        level_config = BuildConfig(
            d_cap_exp=config.d_cap_exp,
            rank_cap=config.rank_cap,
            retries=config.retries,
            e_attempts=config.e_attempts,
            seed=derive_seed(config.seed, "level", n),
        )
        try:
            lam, cert = build_lambda(pres, primes[n - 1], rate, gamma, delta, level_config)
        except ConstructionExhausted as exc:
            raise ConstructionExhausted(
                f"level {n} failed for gamma={gamma}, delta={delta}: {exc}",
                diagnostics=exc.diagnostics,
            ) from exc
        intersected = product_intersection(current, lam)
        if intersected.degree != current.degree * lam.degree:
            raise ConstructionExhausted(
                f"level {n}: intersection degree {intersected.degree} is not the "
                f"product {current.degree * lam.degree}"
            )
        report = verify_action(intersected)
        if not report.ok:
            raise ConstructionExhausted(f"level {n}: intersection failed verification")
        quotient_map(intersected, current)  # raises NotAQuotient on failure
        partial *= rate
        chain.levels.append(
            ChainLevel(
                n=n,
                p=primes[n - 1],
                rate=rate,
                t_partial=partial,
                gamma=gamma,
                delta=delta,
                lam=lam,
                certificate=cert,
                action=intersected,
            )
        )
        current = intersected
    return chain
