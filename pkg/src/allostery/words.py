"""Words, surface presentations and the word problem.

Group elements are freely reduced words over the generator alphabet of a
presentation.  Two presentation families are supported:

* orientable, split form: generators ``a_i, al_i`` (the A side) and
  ``b_j, be_j`` (the B side) with the single relator
  ``prod_i [a_i, al_i] * (prod_j [b_j, be_j])^-1`` of length ``4*(|A|+|B|)``;
* non-orientable: generators ``x_1 .. x_g`` with relator ``x_1^2 .. x_g^2``.

The word problem is solved by Dehn reduction, valid whenever the relator has
small-cancellation margin (max piece < |R|/6): orientable genus >= 2,
non-orientable genus >= 4.  Non-orientable genus 3 delegates to the index-two
orientable subgroup through the embedding tables of the induction module.

Convention: words act on cosets on the left, so ``(uv) . x = u . (v . x)``
and a word is evaluated by applying its rightmost letter first.  Letters are
stored as signed 1-based integers: ``+k`` is generator ``k-1`` of the
alphabet, ``-k`` its inverse.
"""

from __future__ import annotations

import itertools
import json
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import EmptyTarget, ForeignGenerators, PresentationUnsupported


class Generator(NamedTuple):
    """A single alphabet symbol: kind marker, 1-based index, sign."""

    kind: str  # "a" | "al" | "b" | "be" | "x"
    index: int
    sign: int

    @property
    def name(self) -> str:
        return f"{self.kind}{self.index}"

    def __str__(self) -> str:
        return self.name if self.sign > 0 else f"{self.name}^-1"


def _parse_name(name: str) -> tuple[str, int]:
    head = name.rstrip("0123456789")
    if head not in ("a", "al", "b", "be", "x") or head == name:
        raise ValueError(f"bad generator name: {name!r}")
    return head, int(name[len(head):])


class Word:
    """A freely reduced word over a fixed alphabet.

    The constructor reduces its input, so every ``Word`` in existence is in
    reduced form; reducing twice is a no-op.
    """

    __slots__ = ("alphabet", "letters", "_hash")

    def __init__(self, alphabet: tuple[str, ...], letters: Iterable[int] = ()):
        n = len(alphabet)
        stack: list[int] = []
        for letter in letters:
            letter = int(letter)
            if letter == 0 or abs(letter) > n:
                raise ForeignGenerators(f"letter {letter} outside alphabet of size {n}")
            if stack and stack[-1] == -letter:
                stack.pop()
            else:
                stack.append(letter)
        self.alphabet = alphabet
        self.letters = tuple(stack)
        self._hash = hash((alphabet, self.letters))

    def __len__(self) -> int:
        return len(self.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Word)
            and self.alphabet == other.alphabet
            and self.letters == other.letters
        )

    def __hash__(self) -> int:
        return self._hash

    def __mul__(self, other: "Word") -> "Word":
        if self.alphabet != other.alphabet:
            raise ForeignGenerators("cannot multiply words over different alphabets")
        return Word(self.alphabet, self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(self.alphabet, tuple(-l for l in reversed(self.letters)))

    def __pow__(self, n: int) -> "Word":
        if n < 0:
            return self.inverse() ** (-n)
        out = Word(self.alphabet)
        for _ in range(n):
            out = out * self
        return out

    def conjugated_by(self, g: "Word") -> "Word":
        """g * self * g^-1."""
        return g * self * g.inverse()

    def generators(self) -> Iterator[Generator]:
        for letter in self.letters:
            kind, index = _parse_name(self.alphabet[abs(letter) - 1])
            yield Generator(kind, index, 1 if letter > 0 else -1)

    def __str__(self) -> str:
        return " ".join(str(g) for g in self.generators())

    def __repr__(self) -> str:
        return f"Word({str(self)!r})" if self.letters else "Word('')"


def free_reduce(alphabet: tuple[str, ...], letters: Iterable[int]) -> Word:
    """Return the unique freely reduced word with the given letters."""
    return Word(alphabet, letters)


def parse_word(alphabet: tuple[str, ...], text: str) -> Word:
    """Parse the space-separated serialization, e.g. ``"a1 al1^-1 b1"``."""
    lookup = {name: i + 1 for i, name in enumerate(alphabet)}
    letters: list[int] = []
    for token in text.split():
        name, _, power = token.partition("^")
        if name not in lookup:
            raise ForeignGenerators(f"unknown generator {name!r}")
        exp = int(power) if power else 1
        base = lookup[name] if exp >= 0 else -lookup[name]
        letters.extend([base] * abs(exp))
    return Word(alphabet, letters)


def _letter_order_key(letter: int) -> int:
    # a1 < a1^-1 < al1 < al1^-1 < ... : positive letter before its inverse.
    return 2 * (abs(letter) - 1) + (0 if letter > 0 else 1)


def _commutator(a: int, b: int) -> list[int]:
    return [a, b, -a, -b]


class SurfacePresentation:
    """The split orientable surface group with sides A and B.

    ``size_a, size_b >= 1``, so the genus ``size_a + size_b`` is at least 2;
    the torus is rejected (the construction needs a non-amenable group).
    The alphabet is ordered ``a1, al1, ..., b1, be1, ...`` and the
    distinguished generator is ``b1`` (smallest B index).
    """

    kind = "orientable"

    def __init__(self, size_a: int, size_b: int):
        if size_a < 1 or size_b < 1:
            raise ValueError(
                "both sides need at least one handle (genus-1 groups are "
                "amenable and not supported)"
            )
        self.size_a = size_a
        self.size_b = size_b
        self.genus = size_a + size_b
        names: list[str] = []
        for i in range(1, size_a + 1):
            names += [f"a{i}", f"al{i}"]
        for j in range(1, size_b + 1):
            names += [f"b{j}", f"be{j}"]
        self.alphabet: tuple[str, ...] = tuple(names)
        self.n_generators = len(names)
        self.b_j0 = self.letter_index("b1")
        letters: list[int] = []
        for i in range(size_a):
            letters += _commutator(2 * i + 1, 2 * i + 2)
        tail: list[int] = []
        for j in range(size_b):
            base = 2 * size_a + 2 * j
            tail += _commutator(base + 1, base + 2)
        letters += [-l for l in reversed(tail)]
        self.relator = Word(self.alphabet, letters)
        assert len(self.relator) == 4 * self.genus
        self._dehn: _DehnReducer | None = None

    # -- alphabet helpers -------------------------------------------------

    def letter_index(self, name: str) -> int:
        """1-based letter value of a positive generator."""
        return self.alphabet.index(name) + 1

    def gen(self, name: str, sign: int = 1) -> Word:
        return Word(self.alphabet, [sign * self.letter_index(name)])

    def word(self, text: str) -> Word:
        return parse_word(self.alphabet, text)

    @property
    def empty_word(self) -> Word:
        return Word(self.alphabet)

    def generator_kind(self, letter: int) -> str:
        return _parse_name(self.alphabet[abs(letter) - 1])[0]

    def gamma_a_generators(self) -> list[Word]:
        """Generating set of the A-side free factor, as words."""
        return [self.gen(f"a{i}") for i in range(1, self.size_a + 1)] + [
            self.gen(f"al{i}") for i in range(1, self.size_a + 1)
        ]

    def gamma_b_letters(self) -> list[int]:
        return list(range(2 * self.size_a + 1, self.n_generators + 1))

    def amalgam_a_word(self) -> Word:
        """The amalgamated Z written on the A side: prod_i [a_i, al_i]."""
        letters: list[int] = []
        for i in range(self.size_a):
            letters += _commutator(2 * i + 1, 2 * i + 2)
        return Word(self.alphabet, letters)

    def amalgam_b_word(self) -> Word:
        """The amalgamated Z written on the B side: prod_j [b_j, be_j]."""
        letters: list[int] = []
        for j in range(self.size_b):
            base = 2 * self.size_a + 2 * j
            letters += _commutator(base + 1, base + 2)
        return Word(self.alphabet, letters)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {"type": "orientable", "sizeA": self.size_a, "sizeB": self.size_b}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SurfacePresentation)
            and other.size_a == self.size_a
            and other.size_b == self.size_b
        )

    def __hash__(self) -> int:
        return hash(("orientable", self.size_a, self.size_b))

    def __repr__(self) -> str:
        return f"SurfacePresentation(size_a={self.size_a}, size_b={self.size_b})"


class NonOrientablePresentation:
    """``< x_1 .. x_g | x_1^2 .. x_g^2 >`` for genus g >= 3."""

    kind = "nonorientable"

    def __init__(self, genus: int):
        if genus < 3:
            raise ValueError(
                "non-orientable genus must be >= 3 (projective plane and "
                "Klein bottle are amenable and not supported)"
            )
        self.genus = genus
        self.alphabet: tuple[str, ...] = tuple(f"x{i}" for i in range(1, genus + 1))
        self.n_generators = genus
        letters: list[int] = []
        for i in range(1, genus + 1):
            letters += [i, i]
        self.relator = Word(self.alphabet, letters)
        self._dehn: _DehnReducer | None = None

    def letter_index(self, name: str) -> int:
        return self.alphabet.index(name) + 1

    def gen(self, name: str, sign: int = 1) -> Word:
        return Word(self.alphabet, [sign * self.letter_index(name)])

    def word(self, text: str) -> Word:
        return parse_word(self.alphabet, text)

    @property
    def empty_word(self) -> Word:
        return Word(self.alphabet)

    def parity(self, w: Word) -> int:
        """Total exponent mod 2; the orientation kernel is parity 0."""
        return len(w.letters) % 2

    def to_json_dict(self) -> dict:
        return {"type": "nonorientable", "genus": self.genus}

    def __eq__(self, other) -> bool:
        return isinstance(other, NonOrientablePresentation) and other.genus == self.genus

    def __hash__(self) -> int:
        return hash(("nonorientable", self.genus))

    def __repr__(self) -> str:
        return f"NonOrientablePresentation(genus={self.genus})"


Presentation = SurfacePresentation | NonOrientablePresentation


def presentation_from_json(data: dict | str) -> Presentation:
    if isinstance(data, str):
        data = json.loads(data)
    if data["type"] == "orientable":
        return SurfacePresentation(data["sizeA"], data["sizeB"])
    if data["type"] == "nonorientable":
        return NonOrientablePresentation(data["genus"])
    raise ValueError(f"unknown presentation type {data['type']!r}")


# ---------------------------------------------------------------------------
# Dehn's algorithm
# ---------------------------------------------------------------------------


class _DehnReducer:
    """Dehn reduction against one relator.

    Replaces any subword matching more than half of a cyclic rotation of R or
    R^-1 by the shorter complement, scanning longest matches first and
    breaking ties by earliest position.  Sound as a word-problem decision
    procedure when max_piece / |R| < 1/6 (then Greendlinger's lemma
    guarantees a subword longer than |R|/2 in any nonempty reduced word
    representing the identity).
    """

    def __init__(self, alphabet: tuple[str, ...], relator: Word):
        self.alphabet = alphabet
        self.relator = relator
        length = len(relator)
        rotations: list[tuple[int, ...]] = []
        for base in (relator.letters, relator.inverse().letters):
            for s in range(length):
                rotations.append(base[s:] + base[:s])
        self.rotations = rotations
        self.max_piece = self._max_piece()
        self.small_cancellation = self.max_piece * 6 < length
        # match tables: subword -> replacement, one dict per match length
        half = length // 2
        self.tables: dict[int, dict[tuple[int, ...], tuple[int, ...]]] = {}
        for ell in range(half + 1, length + 1):
            table: dict[tuple[int, ...], tuple[int, ...]] = {}
            for rot in rotations:
                head, tail = rot[:ell], rot[ell:]
                # rot = 1 in the group, so head = tail^-1
                table[head] = tuple(-l for l in reversed(tail))
            self.tables[ell] = table

    def _max_piece(self) -> int:
        best = 0
        rots = self.rotations
        for i in range(len(rots)):
            for j in range(i + 1, len(rots)):
                u, v = rots[i], rots[j]
                k = 0
                while k < len(u) and u[k] == v[k]:
                    k += 1
                best = max(best, k)
        return best

    def reduce(self, w: Word) -> Word:
        length = len(self.relator)
        half = length // 2
        letters = list(w.letters)
        while True:
            found = None
            top = min(length, len(letters))
            for ell in range(top, half, -1):
                table = self.tables[ell]
                for pos in range(len(letters) - ell + 1):
                    if tuple(letters[pos : pos + ell]) in table:
                        found = (ell, pos)
                        break
                if found:
                    break
            if not found:
                return Word(self.alphabet, letters)
            ell, pos = found
            repl = self.tables[ell][tuple(letters[pos : pos + ell])]
            letters = list(
                Word(self.alphabet, letters[:pos] + list(repl) + letters[pos + ell :]).letters
            )


def _dehn_reducer(pres: Presentation) -> _DehnReducer:
    if pres._dehn is None:
        pres._dehn = _DehnReducer(pres.alphabet, pres.relator)
    return pres._dehn


def dehn_is_trivial(pres: Presentation, w: Word) -> tuple[bool, Word]:
    """Decide the word problem; returns (is_trivial, fully reduced witness).

    The witness is empty exactly when the word represents the identity.
    Non-orientable genus 3 (max piece = |R|/6) is decided in the orientation
    double cover: odd-parity words are nontrivial, even ones are rewritten
    into the genus-2 orientable subgroup and decided there.
    """
    if w.alphabet != pres.alphabet:
        raise ForeignGenerators("word is not over this presentation's alphabet")
    reducer = _dehn_reducer(pres)
    if reducer.small_cancellation:
        witness = reducer.reduce(w)
        return (len(witness) == 0, witness)
    if isinstance(pres, NonOrientablePresentation) and pres.genus == 3:
        from . import induction  # deferred: induction imports this module

        if pres.parity(w) == 1:
            return (False, w)
        ed = induction.orientation_double_cover(pres.genus)
        trivial, _ = dehn_is_trivial(ed.base, ed.rewrite_even(w))
        return (trivial, pres.empty_word if trivial else w)
    raise PresentationUnsupported(
        f"no decision route for {pres!r} (max piece {reducer.max_piece} of "
        f"relator length {len(pres.relator)})"
    )


# ---------------------------------------------------------------------------
# erasing morphisms, the b1-exponent map, amalgam membership
# ---------------------------------------------------------------------------


def erased_presentation(
    pres: SurfacePresentation, keep_a: Sequence[int], keep_b: Sequence[int]
) -> SurfacePresentation:
    if not keep_a or not keep_b:
        raise EmptyTarget("erasing must keep at least one index on each side")
    return SurfacePresentation(len(keep_a), len(keep_b))


def erase(
    pres: SurfacePresentation,
    keep_a: Sequence[int],
    keep_b: Sequence[int],
    w: Word,
) -> Word:
    """Apply the morphism that erases all generators outside keep_a/keep_b.

    Kept generators map to the correspondingly reindexed generators of the
    smaller presentation; erased ones map to the empty word.  Erasing the
    relator yields the relator of the target presentation.
    """
    target = erased_presentation(pres, keep_a, keep_b)
    if w.alphabet != pres.alphabet:
        raise ForeignGenerators("word is not over this presentation's alphabet")
    keep_a = sorted(set(keep_a))
    keep_b = sorted(set(keep_b))
    if keep_a[0] < 1 or keep_a[-1] > pres.size_a or keep_b[0] < 1 or keep_b[-1] > pres.size_b:
        raise ValueError("keep sets must be subsets of the A/B index ranges")
    mapping: dict[int, int] = {}
    for new_i, old_i in enumerate(keep_a, start=1):
        mapping[2 * (old_i - 1) + 1] = 2 * (new_i - 1) + 1
        mapping[2 * (old_i - 1) + 2] = 2 * (new_i - 1) + 2
    for new_j, old_j in enumerate(keep_b, start=1):
        mapping[2 * pres.size_a + 2 * (old_j - 1) + 1] = 2 * len(keep_a) + 2 * (new_j - 1) + 1
        mapping[2 * pres.size_a + 2 * (old_j - 1) + 2] = 2 * len(keep_a) + 2 * (new_j - 1) + 2
    letters: list[int] = []
    for letter in w.letters:
        image = mapping.get(abs(letter))
        if image is not None:
            letters.append(image if letter > 0 else -image)
    return Word(target.alphabet, letters)


def phi(pres: SurfacePresentation, w: Word) -> int:
    """Signed exponent sum of b1; a homomorphism onto Z killing all else."""
    if w.alphabet != pres.alphabet:
        raise ForeignGenerators("word is not over this presentation's alphabet")
    b = pres.b_j0
    return sum(1 if l == b else -1 for l in w.letters if abs(l) == b)


def boundary_closure_member(pres: SurfacePresentation, w: Word) -> bool:
    """Membership in the normal closure of the amalgamated Z inside the
    B-side free factor.

    Decided in the one-relator quotient ``< (b_j, be_j) | prod [b_j, be_j] >``:
    for |B| = 1 that group is Z^2 and exponent sums decide; for |B| >= 2 it
    is a surface group and Dehn's algorithm decides.
    """
    if w.alphabet != pres.alphabet:
        raise ForeignGenerators("word is not over this presentation's alphabet")
    b_letters = set(pres.gamma_b_letters())
    if any(abs(l) not in b_letters for l in w.letters):
        raise ForeignGenerators("word mentions A-side generators")
    if pres.size_b == 1:
        b = pres.b_j0
        eb = sum(1 if l == b else -1 for l in w.letters if abs(l) == b)
        ebe = sum(1 if l == b + 1 else -1 for l in w.letters if abs(l) == b + 1)
        return eb == 0 and ebe == 0
    quotient = _b_side_quotient(pres)
    shift = 2 * pres.size_a
    image = Word(quotient.alphabet, [l - shift if l > 0 else l + shift for l in w.letters])
    trivial, _ = _quotient_dehn_trivial(quotient, image)
    return trivial


class _OneRelatorQuotient:
    """Alphabet plus relator for the B-side quotient; feeds the Dehn reducer."""

    def __init__(self, alphabet: tuple[str, ...], relator_letters: list[int]):
        self.alphabet = alphabet
        self.relator = Word(alphabet, relator_letters)
        self._dehn: _DehnReducer | None = None


_B_QUOTIENTS: dict[int, _OneRelatorQuotient] = {}


def _b_side_quotient(pres: SurfacePresentation) -> _OneRelatorQuotient:
    q = _B_QUOTIENTS.get(pres.size_b)
    if q is None:
        names: list[str] = []
        for j in range(1, pres.size_b + 1):
            names += [f"b{j}", f"be{j}"]
        letters: list[int] = []
        for j in range(pres.size_b):
            letters += _commutator(2 * j + 1, 2 * j + 2)
        q = _OneRelatorQuotient(tuple(names), letters)
        _B_QUOTIENTS[pres.size_b] = q
    return q


def _quotient_dehn_trivial(q: _OneRelatorQuotient, w: Word) -> tuple[bool, Word]:
    if q._dehn is None:
        q._dehn = _DehnReducer(q.alphabet, q.relator)
        assert q._dehn.small_cancellation
    witness = q._dehn.reduce(w)
    return (len(witness) == 0, witness)


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------


def reduced_words(
    alphabet: tuple[str, ...],
    max_length: int,
    letters: Sequence[int] | None = None,
) -> Iterator[Word]:
    """All freely reduced words of length 1..max_length in length-lex order.

    ``letters`` restricts the alphabet to a subset of positive letter values
    (their inverses are included automatically).  The letter order is
    ``g1 < g1^-1 < g2 < g2^-1 < ...``.
    """
    pool = letters if letters is not None else range(1, len(alphabet) + 1)
    ordered: list[int] = []
    for g in sorted(pool):
        ordered += [g, -g]
    for length in range(1, max_length + 1):

        def extend(prefix: list[int]) -> Iterator[list[int]]:
            if len(prefix) == length:
                yield prefix
                return
            for letter in ordered:
                if prefix and prefix[-1] == -letter:
                    continue
                yield from extend(prefix + [letter])

        for seq in extend([]):
            yield Word(alphabet, seq)


def enumerate_nontrivial(pres: Presentation, max_length: int) -> Iterator[Word]:
    """Stream of Dehn-nontrivial reduced words, length-lexicographic.

    Distinct words representing equal group elements both appear; the chain
    construction only needs every element to be hit eventually, so no
    normal-form deduplication is attempted.
    """
    for w in reduced_words(pres.alphabet, max_length):
        trivial, _ = dehn_is_trivial(pres, w)
        if not trivial:
            yield w


def enumerate_deltas(pres: SurfacePresentation, max_length: int) -> Iterator[Word]:
    """B-side words outside the normal closure of the amalgamated Z."""
    for w in reduced_words(pres.alphabet, max_length, pres.gamma_b_letters()):
        if not boundary_closure_member(pres, w):
            yield w
