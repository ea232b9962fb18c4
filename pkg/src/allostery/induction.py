"""The non-orientable case: orientation double cover and induced actions.

A non-orientable group < x_1..x_g | x_1^2..x_g^2 > (g >= 3) contains the
orientable genus g-1 group as its index-two orientation subgroup, the kernel
of the parity map x_i -> 1 in Z/2.  With transversal {1, sigma} for
sigma = x_1, Reidemeister-Schreier rewriting produces Schreier generators

    u_i = x_i x_1^-1,   v_i = x_1 x_i   (i = 2..g),   v_1 = x_1^2,

and the two lifted relators reduce, after eliminating v_1, to the standard
split surface relation

    [v_2^-1, u_2^-1] = C_{g-1} [u_g, v_g] C_{g-1}^-1 * ... * [u_3, v_3],

with C_m = (u_3 v_3)..(u_m v_m) = x_3^2..x_m^2.  Matching sides gives an
explicit isomorphism from the split presentation with |A| = 1, |B| = g - 2
onto the orientation subgroup.  The emitted word tables are validated by
``verify_embedding``; induction of a base action doubles the degree, with
odd-parity elements switching the two sheets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import covers
from .actions import PointedAction, verify_action
from .errors import ForeignGenerators, RelatorFailure
from .words import NonOrientablePresentation, SurfacePresentation, Word, dehn_is_trivial


@dataclass
class EmbeddingData:
    """Word tables realizing the index-two embedding.

    ``images`` sends each generator of the split orientable presentation to
    an even word over the x-generators.  ``schreier_words`` sends each
    Schreier letter (``u2..ug, v1..vg``) to a word over the base generators;
    it drives ``rewrite_even``.  ``conjugation`` holds, per x-generator and
    sheet bit, the base word for sigma^-(eps xor 1) x sigma^eps, which is
    exactly the point map a generator applies on that sheet of an induced
    action.
    """

    gprime: NonOrientablePresentation
    base: SurfacePresentation
    sigma: str
    parity: dict[str, int]
    images: dict[str, Word]
    schreier_words: dict[str, Word]
    conjugation: dict[tuple[str, int], Word]

    def x_word(self, text: str) -> Word:
        return self.gprime.word(text)

    def rewrite_even(self, w: Word) -> Word:
        """Rewrite an even word over the x-generators into the base group.

        Reidemeister-Schreier: scanning left to right with running prefix
        parity e, letter x_i contributes u_i (e=0) or v_i (e=1), and x_i^-1
        contributes v_i^-1 (e=0) or u_i^-1 (e=1); u_1 is trivial.  The
        concatenation equals w by telescoping, and each Schreier letter is
        replaced by its base-word expression.
        """
        if w.alphabet != self.gprime.alphabet:
            raise ForeignGenerators("word is not over the non-orientable alphabet")
        if len(w.letters) % 2 != 0:
            raise ValueError("only even-parity words lie in the orientation subgroup")
        out = self.base.empty_word
        e = 0
        for letter in w.letters:
            i = abs(letter)
            if letter > 0:
                name = f"u{i}" if e == 0 else f"v{i}"
                piece = self.schreier_words[name]
            else:
                name = f"v{i}" if e == 0 else f"u{i}"
                piece = self.schreier_words[name].inverse()
            out = out * piece
            e ^= 1
        return out

    def conjugated_a_side_words(self) -> list[Word]:
        """Base words for sigma^-1 (A-side generator image) sigma."""
        sigma = self.gprime.gen(self.sigma)
        out = []
        for name in [f"a{i}" for i in range(1, self.base.size_a + 1)] + [
            f"al{i}" for i in range(1, self.base.size_a + 1)
        ]:
            conjugated = sigma.inverse() * self.images[name] * sigma
            out.append(self.rewrite_even(conjugated))
        return out


def _schreier_generator(gprime: NonOrientablePresentation, name: str) -> Word:
    """u_i = x_i x_1^-1, v_i = x_1 x_i as words over the x-generators."""
    kind, i = name[0], int(name[1:])
    x1 = gprime.letter_index("x1")
    xi = gprime.letter_index(f"x{i}")
    if kind == "u":
        return Word(gprime.alphabet, [xi, -x1])
    return Word(gprime.alphabet, [x1, xi])


def orientation_double_cover(genus: int) -> EmbeddingData:
    """Standard embedding tables for non-orientable genus g >= 3.

    The orientable subgroup presentation has |A| = 1, |B| = g - 2 (genus
    g - 1: the Euler characteristic doubles along the cover).
    """
    gprime = NonOrientablePresentation(genus)
    base = SurfacePresentation(1, genus - 2)
    parity = {name: 1 for name in gprime.alphabet}

    # base-side words for the Schreier letters
    schreier_words: dict[str, Word] = {
        "u1": base.empty_word,
        "u2": base.gen("al1", -1),
        "v2": base.gen("a1", -1),
    }
    c = base.empty_word  # C_2
    for k in range(3, genus + 1):
        j = genus + 1 - k
        schreier_words[f"u{k}"] = c.inverse() * base.gen(f"b{j}") * c
        schreier_words[f"v{k}"] = c.inverse() * base.gen(f"be{j}") * c
        c = c * schreier_words[f"u{k}"] * schreier_words[f"v{k}"]
    product = base.empty_word
    for k in range(2, genus + 1):
        product = product * schreier_words[f"u{k}"] * schreier_words[f"v{k}"]
    schreier_words["v1"] = product.inverse()

    # x-side words for the base generators (invert the change of generators)
    images: dict[str, Word] = {
        "a1": _schreier_generator(gprime, "v2").inverse(),
        "al1": _schreier_generator(gprime, "u2").inverse(),
    }
    c_x = gprime.empty_word
    for k in range(3, genus + 1):
        j = genus + 1 - k
        images[f"b{j}"] = c_x * _schreier_generator(gprime, f"u{k}") * c_x.inverse()
        images[f"be{j}"] = c_x * _schreier_generator(gprime, f"v{k}") * c_x.inverse()
        c_x = c_x * _schreier_generator(gprime, f"u{k}") * _schreier_generator(gprime, f"v{k}")

    ed = EmbeddingData(
        gprime=gprime,
        base=base,
        sigma="x1",
        parity=parity,
        images=images,
        schreier_words=schreier_words,
        conjugation={},
    )
    sigma = gprime.gen("x1")
    for name in gprime.alphabet:
        x = gprime.gen(name)
        ed.conjugation[(name, 0)] = ed.rewrite_even(sigma.inverse() * x)
        ed.conjugation[(name, 1)] = ed.rewrite_even(x * sigma)
    return ed


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


@dataclass
class EmbeddingReport:
    ok: bool
    failures: list[dict] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {"ok": self.ok, "failures": self.failures}


def _substitute(ed: EmbeddingData, w: Word) -> Word:
    """Image of a base word under the embedding, as an x-word."""
    out = ed.gprime.empty_word
    for letter in w.letters:
        name = ed.base.alphabet[abs(letter) - 1]
        piece = ed.images[name]
        out = out * (piece if letter > 0 else piece.inverse())
    return out


def _battery(ed: EmbeddingData, seed: int) -> list[PointedAction]:
    """Verified finite quotients of the non-orientable group.

    Cyclic quotients x_i -> +1 on Z/d need d | 2g (the relator maps to 2g);
    cocycle covers over them supply non-abelian p-group extensions.
    """
    g = ed.gprime.genus
    quotients: list[PointedAction] = []
    for d in sorted({2, 2 * g}):
        perms = np.tile((np.arange(d, dtype=np.int64) + 1) % d, (g, 1))
        act = PointedAction(ed.gprime, perms, 0, {"kind": "cyclic-all", "d": d})
        assert verify_action(act).ok
        quotients.append(act)
    extended: list[PointedAction] = []
    for idx, act in enumerate(quotients):
        for p in (2, 3):
            tower = covers.iterated_cocycle_tower(
                act, p, rank=1, levels=1, seed=seed + 31 * idx + p, degree_cap=10_000
            )
            extended.append(tower[-1])
    return quotients + extended


def verify_embedding(ed: EmbeddingData, seed: int = 0) -> EmbeddingReport:
    """Three-stage check of the word tables.

    (a) symbolic: image words have even parity; the Schreier-letter tables
        invert each other as free words; the rewritten relator at coset 0
        freely equals the non-orientable relator.
    (b) quotient battery: the substituted base relator acts trivially in a
        family of verified finite quotients (refutation-sound), and by
        Dehn's algorithm directly when the genus admits it.
    (c) induction: sample base actions induce to verified actions whose
        sheet-0 restriction reproduces the base action.
    """
    failures: list[dict] = []
    g = ed.gprime.genus

    for name, w in ed.images.items():
        if len(w.letters) % 2 != 0:
            failures.append({"stage": "a", "identity": f"parity of images[{name}]"})
    for k in range(2, g + 1):
        for kind in "uv":
            name = f"{kind}{k}"
            got = _substitute(ed, ed.schreier_words[name])
            if got != _schreier_generator(ed.gprime, name):
                failures.append({"stage": "a", "identity": f"images(W[{name}]) != {name}"})
    rewritten = _substitute(ed, ed.schreier_words["v1"])
    expected = ed.gprime.empty_word
    for k in range(2, g + 1):
        expected = (
            expected
            * _schreier_generator(ed.gprime, f"u{k}")
            * _schreier_generator(ed.gprime, f"v{k}")
        )
    if rewritten != expected.inverse():
        failures.append({"stage": "a", "identity": "images(W[v1]) != (u2 v2 .. ug vg)^-1"})
    x1 = ed.gprime.letter_index("x1")
    relator_at_0 = Word(ed.gprime.alphabet, [x1, x1]) * expected
    if relator_at_0 != ed.gprime.relator:
        failures.append({"stage": "a", "identity": "rewritten relator at coset 0"})

    substituted = _substitute(ed, ed.base.relator)
    if len(substituted.letters) % 2 != 0:
        failures.append({"stage": "b", "identity": "parity of substituted relator"})
    from .words import _DehnReducer

    reducer_ok = _DehnReducer(ed.gprime.alphabet, ed.gprime.relator).small_cancellation
    if reducer_ok:
        trivial, _ = dehn_is_trivial(ed.gprime, substituted)
        if not trivial:
            failures.append({"stage": "b", "identity": "substituted relator (Dehn)"})
    for act in _battery(ed, seed):
        images = act.word_images(substituted)
        if not np.array_equal(images, np.arange(act.degree)):
            failures.append(
                {
                    "stage": "b",
                    "identity": "substituted relator",
                    "quotient": act.meta,
                }
            )

    samples = [
        PointedAction(ed.base, np.zeros((ed.base.n_generators, 1), dtype=np.int64)),
        covers.cyclic_cover(ed.base, 2),
        covers.cyclic_cover(ed.base, 3),
    ]
    for sample in samples:
        try:
            induce(sample, ed)
        except RelatorFailure as exc:
            failures.append({"stage": "c", "identity": str(exc), "degree": sample.degree})
    return EmbeddingReport(ok=not failures, failures=failures)


# ---------------------------------------------------------------------------
# induction
# ---------------------------------------------------------------------------


def induce(act: PointedAction, ed: EmbeddingData) -> PointedAction:
    """Induce a base action to the non-orientable group on twice the points.

    Point (x, eps) is stored as x + eps*degree.  A generator y sends it to
    (w . x, eps xor parity(y)) with w the conjugation word for (y, eps);
    composing letters telescopes to sigma^-(eps xor parity) * word * sigma^eps,
    so sheet 0 carries the base action itself and parity-1 generators switch
    the sheets.
    """
    if act.pres != ed.base:
        raise ValueError("action is not over the embedding's base presentation")
    n = act.degree
    perms = np.empty((ed.gprime.n_generators, 2 * n), dtype=np.int64)
    for k, name in enumerate(ed.gprime.alphabet):
        par = ed.parity[name]
        for eps in (0, 1):
            w = ed.conjugation[(name, eps)]
            images = act.word_images(w)
            target = eps ^ par
            perms[k, eps * n : (eps + 1) * n] = images + target * n
    induced = PointedAction(
        ed.gprime,
        perms,
        act.basepoint,
        {"component": "induced", "base": dict(act.meta), "base_degree": n},
    )
    rng = np.arange(2 * n, dtype=np.int64)
    if not np.array_equal(induced.word_images(ed.gprime.relator), rng):
        raise RelatorFailure("induced action violates the relator; embedding data is bad")
    for name in ed.base.alphabet:
        images = induced.word_images(_substitute(ed, ed.base.gen(name)))
        base_images = act.perms[ed.base.letter_index(name) - 1]
        if not np.array_equal(images[:n], base_images):
            raise RelatorFailure(f"sheet-0 restriction differs from the base action at {name}")
    return induced


def induced_gamma_a_measure(
    chain, ed: EmbeddingData, level: int
) -> tuple[Fraction, tuple[Fraction, Fraction]]:
    """Exact induced A-side measure (t_n + c_n) / 2 with its decomposition.

    t_n is the base cylinder measure of the A-side generators, c_n the
    cylinder measure of their sigma-conjugates; sheet 0 contributes t_n,
    sheet 1 contributes c_n, each over half the induced mass.  The c_n trend
    along the chain is reported, never extrapolated.
    """
    from .analysis import cylinder_measure

    if chain.pres != ed.base:
        raise ValueError("chain is not over the embedding's base presentation")
    gens = chain.pres.gamma_a_generators()
    t_n = cylinder_measure(chain, gens, [], level)
    conj = ed.conjugated_a_side_words()
    c_n = cylinder_measure(chain, conj, [], level)
    return (t_n + c_n) / 2, (t_n, c_n)
