import random

import numpy as np
import pytest

from allostery import (
    PointedAction,
    SurfacePresentation,
    Word,
    canonical_serialize,
    cyclic_cover,
    fix_all,
    fix_set,
    homology,
    load_action,
    product_intersection,
    quotient_map,
    save_action,
    search_separation,
    cocycle_cover,
    trivial_action,
    verify_action,
)
from allostery.errors import ForeignGenerators, NotAQuotient, PresentationMismatch


@pytest.fixture(scope="module")
def sample_action(pres2):
    """A degree-27 cocycle cover; non-abelian enough for covariance tests."""
    base = cyclic_cover(pres2, 3)
    hd = homology(base, 3, [])
    sm = search_separation(hd, [pres2.word("a1"), pres2.word("be1")], seed=11)
    return cocycle_cover(base, hd, sm)


class TestVerify:
    def test_cyclic_cover_passes(self, pres2):
        report = verify_action(cyclic_cover(pres2, 3))
        assert report.ok and report.degree == 3

    def test_non_bijection_flagged(self, pres2):
        perms = np.zeros((4, 3), dtype=np.int64)
        perms[:] = np.arange(3)
        perms[2] = [0, 0, 2]  # b1 not a bijection
        report = verify_action(PointedAction(pres2, perms))
        assert not report.ok
        assert any(f["axiom"] == "bijection" and f["generator"] == "b1" for f in report.failures)

    def test_intransitive_union_flagged(self, pres2):
        c2 = cyclic_cover(pres2, 2)
        perms = np.zeros((4, 4), dtype=np.int64)
        for k in range(4):
            perms[k, :2] = c2.perms[k]
            perms[k, 2:] = c2.perms[k] + 2
        report = verify_action(PointedAction(pres2, perms))
        assert not report.ok
        failure = next(f for f in report.failures if f["axiom"] == "transitivity")
        assert len(failure["orbit_representatives"]) == 2

    def test_relator_failure_has_witness_point(self, pres2):
        perms = np.zeros((4, 3), dtype=np.int64)
        perms[:] = np.arange(3)
        perms[0] = [1, 2, 0]  # a1 shifts: relator no longer trivial? it is...
        # a1 shift commutes with everything here, so relator still acts
        # trivially; break it with a non-commuting pair instead
        perms[1] = [0, 2, 1]
        report = verify_action(PointedAction(pres2, perms))
        assert not report.ok
        assert any(f["axiom"] == "relator" for f in report.failures)


class TestActAndFix:
    def test_shift_facts(self, pres2):
        cover = cyclic_cover(pres2, 3)
        b = pres2.word("b1")
        assert cover.act(b, 0) == 1
        assert cover.act(b * b * b, 0) == 0
        assert list(fix_set(cover, b)) == []
        assert list(fix_set(cover, pres2.word("a1"))) == [0, 1, 2]

    def test_gamma_a_fixes_everything_on_cyclic(self, pres2):
        cover = cyclic_cover(pres2, 5)
        assert list(fix_all(cover, pres2.gamma_a_generators())) == list(range(5))

    def test_foreign_word_rejected(self, pres2, pres3):
        cover = cyclic_cover(pres2, 3)
        with pytest.raises(ForeignGenerators):
            cover.act(pres3.word("a1"), 0)

    def test_conjugation_covariance(self, pres2, sample_action):
        # Fix(g w g^-1) = g . Fix(w)
        rng = random.Random(5)
        letters = lambda k: [rng.choice([1, -1]) * rng.randrange(1, 5) for _ in range(k)]
        for _ in range(25):
            g = Word(pres2.alphabet, letters(4))
            w = Word(pres2.alphabet, letters(6))
            lhs = set(fix_set(sample_action, w.conjugated_by(g)))
            rhs = {sample_action.act(g, int(x)) for x in fix_set(sample_action, w)}
            assert lhs == rhs

    def test_fix_all_monotone(self, pres2, sample_action):
        words = [pres2.word(t) for t in ("a1", "al1", "b1 a1 b1^-1")]
        sizes = [fix_all(sample_action, words[:k]).size for k in range(len(words) + 1)]
        assert all(a >= b for a, b in zip(sizes, sizes[1:]))


class TestProduct:
    def test_coprime_covers(self, pres2):
        prod = product_intersection(cyclic_cover(pres2, 2), cyclic_cover(pres2, 3))
        assert prod.degree == 6
        assert verify_action(prod).ok

    def test_same_cover_twice_is_diagonal(self, pres2):
        c2 = cyclic_cover(pres2, 2)
        assert product_intersection(c2, c2).degree == 2

    def test_product_with_trivial(self, pres2):
        c3 = cyclic_cover(pres2, 3)
        prod = product_intersection(c3, trivial_action(pres2))
        assert canonical_serialize(prod) == canonical_serialize(c3)

    def test_degree_divides_product_exhaustive(self, pres2):
        for d1 in range(2, 8):
            for d2 in range(2, 8):
                prod = product_intersection(cyclic_cover(pres2, d1), cyclic_cover(pres2, d2))
                assert (d1 * d2) % prod.degree == 0
                if np.gcd(d1, d2) == 1:
                    assert prod.degree == d1 * d2

    def test_mismatched_presentations(self, pres2, pres3):
        with pytest.raises(PresentationMismatch):
            product_intersection(cyclic_cover(pres2, 2), cyclic_cover(pres3, 2))


class TestQuotient:
    def test_product_onto_factor(self, pres2):
        c2, c3 = cyclic_cover(pres2, 2), cyclic_cover(pres2, 3)
        prod = product_intersection(c2, c3)
        image = quotient_map(prod, c2)
        assert sorted(np.bincount(image)) == [3, 3]

    def test_identity_map(self, pres2):
        c3 = cyclic_cover(pres2, 3)
        assert list(quotient_map(c3, c3)) == [0, 1, 2]

    def test_not_a_quotient_with_witness(self, pres2):
        c2, c3 = cyclic_cover(pres2, 2), cyclic_cover(pres2, 3)
        with pytest.raises(NotAQuotient) as exc_info:
            quotient_map(c2, c3)
        witness = exc_info.value.witness
        assert witness is not None
        assert c2.act(witness, 0) == 0
        assert c3.act(witness, 0) != 0

    def test_equivariance_exhaustive(self, pres2):
        prod = product_intersection(cyclic_cover(pres2, 2), cyclic_cover(pres2, 3))
        c2 = cyclic_cover(pres2, 2)
        image = quotient_map(prod, c2)
        for k in range(4):
            assert np.array_equal(image[prod.perms[k]], c2.perms[k][image])


class TestCanonical:
    def test_deterministic(self, pres2):
        c2 = cyclic_cover(pres2, 2)
        assert canonical_serialize(c2) == canonical_serialize(c2)

    def test_relabeling_invariant(self, pres2):
        c3 = cyclic_cover(pres2, 3)
        relabel = np.array([2, 0, 1])
        inverse = np.argsort(relabel)
        perms = relabel[c3.perms[:, inverse]]
        shuffled = PointedAction(pres2, perms, basepoint=int(relabel[0]))
        assert canonical_serialize(shuffled) == canonical_serialize(c3)

    def test_distinct_subgroups_differ(self, pres2):
        a = canonical_serialize(cyclic_cover(pres2, 2))
        b = canonical_serialize(cyclic_cover(pres2, 3))
        assert a != b

    def test_save_load_roundtrip_both_forms(self, pres2, tmp_path, sample_action):
        embedded = tmp_path / "embedded.json"
        sidecar = tmp_path / "sidecar.json"
        save_action(sample_action, str(embedded))
        save_action(sample_action, str(sidecar), sidecar_threshold=1)
        assert (tmp_path / "sidecar.bin").exists()
        a = load_action(str(embedded))
        b = load_action(str(sidecar))
        assert canonical_serialize(a) == canonical_serialize(b) == canonical_serialize(sample_action)
        assert verify_action(b).ok
