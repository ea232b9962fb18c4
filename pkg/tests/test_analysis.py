import random
from fractions import Fraction

import pytest

from allostery import (
    BuildConfig,
    SurfacePresentation,
    Word,
    build_chain,
    build_lambda,
    compare_chains,
    cylinder_measure,
    cyclic_cover,
    fix_proportion,
    proportion_series,
    stabilizer_ball,
    urs_certificate,
)
from allostery.analysis import worker_count
from allostery.construction import Chain, ChainLevel


def _single_level_chain(pres, p, r, gamma, delta, seed):
    act, cert = build_lambda(pres, p, r, gamma, delta, BuildConfig(seed=seed))
    chain = Chain(pres=pres, t=r, primes=[p], depth=1, config=BuildConfig(seed=seed))
    chain.levels.append(
        ChainLevel(
            n=1, p=p, rate=r, t_partial=r, gamma=gamma, delta=delta,
            lam=act, certificate=cert, action=act,
        )
    )
    return chain


@pytest.fixture(scope="module")
def depth_one_chain(pres2):
    return _single_level_chain(
        pres2, 3, Fraction(5, 9), pres2.word("a1"), pres2.word("b1"), seed=7
    )


class TestFixProportion:
    def test_b1_free_everywhere(self, pres2, chain_half):
        for level in (1, 2):
            assert fix_proportion(chain_half, pres2.word("b1"), level) == 0

    def test_identity_fixes_all(self, pres2, chain_half):
        assert fix_proportion(chain_half, pres2.empty_word, 2) == 1

    def test_a1_at_least_r_on_depth_one(self, pres2, depth_one_chain):
        # the E-fibers are fixed by a1; other points may or may not be
        value = fix_proportion(depth_one_chain, pres2.word("a1"), 1)
        assert value >= Fraction(5, 9)

    def test_monotone_in_level(self, pres2, chain_half):
        words = [pres2.word(t) for t in ("a1", "be1", "a1 al1", "b1 be1 b1^-1")]
        for w in words:
            values = [fix_proportion(chain_half, w, level) for level in (0, 1, 2)]
            assert values[0] >= values[1] >= values[2]


class TestCylinderMeasure:
    def test_gamma_a_equals_rate_product(self, pres2, chain_half):
        gens = pres2.gamma_a_generators()
        assert cylinder_measure(chain_half, gens, [], 1) == Fraction(5, 9)
        assert cylinder_measure(chain_half, gens, [], 2) == Fraction(23, 45)

    def test_empty_sets_full_mass(self, chain_half):
        assert cylinder_measure(chain_half, [], [], 2) == 1

    def test_b1_in_set_kills_mass(self, pres2, chain_half):
        assert cylinder_measure(chain_half, [pres2.word("b1")], [], 1) == 0
        assert cylinder_measure(chain_half, [pres2.word("b1")], [], 2) == 0

    def test_inclusion_exclusion(self, pres2, chain_half):
        rng = random.Random(23)
        pool = [pres2.word(t) for t in ("a1", "al1", "be1", "b1 a1 b1^-1", "a1 al1")]
        for _ in range(10):
            s_in = rng.sample(pool, 2)
            w = rng.choice([x for x in pool if x not in s_in])
            s_out = [w]
            lhs = cylinder_measure(chain_half, s_in, s_out, 2)
            moved_in = cylinder_measure(chain_half, s_in + [w], [], 2)
            total = cylinder_measure(chain_half, s_in, [], 2)
            assert lhs + moved_in == total

    def test_multiplicative_over_coprime_levels(self, pres2, chain_half):
        gens = pres2.gamma_a_generators()
        per_level = []
        for lvl in chain_half.levels:
            fixed = 1
            mask = None
            import numpy as np

            mask = np.ones(lvl.lam.degree, dtype=bool)
            for w in gens:
                mask &= lvl.lam.fixed_mask(w)
            per_level.append(Fraction(int(mask.sum()), lvl.lam.degree))
        assert cylinder_measure(chain_half, gens, [], 2) == per_level[0] * per_level[1]

    def test_worker_count_env(self, monkeypatch):
        monkeypatch.setenv("ALLOSTERY_THREADS", "4")
        assert worker_count() == 4
        monkeypatch.setenv("ALLOSTERY_THREADS", "bogus")
        assert worker_count() == 1

    def test_threaded_count_matches(self, pres2, chain_half, monkeypatch):
        gens = pres2.gamma_a_generators()
        sequential = cylinder_measure(chain_half, gens, [], 2)
        monkeypatch.setenv("ALLOSTERY_THREADS", "3")
        assert cylinder_measure(chain_half, gens, [], 2) == sequential


class TestProportionSeries:
    def test_rows_and_monotone_flag(self, pres2, chain_half):
        gens = pres2.gamma_a_generators()
        series = proportion_series(chain_half, gens, [], [1, 2], wordset_id="gamma_A")
        assert series.monotone
        rows = series.rows()
        assert rows[0][:3] == (1, chain_half.degree(1), "gamma_A")
        assert rows[1][3:5] == (23, 45)


class TestUrsCertificate:
    def test_acceptance_chain_l2(self, chain_half):
        cert = urs_certificate(chain_half, 2, 2)
        assert cert.ok and not cert.failures
        assert len(cert.first_moved) == 8 + 8 * 7

    def test_level_zero_everything_fails(self, pres2, chain_half):
        cert = urs_certificate(chain_half, 1, 0)
        assert [w for w, _ in cert.first_moved] == []
        assert len(cert.failures) == 8

    def test_first_levels_recorded(self, pres2, chain_half):
        cert = urs_certificate(chain_half, 1, 2)
        moved = dict(cert.first_moved)
        assert moved["a1"] == 1
        assert moved["b1"] == 1


class TestStabilizerBall:
    def test_level_zero_is_everything(self, pres2, chain_half):
        ball = stabilizer_ball(chain_half, 0, 2)
        assert len(ball) == 8 + 8 * 7

    def test_monotone_in_level(self, pres2, chain_half):
        balls = [set(map(str, stabilizer_ball(chain_half, level, 3))) for level in (0, 1, 2)]
        assert balls[2] <= balls[1] <= balls[0]

    def test_deep_level_small_ball_empty(self, chain_half):
        # matches the empty-failure triviality certificate at L = 3
        assert stabilizer_ball(chain_half, 2, 3) == []


class TestCompareChains:
    def test_gap_against_distinct_target(self, chain_half, chain_third):
        result = compare_chains(chain_third, chain_half, 2)
        assert result.tails_small
        assert result.gap > Fraction(1, 12)
        assert result.distinct_evidence

    def test_chain_against_itself(self, chain_half):
        result = compare_chains(chain_half, chain_half, 2)
        assert result.gap == 0
        assert not result.distinct_evidence

    def test_same_target_different_primes(self, pres2):
        a = build_chain(pres2, Fraction(1, 2), 1, BuildConfig(seed=7), primes=(3,))
        b = build_chain(pres2, Fraction(1, 2), 1, BuildConfig(seed=7), primes=(5,))
        ma = cylinder_measure(a, pres2.gamma_a_generators(), [], 1)
        mb = cylinder_measure(b, pres2.gamma_a_generators(), [], 1)
        # both within 2^-1 of 1/2, so the gap stays under 2^0
        assert abs(ma - mb) < Fraction(1, 1)
        assert abs(ma - Fraction(1, 2)) < Fraction(1, 2)
        assert abs(mb - Fraction(1, 2)) < Fraction(1, 2)
