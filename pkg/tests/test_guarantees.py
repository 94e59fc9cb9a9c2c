import math

import numpy as np
import pytest

import mbpursuit as mb
from mbpursuit import guarantees as g
from mbpursuit.errors import (
    DegenerateDenominator,
    Infeasible,
    OIRTooLarge,
    RankDeficientSupport,
)

from helpers import (
    gram_schmidt,
    neuman_lhs_bruteforce,
    smallest_d_by_scanning,
    classic_erc_lhs,
    worst_support_lhs,
)


def orthonormal_dictionary(m, n, seed):
    rng = np.random.default_rng(seed)
    return gram_schmidt(rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))


def planted(seed, m, n, K, l, snr_db=None):
    rng = np.random.default_rng(seed)
    A = mb.gaussian_dictionary(m, n, seed)
    support = tuple(sorted(rng.choice(n, size=K, replace=False)))
    X = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(K, l)))
    Y = A.matrix[:, support] @ X
    if snr_db is not None:
        sigma = math.sqrt(10.0 ** (-snr_db / 10.0))
        Y = Y + sigma / math.sqrt(2) * (
            rng.standard_normal(Y.shape) + 1j * rng.standard_normal(Y.shape)
        )
    return A, Y, support


class TestOir:
    @pytest.mark.parametrize("l", [1, 3])
    def test_noiseless_ratio_vanishes_along_correct_chain(self, l):
        for seed in range(15):
            A, Y, support = planted(seed, 10, 16, 3, l)
            for C in [(), support[:1], support[:2]]:
                assert mb.oir(A, Y, support, C).value < 1e-9

    def test_pure_noise_ratio_positive(self):
        rng = np.random.default_rng(0)
        A = mb.gaussian_dictionary(10, 16, 3)
        Y = (rng.standard_normal((10, 3)) + 1j * rng.standard_normal((10, 3))) / math.sqrt(2)
        assert mb.oir(A, Y, (1, 5, 9), ()).value > 0.0

    def test_mode_is_oracle(self):
        A, Y, support = planted(2, 10, 16, 3, 2)
        assert mb.oir(A, Y, support, ()).mode == "oracle"

    def test_degenerate_denominator(self):
        A = np.eye(4, dtype=complex)
        y = np.zeros((4, 1), dtype=complex)
        y[3] = 1.0
        with pytest.raises(DegenerateDenominator):
            mb.oir(A, y, (0, 1), (0,))


class TestMbErc:
    def test_orthonormal_out_support_gives_zero_lhs(self):
        Q = orthonormal_dictionary(10, 6, 0)
        rep = mb.mb_erc(Q, (0, 2, 4), (), 1, 0.0)
        assert rep.lhs < 1e-12
        assert rep.holds
        assert rep.threshold == 1.0

    def test_reduces_to_classic_erc(self):
        for seed in range(20):
            A, _, support = planted(seed, 8, 12, 3, 1)
            rep = mb.mb_erc(A, support, (), 1, 0.0)
            assert abs(rep.lhs - classic_erc_lhs(A.matrix, set(support))) < 1e-12

    def test_lhs_non_increasing_in_d(self):
        A, _, support = planted(3, 8, 12, 3, 1)
        values = [mb.mb_erc(A, support, (), d, 0.0).lhs for d in (1, 2, 3, 4)]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))

    def test_oir_too_large_rejected(self):
        A, _, support = planted(4, 8, 12, 3, 1)
        with pytest.raises(OIRTooLarge):
            mb.mb_erc(A, support, (), 1, 1.0)

    def test_certified_nodes_pick_correct_indices(self):
        """When the condition holds along the correct chain, the tree recovers."""
        certified = 0
        for seed in range(60):
            A, Y, support = planted(seed, 24, 30, 3, 2, snr_db=25)
            d = 2
            try:
                ok = True
                for C in [(), support[:1], support[:2]]:
                    ratio = mb.oir(A, Y, support, C)
                    if ratio.value >= 1.0:
                        ok = False
                        break
                    if not mb.mb_erc(A, support, C, d, ratio).holds:
                        ok = False
                        break
            except (DegenerateDenominator, RankDeficientSupport):
                continue
            if not ok:
                continue
            certified += 1
            res = mb.mbmp(Y, A, [d, d, 1])
            assert res.support == support
        assert certified >= 10


class TestClassicalConditions:
    def test_coherence_condition_cases(self):
        Q = orthonormal_dictionary(10, 6, 1)
        for K in (1, 2, 5):
            assert mb.coherence_condition(Q, K).holds
        dup = np.eye(4, dtype=complex)[:, [0, 1, 2, 0]]
        assert not mb.coherence_condition(dup, 1).holds
        A = mb.gaussian_dictionary(100, 500, 0)
        rep = mb.coherence_condition(A, 3)
        assert rep.lhs == mb.coherence(A)
        assert rep.threshold == 1.0 / 5.0

    def test_cumulative_condition_cases(self):
        Q = orthonormal_dictionary(10, 6, 2)
        rep = mb.cumulative_coherence_condition(Q, 3)
        assert rep.lhs < 1e-12 and rep.holds
        A = mb.gaussian_dictionary(8, 12, 3)
        rep = mb.cumulative_coherence_condition(A, 2)
        from helpers import babel_bruteforce

        expected = babel_bruteforce(A.matrix, 1) + babel_bruteforce(A.matrix, 2)
        assert abs(rep.lhs - expected) < 1e-10

    def test_neuman_cases(self):
        Q = orthonormal_dictionary(10, 6, 3)
        rep = mb.neuman_erc(Q, 2)
        assert abs(rep.lhs - 1.0) < 1e-12 and rep.holds
        A = mb.gaussian_dictionary(8, 12, 4)
        assert abs(mb.neuman_erc(A, 2).lhs - neuman_lhs_bruteforce(A.matrix, 2)) < 1e-10

    def test_implication_chain(self):
        """Coherence => cumulative => worst-support => level-1 multi-branch."""
        dictionaries = [mb.gaussian_dictionary(8, 12, s) for s in range(20)]
        dictionaries += [orthonormal_dictionary(12, 8, s) for s in range(10)]
        dictionaries += [mb.gaussian_dictionary(64, 12, s) for s in range(10)]
        triggered = 0
        for A in dictionaries:
            for K in (2, 3):
                c1 = mb.coherence_condition(A, K)
                c2 = mb.cumulative_coherence_condition(A, K)
                c3 = mb.neuman_erc(A, K)
                c4 = mb.mb_coherence(A, (), K, 1, 0.0)
                if c1.holds:
                    triggered += 1
                    assert c2.holds
                if c2.holds:
                    assert c3.holds
                assert abs(c3.lhs - c4.lhs) < 1e-12
                assert c3.holds == c4.holds
        assert triggered >= 5


class TestMbCoherence:
    def test_orthonormal_dictionary_holds_for_every_d(self):
        Q = orthonormal_dictionary(10, 6, 5)
        for d in (1, 2, 3):
            rep = mb.mb_coherence(Q, (), 3, d, 0.0)
            assert abs(rep.lhs - 1.0) < 1e-12
            assert rep.holds

    def test_lhs_matches_definitional_oracle(self):
        for seed in range(6):
            A = mb.gaussian_dictionary(8, 12, seed)
            for C, K in [((), 2), ((), 3), ((1,), 3)]:
                for d in (1, 2):
                    for oir_value in (0.0, 0.2):
                        rep = mb.mb_coherence(A, C, K, d, oir_value)
                        oracle = worst_support_lhs(A.matrix, C, K, d, oir_value)
                        assert abs(rep.lhs - oracle) < 1e-10

    def test_lhs_non_increasing_in_d(self):
        A = mb.gaussian_dictionary(8, 12, 6)
        values = [mb.mb_coherence(A, (), 2, d, 0.0).lhs for d in range(1, 8)]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))

    def test_descendant_monotonicity(self):
        """A condition met at a node stays met at descendants with wider d."""
        checked = 0
        for seed in range(6):
            A = mb.gaussian_dictionary(96, 60, seed)
            d0 = g.smallest_d_bruteforce(A, (), 3, 0.0)
            if d0 is None or d0 > 5:
                continue
            for c in range(0, 60, 17):
                for d in (d0, d0 + 1):
                    checked += 1
                    assert mb.mb_coherence(A, (c,), 3, d, 0.0).holds
        assert checked >= 8


class TestSmallestD:
    def test_orthonormal_gives_one(self):
        Q = orthonormal_dictionary(10, 6, 7)
        assert g.smallest_d_bruteforce(Q, (), 3, 0.0) == 1
        assert g.smallest_d_mip(Q, (), 3, 0.0) == 1

    def test_matches_definitional_scan(self):
        for seed in range(8):
            A = mb.gaussian_dictionary(8, 12, seed)
            for C, K in [((), 2), ((), 3), ((0,), 3)]:
                for oir_value in (0.0, 0.2):
                    got = g.smallest_d_bruteforce(A, C, K, oir_value)
                    expected = smallest_d_by_scanning(A.matrix, C, K, oir_value)
                    assert got == expected

    def test_monotone_in_energy_ratio(self):
        for seed in range(6):
            A = mb.gaussian_dictionary(8, 12, seed)
            prev = 0
            for oir_value in (0.0, 0.1, 0.3):
                val = g.smallest_d_bruteforce(A, (), 2, oir_value)
                cur = math.inf if val is None else val
                assert cur >= prev
                prev = cur

    def test_mip_equals_bruteforce(self):
        for seed in range(25):
            A = mb.gaussian_dictionary(8, 12, seed)
            for C, K in [((), 2), ((), 3), ((2,), 3)]:
                for oir_value in (0.0, 0.2):
                    assert g.smallest_d_mip(A, C, K, oir_value) == g.smallest_d_bruteforce(
                        A, C, K, oir_value
                    )

    def test_mip_noiseless_matches_level1_condition_boundary(self):
        for seed in range(10):
            A = mb.gaussian_dictionary(96, 60, seed)
            d_star = g.smallest_d_mip(A, (), 3, 0.0, node_budget=10**7)
            if d_star is None:
                assert g.smallest_d_bruteforce(A, (), 3, 0.0) is None
                continue
            assert mb.mb_coherence(A, (), 3, d_star, 0.0).holds
            if d_star > 1:
                assert not mb.mb_coherence(A, (), 3, d_star - 1, 0.0).holds


class TestDesign:
    def test_orthonormal_gives_all_ones(self):
        Q = orthonormal_dictionary(10, 6, 8)
        assert tuple(mb.design_branch_vector(Q, 3)) == (1, 1, 1)
        assert tuple(mb.design_branch_vector(Q, 1)) == (1,)

    def test_per_node_never_wider_than_level1(self):
        A = mb.gaussian_dictionary(96, 60, 0)
        level1 = mb.design_branch_vector(A, 3, strategy="level1_uniform")
        per_node = mb.design_branch_vector(A, 3, strategy="per_node")
        assert all(p <= l for p, l in zip(per_node, level1))
        assert per_node[0] == level1[0]

    def test_infeasible_dictionary_raises(self):
        A = mb.gaussian_dictionary(8, 12, 0)  # far too coherent for K=3
        with pytest.raises(Infeasible):
            mb.design_branch_vector(A, 3)

    def test_methods_agree(self):
        A = mb.gaussian_dictionary(96, 60, 1)
        bf = mb.design_branch_vector(A, 3, method="bruteforce")
        mip = mb.design_branch_vector(A, 3, method="mip")
        assert tuple(bf) == tuple(mip)


class TestCertifiedDesignRecovery:
    def test_certified_designs_recover_every_planted_support(self):
        usable = 0
        for seed in range(30):
            A = mb.gaussian_dictionary(96, 60, seed)
            d1 = g.smallest_d_bruteforce(A, (), 3, 0.0)
            if d1 is None:
                continue
            assert mb.mb_coherence(A, (), 3, d1, 0.0).holds
            usable += 1
            rng = np.random.default_rng(1000 + seed)
            support = tuple(sorted(rng.choice(60, size=3, replace=False)))
            X = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(3, 1)))
            Y = A.matrix[:, support] @ X
            res = mb.mbmp(Y, A, [d1, d1, 1])
            assert res.support == support
        assert usable >= 20
