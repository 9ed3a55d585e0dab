import json

import numpy as np
import pytest

from gwprune import distributions as D
from gwprune import oracle as O
from gwprune import sampler as S

BINARY = D.critical_binary()
TRIPLE = D.ExplicitFinite([0.6, 0.0, 0.3, 0.1])


class TestExactness:
    @pytest.mark.parametrize("dist", [BINARY, TRIPLE],
                             ids=["binary", "triple"])
    @pytest.mark.parametrize("K", [1, 2, 3])
    def test_recursion_equals_literal_listing(self, dist, K):
        # the convolution recursion and the shape-by-shape listing sum the
        # same finite set of trees; they must agree to rounding
        r = O.enumerate_conditional(dist, K, max_vertices=13)
        covered, sums, n_shapes = O.conditional_by_listing(dist, K,
                                                           max_vertices=13)
        assert abs(r.covered_mass - covered) < 1e-14
        for name, (_, point, _) in r.expectations.items():
            assert abs(point * r.covered_mass - sums[name]) < 1e-12
        assert n_shapes >= 1

    def test_binary_order_one(self):
        r = O.enumerate_conditional(BINARY, 1, max_vertices=50)
        assert abs(r.covered_mass - 0.5) < 1e-14
        assert r.expectations["N_1"][1] == 1.0

    def test_binary_order_two_leaf_count(self):
        # caterpillar geometric series: E_2[N_1] = 3 exactly
        r = O.enumerate_conditional(BINARY, 2, max_vertices=400)
        assert abs(r.covered_mass - 0.25) < 1e-10
        assert abs(r.expectations["N_1"][1] - 3.0) < 1e-9

    def test_probabilities_sum_to_covered_mass(self):
        covered, sums, _ = O.conditional_by_listing(BINARY, 2, max_vertices=11)
        # independent geometric check: caterpillars of branch length L have
        # probability 2^(L-1) q2^L q0^(L+1) and 2L+1 subtree vertices
        manual = sum(2.0 ** (L - 1) * 0.5 ** L * 0.5 ** (L + 1)
                     for L in range(1, 6))  # sizes 3..11
        assert abs(covered - manual) < 1e-15


class TestCoverageAndIntervals:
    @pytest.mark.parametrize("dist", [BINARY, TRIPLE],
                             ids=["binary", "triple"])
    @pytest.mark.parametrize("K", [2, 3])
    def test_analytic_inside_intervals(self, dist, K):
        r = O.enumerate_conditional(dist, K, max_vertices=400)
        assert r.coverage_of() >= 1.0 - 1e-6
        od = D.order_distribution(dist, K)
        assert r.covered_mass <= od.pi[K - 1] + 1e-12
        table = D.tokunaga_analytic(dist, K)
        # exact conditional branch counts from the full merger matrix
        # (subcritical laws are not Toeplitz, so no sequence shortcut here)
        counts = np.zeros(K + 1)
        counts[K] = 1.0
        for k in range(K - 1, 0, -1):
            counts[k] = sum(table.t_total[k, j] * counts[j]
                            for j in range(k + 1, K + 1))
        for k in range(1, K + 1):
            lo, hi = r.interval(f"N_{k}")
            assert lo - 1e-9 <= counts[k] <= hi + 1e-9, (k, lo, counts[k], hi)
        for j in range(2, K + 1):
            for i in range(1, j):
                lo, hi = r.interval(f"n_{i}_{j}")
                expected = table.t_total[i, j] * counts[j]
                assert lo - 1e-9 <= expected <= hi + 1e-9, (i, j)

    def test_subcritical_law_is_not_toeplitz(self):
        # the merger matrix of a strictly subcritical law genuinely depends
        # on both indices, not just j - i
        table = D.tokunaga_analytic(TRIPLE, 3)
        assert abs(table.t_total[1, 2] - table.t_total[2, 3]) > 0.1

    def test_mc_within_three_se_of_oracle(self):
        r = O.enumerate_conditional(BINARY, 3, max_vertices=400)
        est = S.mc_tokunaga(BINARY, 3, 20_000, seed=9, max_vertices=500_000)
        for j in range(2, 4):
            for i in range(1, j):
                nij = r.expectations[f"n_{i}_{j}"][1]
                nj = r.expectations[f"N_{j}"][1]
                t_exact = nij / nj
                se = est.tokunaga.stderr_T[i, j]
                assert abs(est.tokunaga.t_total[i, j] - t_exact) < 3.5 * se

    def test_insufficient_cap_flagged(self):
        r = O.enumerate_conditional(BINARY, 3, max_vertices=40)
        assert r.coverage_of() < 1.0 - 1e-6  # caller sees the shortfall


class TestValidationAndExport:
    def test_unbounded_law_rejected(self):
        with pytest.raises(ValueError):
            O.enumerate_conditional(D.igw(0.75), 2)

    def test_order_cap(self):
        with pytest.raises(ValueError):
            O.enumerate_conditional(BINARY, 5)

    def test_json_export(self):
        r = O.enumerate_conditional(BINARY, 2, max_vertices=60)
        doc = json.loads(r.to_json())
        assert doc["order"] == 2
        assert doc["covered_mass"] == r.covered_mass
        assert "N_1" in doc["expectations"]
