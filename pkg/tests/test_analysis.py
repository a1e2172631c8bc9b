import math

import numpy as np
import pytest

from eigsample import (
    CapacityError,
    SampleDraw,
    check_assumption,
    draw_uniform,
    eigenbasis_at_least,
    generate,
    incoherence_report,
    leverage_scores,
    middle_norm_check,
    split_outer_middle,
    subspace_distortion,
)
from eigsample.analysis import (
    approx_product_check,
    count_outlying,
    embedding_sample_size,
    outer_eigenvalue_errors,
    projection_row_norm_excess,
    two_sided_bound,
)

from conftest import random_symmetric


class TestSplit:
    def test_diag(self):
        sp = split_outer_middle(np.diag([10.0, 1.0]), 5)
        np.testing.assert_allclose(sp.outer, np.diag([10, 0]), atol=1e-12)
        np.testing.assert_allclose(sp.middle, np.diag([0, 1]), atol=1e-12)

    def test_level_above_norm(self):
        a = random_symmetric(np.random.default_rng(0), 10)
        sp = split_outer_middle(a, 100)
        np.testing.assert_allclose(sp.outer, 0, atol=1e-12)
        np.testing.assert_allclose(sp.middle, a, atol=1e-12)

    def test_invariants(self):
        rng = np.random.default_rng(1)
        a = random_symmetric(rng, 64)
        L = 3.0
        sp = split_outer_middle(a, L)
        np.testing.assert_allclose(sp.outer + sp.middle, a, atol=1e-10)
        lo = np.linalg.eigvalsh(sp.outer)
        assert np.all((np.abs(lo) >= L - 1e-9) | (np.abs(lo) < 1e-9))
        assert np.all(np.abs(np.linalg.eigvalsh(sp.middle)) < L)

    def test_cap(self):
        with pytest.raises(CapacityError):
            split_outer_middle(np.zeros((10, 10)), 1.0, cap=5)


class TestEigenbasis:
    def test_ones(self):
        v = eigenbasis_at_least(np.ones((6, 6)), 3)
        np.testing.assert_allclose(np.abs(v[:, 0]), np.full(6, 1 / math.sqrt(6)))
        assert v.shape == (6, 1)

    def test_empty(self):
        assert eigenbasis_at_least(np.eye(4), 2).shape == (4, 0)

    def test_invariant_subspace(self):
        a = random_symmetric(np.random.default_rng(2), 64)
        v = eigenbasis_at_least(a, 2.0)
        np.testing.assert_allclose(v.T @ v, np.eye(v.shape[1]), atol=1e-10)
        np.testing.assert_allclose(a @ v, v @ (v.T @ a @ v), atol=1e-8)


class TestDistortion:
    def test_identity_draw(self):
        v = np.linalg.qr(np.random.default_rng(0).standard_normal((30, 3)))[0]
        assert subspace_distortion(SampleDraw.identity(30), v) == pytest.approx(0, abs=1e-12)

    def test_arithmetic(self):
        v = np.zeros((4, 1))
        v[0] = 1
        assert subspace_distortion(SampleDraw([0], [math.sqrt(2)]), v) == pytest.approx(1)

    def test_empty_basis(self):
        assert subspace_distortion(SampleDraw([1], [1.0]), np.zeros((5, 0))) == 0

    def test_fewer_rows_than_columns(self):
        v = np.eye(4)[:, :3]
        assert subspace_distortion(SampleDraw([0], [1.0]), v) == 1.0

    def test_matches_materialized(self):
        rng = np.random.default_rng(3)
        v = np.linalg.qr(rng.standard_normal((256, 4)))[0]
        d = draw_uniform(256, 128, rng)
        sig = np.linalg.svd(d.as_matrix(256) @ v, compute_uv=False)
        want = max(abs(sig[0] ** 2 - 1), abs(sig[-1] ** 2 - 1))
        assert subspace_distortion(d, v) == pytest.approx(want, abs=1e-10)


class TestCheckAssumption:
    def test_identity_draw_passes(self):
        a = generate("planted_rank_k", 64, {"k": 2}, seed=1).materialize()
        rep = check_assumption(SampleDraw.identity(64), a, 8)
        assert rep.passed
        np.testing.assert_allclose(rep.distortions, 0, atol=1e-10)
        top = np.max(np.abs(np.linalg.eigvalsh(a)))
        assert rep.lambda_grid == [8.0 * 2 ** r for r in range(int(math.log2(top / 8)) + 1)]

    def test_vacuous(self):
        rep = check_assumption(SampleDraw([0], [1.0]), np.eye(10), 5)
        assert rep.passed and rep.lambda_grid == []

    def test_thresholds(self):
        a = np.diag([64.0, 10.0, 0.0, 0.0])
        rep = check_assumption(SampleDraw.identity(4), a, 8)
        assert rep.lambda_grid == [8, 16, 32, 64]
        assert rep.thresholds == [0.1, 0.1, 0.1, 0.1]

    def test_pass_flag_consistent(self):
        a = generate("sign_symmetric", 128, seed=2).materialize()
        for t in range(5):
            d = draw_uniform(128, 64, np.random.default_rng(t))
            rep = check_assumption(d, a, 10)
            assert rep.passed == all(x <= y for x, y in zip(rep.distortions, rep.thresholds))

    def test_csv_rows(self):
        rep = check_assumption(SampleDraw.identity(4), np.diag([20.0, 0, 0, 0]), 8)
        assert rep.csv_rows()[0] == "lambda,distortion,threshold,pass"
        assert rep.csv_rows()[1].endswith(",0.1,1")

    def test_sign_symmetric_embedding_size(self):
        a = generate("sign_symmetric", 512, seed=4).materialize()
        s = embedding_sample_size(0.25, 0.1)
        ok = sum(check_assumption(draw_uniform(512, s, np.random.default_rng(t)), a, 128).passed for t in range(20))
        assert ok >= 17


class TestLeverage:
    def test_orthonormal(self):
        q = np.linalg.qr(np.random.default_rng(0).standard_normal((20, 3)))[0]
        np.testing.assert_allclose(leverage_scores(q), np.sum(q * q, axis=1), atol=1e-12)

    def test_basis_vector(self):
        e = np.zeros((5, 1))
        e[0] = 3
        np.testing.assert_allclose(leverage_scores(e), [1, 0, 0, 0, 0], atol=1e-12)

    def test_pinv_formula(self):
        x = np.random.default_rng(1).standard_normal((64, 4))
        want = np.einsum("ij,jk,ik->i", x, np.linalg.pinv(x.T @ x), x)
        np.testing.assert_allclose(leverage_scores(x), want, atol=1e-9)

    def test_rank_deficient_sum(self):
        x = np.random.default_rng(2).standard_normal((30, 2))
        x = np.hstack([x, x[:, :1]])
        tau = leverage_scores(x)
        assert tau.sum() == pytest.approx(2, abs=1e-8)
        assert np.all((tau >= -1e-12) & (tau <= 1 + 1e-12))


class TestIncoherence:
    def test_ones_equality(self):
        ratio, holds = incoherence_report(np.ones((7, 7)), 7)
        assert ratio == pytest.approx(1.0)
        assert holds

    def test_vacuous(self):
        assert incoherence_report(np.eye(5), 2) == (0.0, True)

    def test_random(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            n = int(rng.integers(2, 128))
            assert incoherence_report(random_symmetric(rng, n), 0.3 * n)[1]


class TestMiddleNorm:
    def test_zero_middle(self):
        sp = split_outer_middle(np.diag([10.0, 0.0]), 5)
        assert middle_norm_check(SampleDraw([0, 1], [1.0, 1.0]), sp, 0.0) == (0.0, True)

    def test_identity_draw(self):
        a = random_symmetric(np.random.default_rng(4), 40)
        sp = split_outer_middle(a, 4.0)
        op, holds = middle_norm_check(SampleDraw.identity(40), sp, 4.0)
        assert op < 4.0 and holds


class TestFacts:
    def test_approx_product(self):
        rng = np.random.default_rng(5)
        for t in range(20):
            n = int(rng.integers(10, 256))
            x = rng.standard_normal((n, 2))
            y = rng.standard_normal((n, 3))
            err, bound = approx_product_check(draw_uniform(n, n / 2, rng), x, y)
            assert err <= bound + 1e-9

    def test_projection_row_norms(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            n = int(rng.integers(2, 60))
            a = random_symmetric(rng, n)
            assert projection_row_norm_excess(a, rng.random(n) < 0.5) <= 1e-9

    def test_outlying_count(self):
        rng = np.random.default_rng(7)
        for eps in (0.1, 0.25, 0.5):
            for kind in ("sign_symmetric", "planted_rank_k", "all_ones"):
                a = generate(kind, 128, {"k": 3}, seed=int(eps * 10)).materialize()
                assert count_outlying(a, eps) <= 1 / eps ** 2
            assert count_outlying(random_symmetric(rng, 100), eps) <= 1 / eps ** 2

    def test_two_sided_bound(self):
        assert two_sided_bound(10.0, 5.0) == 51 * 5
        assert two_sided_bound(5 * math.e ** 2, 5.0) == pytest.approx(51 * 5 * 2)

    def test_embedding_sample_size(self):
        want = math.ceil(8 / 0.0625 * (math.log(math.log(4)) + math.log(1 / (0.0625 * 0.1))))
        assert embedding_sample_size(0.25, 0.1) == want

    def test_outer_errors_zero_for_identity_draw(self):
        a = np.diag([5.0, -4.0, 0, 0])
        np.testing.assert_allclose(outer_eigenvalue_errors(SampleDraw.identity(4), a), [0, 0], atol=1e-12)
