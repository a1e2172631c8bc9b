import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eigsample import (
    CapacityError,
    ConfigError,
    EstimatorConfig,
    ShapeError,
    SymmetricMatrixOracle,
    derive_seed,
    exact_spectrum,
    generate,
    query_entry,
    spectrum_error,
)
from eigsample.matrix import (
    QueryLedger,
    clamped_log,
    load_matrix,
    pad_spectrum,
    save_binary,
    save_text,
)

from conftest import random_symmetric


class TestQueryEntry:
    def test_identity_diagonal(self):
        assert query_entry(generate("identity", 4), 2, 2) == 1.0

    def test_identity_offdiagonal(self):
        assert query_entry(generate("identity", 4), 0, 3) == 0.0

    def test_dense_symmetry(self):
        o = SymmetricMatrixOracle.from_dense([[0, 1], [1, 0]])
        assert query_entry(o, 1, 0) == 1.0

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            query_entry(generate("identity", 4), 0, 4)

    def test_mirror_pair_charged_once(self):
        o = generate("sign_symmetric", 10, seed=1)
        o.entry(2, 5)
        o.entry(5, 2)
        o.entry(3, 3)
        assert o.ledger.entry_queries == 2

    def test_rejects_asymmetric(self):
        with pytest.raises(ShapeError):
            SymmetricMatrixOracle.from_dense([[0, 1], [0.5, 0]])

    def test_symmetrizes_roundoff(self):
        o = SymmetricMatrixOracle.from_dense([[0, 1], [1 + 1e-14, 0]])
        assert o.entry(0, 1) == o.entry(1, 0)


class TestLedger:
    def test_block_dedup(self):
        led = QueryLedger()
        assert led.charge_block(10, [1, 2], [1, 2]) == 3
        assert led.charge_block(10, [2, 1], [1, 2]) == 0

    def test_new_run_recharges(self):
        led = QueryLedger()
        led.charge_block(10, [1, 2], [1, 2])
        led.begin_run()
        led.charge_pairs(10, [1], [2])
        assert led.entry_queries == 4

    def test_charge_all_counts_remaining(self):
        led = QueryLedger()
        led.charge_pairs(5, [0], [1])
        assert led.charge_all(5) == 14
        assert led.entry_queries == 15
        assert led.charge_pairs(5, [3], [4]) == 0

    @given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), max_size=40))
    def test_monotone_and_bounded(self, pairs):
        led = QueryLedger()
        last = 0
        for i, j in pairs:
            led.charge_pairs(10, [i], [j])
            assert led.entry_queries >= last
            last = led.entry_queries
        assert last == len({(min(i, j), max(i, j)) for i, j in pairs})


class TestExactSpectrum:
    def test_ones(self):
        np.testing.assert_allclose(exact_spectrum(generate("all_ones", 4)).values, [4, 0, 0, 0], atol=1e-12)

    def test_identity(self):
        np.testing.assert_allclose(exact_spectrum(generate("identity", 3)).values, [1, 1, 1])

    def test_swap(self):
        np.testing.assert_allclose(exact_spectrum(np.array([[0.0, 1], [1, 0]])).values, [1, -1], atol=1e-15)

    def test_cap(self):
        o = SymmetricMatrixOracle(10, lambda r, c: np.zeros((r.size, c.size)), cap=5)
        with pytest.raises(CapacityError):
            exact_spectrum(o)

    def test_trace_of_square(self):
        rng = np.random.default_rng(3)
        a = random_symmetric(rng, 60)
        lam = exact_spectrum(a).values
        assert math.isclose(np.sum(lam ** 2), np.sum(a * a), rel_tol=1e-8)

    def test_weyl(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            n = int(rng.integers(2, 128))
            a = random_symmetric(rng, n, bounded=False)
            e = random_symmetric(rng, n) * 0.1
            gap = spectrum_error(exact_spectrum(a + e), exact_spectrum(a))
            assert gap <= np.linalg.norm(e, 2) + 1e-9


class TestSpectrumError:
    @pytest.mark.parametrize("est,ref,expected", [
        ((1, 0), (1, 0), 0.0),
        ((2, 0), (1, 0), 1.0),
        ((3, 1, -1), (3, 0, -2), 1.0),
    ])
    def test_examples(self, est, ref, expected):
        assert spectrum_error(np.array(est, float), np.array(ref, float)) == expected

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            spectrum_error(np.zeros(2), np.zeros(3))


class TestPadding:
    def test_pads_and_sorts(self):
        np.testing.assert_array_equal(pad_spectrum([-1.0, 2.0], 4), [2, 0, 0, -1])

    def test_drops_smallest_magnitude(self):
        np.testing.assert_array_equal(pad_spectrum([5.0, 0.1, -3.0, 0.2], 2), [5, -3])

    @given(st.lists(st.floats(-1e3, 1e3), max_size=20), st.integers(0, 25))
    def test_length_and_order(self, eigs, n):
        out = pad_spectrum(eigs, n)
        assert out.size == n
        assert np.all(np.diff(out) <= 0)


class TestConfig:
    def test_default_uniform_size(self):
        cfg = EstimatorConfig(0.25)
        expected = math.ceil(40 / (0.0625 * 0.5) * math.log(1 / 0.125))
        assert cfg.uniform_sample_size() == expected == 2662

    def test_small_argument_log_is_clamped(self):
        assert clamped_log(1.5) == 1.0
        cfg = EstimatorConfig(0.9, delta=0.9)
        assert cfg.uniform_sample_size() == math.ceil(40 / (0.81 * 0.9))

    def test_override(self):
        assert EstimatorConfig(0.25, s_override=100).uniform_sample_size() == 100

    @pytest.mark.parametrize("kwargs,field", [
        ({"epsilon": 0.0}, "epsilon"),
        ({"epsilon": 0.2, "delta": 1.0}, "delta"),
        ({"epsilon": 0.2, "s_override": 0}, "s"),
        ({"epsilon": 0.2, "c_log": -1}, "c_log"),
    ])
    def test_rejects(self, kwargs, field):
        with pytest.raises(ConfigError) as info:
            EstimatorConfig(**kwargs)
        assert info.value.field == field

    def test_seed_derivation_is_stable(self):
        assert derive_seed(7, 3) == derive_seed(7, 3)
        assert derive_seed(7, 3) != derive_seed(7, 4)


class TestFiles:
    def test_text_roundtrip(self, tmp_path):
        a = random_symmetric(np.random.default_rng(0), 7)
        save_text(tmp_path / "a.txt", a)
        np.testing.assert_array_equal(load_matrix(tmp_path / "a.txt").materialize(), a)

    def test_binary_roundtrip(self, tmp_path):
        a = random_symmetric(np.random.default_rng(1), 9)
        save_binary(tmp_path / "a.bin", a)
        np.testing.assert_array_equal(load_matrix(tmp_path / "a.bin").materialize(), a)

    def test_truncated_text(self, tmp_path):
        (tmp_path / "bad.txt").write_text("3\n1 2 3\n")
        with pytest.raises(ShapeError):
            load_matrix(tmp_path / "bad.txt")


class TestNorms:
    @pytest.mark.parametrize("kind,params", [
        ("sign_symmetric", {}), ("planted_rank_k", {"k": 3}), ("psd_gram", {"m": 5}), ("all_ones", {}),
    ])
    def test_closed_forms_match_dense(self, kind, params):
        imp = generate(kind, 50, params, seed=2)
        a = imp.materialize()
        np.testing.assert_allclose(imp.row_norms_sq(), np.sum(a * a, axis=1), rtol=1e-10)
        assert math.isclose(imp.frobenius_norm() ** 2, np.sum(a * a), rel_tol=1e-10)
        assert imp.ledger.row_norm_queries == 50
