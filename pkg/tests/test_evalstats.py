import itertools
import json

import numpy as np
import pytest

from rankshape import (
    DecouplingSample,
    DegenerateLabelsError,
    FileFormatError,
    InputError,
    PassCounts,
    RangeError,
    SeparableDataError,
    fit_decoupling_logit,
    load_decoupling_csv,
    mean_token_entropy,
    pass_at_k,
    pass_curve,
)


def enumerate_pass_at_k(n, c, k):
    """Exhaustive oracle: fraction of k-subsets containing a correct sample."""
    hits = 0
    total = 0
    for subset in itertools.combinations(range(n), k):
        total += 1
        if any(i < c for i in subset):
            hits += 1
    return hits / total


def synthetic_samples(seed, n, beta_r=0.56, beta_e=0.0):
    """Features with known z-scored coefficients and Bernoulli labels."""
    rng = np.random.default_rng(seed)
    eff_rank = np.clip(rng.normal(4.0, 1.5, size=n), 1.0, None)
    entropy = np.clip(rng.normal(2.0, 0.6, size=n), 0.0, None)
    zr = (eff_rank - eff_rank.mean()) / eff_rank.std()
    ze = (entropy - entropy.mean()) / entropy.std()
    p = 1.0 / (1.0 + np.exp(-(beta_r * zr + beta_e * ze)))
    labels = rng.uniform(size=n) < p
    return [DecouplingSample(float(r), float(e), bool(y))
            for r, e, y in zip(eff_rank, entropy, labels)]


class TestPassAtK:
    def test_no_correct_samples(self):
        assert pass_at_k(10, 0, 5) == 0.0

    def test_any_correct_with_k_equal_n(self):
        assert pass_at_k(10, 1, 10) == 1.0

    def test_worked_example(self):
        assert abs(pass_at_k(4, 2, 2) - 5.0 / 6.0) < 1e-12

    def test_early_exit_when_misses_cannot_fill_k(self):
        assert pass_at_k(64, 60, 16) == 1.0

    def test_matches_enumeration_small(self):
        for n in range(1, 9):
            for c in range(n + 1):
                for k in range(1, n + 1):
                    expected = enumerate_pass_at_k(n, c, k)
                    assert abs(pass_at_k(n, c, k) - expected) < 1e-12

    def test_monotone_in_k(self):
        values = [pass_at_k(64, 7, k) for k in range(1, 65)]
        assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))

    def test_monotone_in_c(self):
        values = [pass_at_k(64, c, 8) for c in range(65)]
        assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))

    def test_pass_at_1_is_success_rate(self):
        for c in range(65):
            assert pass_at_k(64, c, 1) == c / 64

    def test_range_violations(self):
        with pytest.raises(RangeError):
            pass_at_k(4, 2, 5)
        with pytest.raises(RangeError):
            pass_at_k(4, 5, 2)
        with pytest.raises(RangeError):
            pass_at_k(4, 2, 0)
        with pytest.raises(RangeError):
            pass_at_k(0, 0, 1)
        with pytest.raises(RangeError):
            pass_at_k(4, -1, 2)


class TestPassCurve:
    def test_matches_paper_style_aggregate(self):
        # 30 problems, 28 of them solved at least once in 64 samples
        rng = np.random.default_rng(0)
        counts = tuple(int(c) for c in rng.integers(1, 65, size=28)) + (0, 0)
        pc = PassCounts(n=64, counts=counts)
        curve = pass_curve(pc, [64])
        assert abs(curve[64] - 28.0 / 30.0) < 1e-12

    def test_k1_equals_mean_success(self):
        counts = (3, 10, 0, 64, 31)
        pc = PassCounts(n=64, counts=counts)
        curve = pass_curve(pc, [1])
        assert abs(curve[1] - np.mean(counts) / 64.0) < 1e-12

    def test_nondecreasing_in_k(self):
        pc = PassCounts(n=32, counts=(0, 1, 5, 9, 30))
        curve = pass_curve(pc, [1, 2, 4, 8, 16, 32])
        values = [curve[k] for k in (1, 2, 4, 8, 16, 32)]
        assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))

    def test_count_out_of_range_rejected(self):
        with pytest.raises(RangeError):
            PassCounts(n=4, counts=(5,))

    def test_empty_counts_rejected(self):
        with pytest.raises(InputError):
            PassCounts(n=4, counts=())

    def test_k_above_n_rejected(self):
        pc = PassCounts(n=4, counts=(2,))
        with pytest.raises(RangeError):
            pass_curve(pc, [8])


class TestMeanTokenEntropy:
    def test_one_hot_steps(self):
        assert mean_token_entropy([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]) == 0.0

    def test_uniform_four(self):
        assert abs(mean_token_entropy([[0.25] * 4]) - np.log(4.0)) < 1e-12

    def test_mixed_steps_average(self):
        value = mean_token_entropy([[1.0, 0.0], [0.5, 0.5]])
        assert abs(value - np.log(2.0) / 2.0) < 1e-12

    def test_bad_sum_rejected(self):
        with pytest.raises(InputError):
            mean_token_entropy([[0.7, 0.2]])

    def test_negative_entry_rejected(self):
        with pytest.raises(InputError):
            mean_token_entropy([[1.2, -0.2]])

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            mean_token_entropy([])


class TestDecouplingSamples:
    def test_bounds_enforced(self):
        with pytest.raises(InputError):
            DecouplingSample(0.5, 1.0, True)
        with pytest.raises(InputError):
            DecouplingSample(2.0, -0.1, False)


class TestFitDecouplingLogit:
    def test_recovers_rank_coefficient(self):
        fit = fit_decoupling_logit(synthetic_samples(0, 5000))
        assert fit.converged
        assert abs(fit.beta_r - 0.56) < 0.1
        assert fit.p_values[1] < 1e-3
        assert fit.p_values[2] > 0.05

    def test_score_equation_mean_match(self):
        samples = synthetic_samples(1, 2000)
        fit = fit_decoupling_logit(samples)
        raw = np.array([[s.eff_rank, s.entropy] for s in samples])
        Z = (raw - raw.mean(axis=0)) / raw.std(axis=0)
        eta = fit.beta0 + Z @ np.array([fit.beta_r, fit.beta_e])
        predicted = 1.0 / (1.0 + np.exp(-eta))
        rate = np.mean([s.correct for s in samples])
        assert abs(predicted.mean() - rate) < 1e-6

    def test_standardization_makes_fit_affine_invariant(self):
        samples = synthetic_samples(2, 2000)
        rescaled = [DecouplingSample(10.0 * s.eff_rank, 3.0 * s.entropy + 5.0, s.correct)
                    for s in samples]
        a = fit_decoupling_logit(samples)
        b = fit_decoupling_logit(rescaled)
        assert abs(a.beta_r - b.beta_r) < 1e-6
        assert abs(a.beta_e - b.beta_e) < 1e-6

    def test_null_features_rarely_significant(self):
        # under independence both Wald p-values clear 0.05 about 90% of runs
        clear = 0
        for seed in range(50):
            fit = fit_decoupling_logit(synthetic_samples(seed, 2000, beta_r=0.0))
            if fit.p_values[1] > 0.05 and fit.p_values[2] > 0.05:
                clear += 1
        assert clear >= 45

    def test_single_class_rejected(self):
        samples = [DecouplingSample(2.0 + 0.1 * i, 1.0 + 0.05 * i, True)
                   for i in range(30)]
        with pytest.raises(DegenerateLabelsError):
            fit_decoupling_logit(samples)

    def test_separable_data_detected(self):
        rng = np.random.default_rng(3)
        eff_rank = np.clip(rng.normal(4.0, 1.5, size=200), 1.0, None)
        entropy = np.clip(rng.normal(2.0, 0.6, size=200), 0.0, None)
        labels = eff_rank > np.median(eff_rank)
        samples = [DecouplingSample(float(r), float(e), bool(y))
                   for r, e, y in zip(eff_rank, entropy, labels)]
        with pytest.raises(SeparableDataError):
            fit_decoupling_logit(samples)

    def test_too_few_samples_rejected(self):
        with pytest.raises(InputError):
            fit_decoupling_logit(synthetic_samples(4, 19))

    def test_constant_feature_rejected(self):
        samples = [DecouplingSample(3.0, 1.0 + 0.1 * (i % 7), i % 2 == 0)
                   for i in range(40)]
        with pytest.raises(InputError):
            fit_decoupling_logit(samples)

    def test_json_record(self):
        fit = fit_decoupling_logit(synthetic_samples(5, 500))
        record = json.loads(fit.to_json())
        assert set(record) == {"beta0", "beta_r", "beta_e", "std_errors",
                               "p_values", "converged", "iterations"}
        assert len(record["std_errors"]) == 3


class TestLoadDecouplingCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "samples.csv"
        path.write_text("eff_rank,entropy,correct\n2.5,1.25,1\n1.0,0.0,0\n")
        samples = load_decoupling_csv(path)
        assert len(samples) == 2
        assert samples[0].eff_rank == 2.5
        assert samples[0].correct is True
        assert samples[1].correct is False

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "samples.csv"
        path.write_text("rank,entropy,correct\n2.5,1.0,1\n")
        with pytest.raises(FileFormatError) as info:
            load_decoupling_csv(path)
        assert info.value.code == "bad_header"

    def test_bad_flag_rejected(self, tmp_path):
        path = tmp_path / "samples.csv"
        path.write_text("eff_rank,entropy,correct\n2.5,1.0,2\n")
        with pytest.raises(FileFormatError) as info:
            load_decoupling_csv(path)
        assert info.value.code == "bad_value"

    def test_missing_file(self):
        with pytest.raises(InputError):
            load_decoupling_csv("/nonexistent/samples.csv")
