import numpy as np
import pytest

from rankshape import (
    InputError,
    NormalizationError,
    TrajectoryTooShortError,
    WindowRankProfile,
    covariance_spectrum,
    effective_rank,
    norm_rank,
    window_starts,
    windowed_min_effrank,
)


def profile_with(min_erank, r_max):
    return WindowRankProfile(window_width=8, stride=4, starts=(0,),
                             per_window_erank=(min_erank,), r_max=r_max)


class TestWindowStarts:
    def test_short_trajectory_single_window(self):
        assert window_starts(10, 64, 16) == [0]
        assert window_starts(64, 64, 16) == [0]

    def test_aligned_grid(self):
        assert window_starts(96, 64, 16) == [0, 16, 32]

    def test_final_window_flushed_to_end(self):
        assert window_starts(100, 64, 16) == [0, 16, 32, 36]

    def test_stride_one_covers_everything(self):
        starts = window_starts(20, 8, 1)
        assert starts == list(range(13))


class TestWindowedMinEffrank:
    def test_single_window_matches_full_erank(self):
        rng = np.random.default_rng(0)
        H = rng.normal(size=(32, 8))
        profile = windowed_min_effrank(H, width=64, stride=16)
        assert profile.starts == (0,)
        full = effective_rank(covariance_spectrum(H))
        assert abs(profile.min_erank - full) < 1e-12

    def test_low_rank_stretch_drives_minimum(self):
        rng = np.random.default_rng(1)
        head = np.outer(np.linspace(1.0, 4.0, 64), np.eye(8)[0])
        tail = rng.normal(size=(128, 8))
        profile = windowed_min_effrank(np.vstack([head, tail]), width=64, stride=16)
        assert profile.starts[0] == 0
        assert abs(profile.per_window_erank[0] - 1.0) < 1e-9
        assert profile.min_erank < 1.0 + 1e-9
        assert max(profile.per_window_erank) > 5.0

    def test_constant_windows_score_one(self):
        profile = windowed_min_effrank(np.ones((128, 4)), width=64, stride=16)
        assert all(v == 1.0 for v in profile.per_window_erank)

    def test_min_is_elementwise_minimum(self):
        rng = np.random.default_rng(2)
        profile = windowed_min_effrank(rng.normal(size=(200, 6)), width=64, stride=16)
        assert profile.min_erank == min(profile.per_window_erank)

    def test_r_max_rule(self):
        rng = np.random.default_rng(3)
        assert windowed_min_effrank(rng.normal(size=(100, 4)), width=64).r_max == 4
        assert windowed_min_effrank(rng.normal(size=(100, 80)), width=64).r_max == 64

    def test_extension_never_raises_minimum_on_aligned_windows(self):
        rng = np.random.default_rng(4)
        H = rng.normal(size=(128, 5))
        prefix = windowed_min_effrank(H[:96], width=64, stride=16)
        extended = windowed_min_effrank(H, width=64, stride=16)
        assert set(prefix.starts) <= set(extended.starts)
        assert extended.min_erank <= prefix.min_erank + 1e-12

    def test_too_short_rejected(self):
        with pytest.raises(TrajectoryTooShortError):
            windowed_min_effrank([[1.0, 2.0]])

    def test_bad_width_and_stride_rejected(self):
        H = np.random.default_rng(5).normal(size=(10, 3))
        with pytest.raises(InputError):
            windowed_min_effrank(H, width=1)
        with pytest.raises(InputError):
            windowed_min_effrank(H, stride=0)


class TestNormRank:
    def test_floor_is_zero(self):
        assert norm_rank(profile_with(1.0, 5)) == 0.0

    def test_ceiling_is_one(self):
        assert norm_rank(profile_with(5.0, 5)) == 1.0

    def test_midpoint(self):
        assert abs(norm_rank(profile_with(3.0, 5)) - 0.5) < 1e-12

    def test_clamped_above(self):
        assert norm_rank(profile_with(6.0, 5)) == 1.0

    def test_monotone_in_min_erank(self):
        values = [norm_rank(profile_with(m, 9)) for m in np.linspace(1.0, 9.0, 17)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_r_max_below_two_rejected(self):
        with pytest.raises(NormalizationError):
            norm_rank(profile_with(1.0, 1))

    def test_on_real_profile(self):
        rng = np.random.default_rng(6)
        profile = windowed_min_effrank(rng.normal(size=(100, 8)), width=32, stride=8)
        value = norm_rank(profile)
        assert 0.0 <= value <= 1.0
