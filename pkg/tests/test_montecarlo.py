import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sep3d.modal import SMALL_L, channel_probabilities, zernike_modes
from sep3d.montecarlo import (
    CountsFrame,
    InvalidProbabilityError,
    batch_estimate,
    frame_rng,
    ml_estimate,
    neg_log_likelihood,
    sample_frame,
)

L0 = (0.25, 0.25, 0.25)
PROBS = channel_probabilities(zernike_modes(), L0)


class TestCountsFrame:
    def test_validation(self):
        with pytest.raises(ValueError):
            CountsFrame([1, -1, 0, 0], 0, 0)
        with pytest.raises(ValueError):
            CountsFrame([5, 5, 5, 5], 0, 10)
        with pytest.raises(ValueError):
            CountsFrame([1, 1, 1, 1], 1, 10)  # unit efficiency must account for every photon
        assert CountsFrame([1, 1, 1, 1], 1, 10, efficiency=0.5).lost == 5

    def test_expected_frame(self):
        f = CountsFrame.expected(PROBS, 1000)
        assert f.counts.sum() + f.undetected == 1000


class TestSampler:
    def test_conserves_photons(self):
        f = sample_frame(12345, PROBS, 0.7, seed=3)
        assert f.counts.sum() + f.undetected + f.lost == 12345

    def test_deterministic_streams(self):
        a = sample_frame(10_000, PROBS, seed=frame_rng(9, 4))
        b = sample_frame(10_000, PROBS, seed=frame_rng(9, 4))
        c = sample_frame(10_000, PROBS, seed=frame_rng(9, 5))
        assert np.array_equal(a.counts, b.counts)
        assert not np.array_equal(a.counts, c.counts)

    def test_efficiency_thins_every_channel(self):
        frames = [sample_frame(20_000, PROBS, 0.4, seed=frame_rng(1, i)) for i in range(300)]
        counts = np.array([np.append(f.counts, [f.undetected, f.lost]) for f in frames], dtype=float)
        expected = 20_000 * np.append(0.4 * PROBS.all, 0.6)
        sigma = np.sqrt(expected * (1 - expected / 20_000) / len(frames))
        assert np.all(np.abs(counts.mean(axis=0) - expected) < 5 * sigma)

    def test_invalid_efficiency(self):
        with pytest.raises(InvalidProbabilityError):
            sample_frame(10, PROBS, efficiency=0.0)


class TestLikelihood:
    @settings(max_examples=20, deadline=None)
    @given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
    def test_even_in_separation(self, x, y, z):
        f = sample_frame(10_000, PROBS, seed=11)
        a = neg_log_likelihood(f, (x, y, z))
        b = neg_log_likelihood(f, (-x, -y, -z))
        assert a == pytest.approx(b, rel=1e-12, abs=1e-9)

    def test_efficiency_shifts_by_constant(self):
        f = sample_frame(10_000, PROBS, 0.5, seed=2)
        shifts = [neg_log_likelihood(f, l, efficiency=0.5) - neg_log_likelihood(f, l, efficiency=1.0)
                  for l in [(0.1, 0.2, 0.3), (0.3, 0.1, 0.05), (0.25, 0.25, 0.25)]]
        assert np.ptp(shifts) < 1e-9
        assert shifts[0] == pytest.approx(-(f.counts.sum() + f.undetected) * np.log(0.5))

    def test_zero_probability_channel_with_counts(self):
        p = channel_probabilities(zernike_modes(), (0.1, 0, 0), model=SMALL_L).p
        f = CountsFrame([10, 5, 0, 0], 0, 15)
        assert neg_log_likelihood(f, (0.1, 0.0, 0.0), SMALL_L) == pytest.approx(
            -(10 * np.log(p[0]) + 5 * np.log(p[1])))
        g = CountsFrame([10, 5, 3, 0], 0, 18)
        assert neg_log_likelihood(g, (0.1, 0.0, 0.0), SMALL_L) == np.inf

    def test_small_l_outside_domain_is_infeasible(self):
        f = CountsFrame([10, 5, 3, 2], 0, 20)
        assert neg_log_likelihood(f, (0.5, 0.5, 0.5), SMALL_L) == np.inf


class TestEstimation:
    @pytest.mark.parametrize("model", ["exact", SMALL_L])
    def test_noiseless_frame_recovers_truth(self, model):
        truth = (0.12, 0.07, 0.2)
        probs = channel_probabilities(zernike_modes(), truth, model=model)
        res = ml_estimate(CountsFrame.expected(probs, 10**8), init=(0.1, 0.1, 0.1), model=model)
        assert res.converged
        np.testing.assert_allclose(res.l_hat.as_array(), truth, atol=1e-4)

    def test_infeasible_start_is_not_converged(self):
        f = CountsFrame.expected(channel_probabilities(zernike_modes(), (0.1, 0.1, 0.1), model=SMALL_L), 10**6)
        assert not ml_estimate(f, model=SMALL_L).converged

    def test_estimate_is_nonnegative_and_not_worse_than_init(self):
        f = sample_frame(10_000, PROBS, seed=7)
        res = ml_estimate(f)
        assert np.all(res.l_hat.as_array() >= 0)
        assert res.nll_at_optimum <= neg_log_likelihood(f, res.init)

    def test_extra_starts(self):
        f = sample_frame(10_000, PROBS, seed=8)
        one = ml_estimate(f)
        many = ml_estimate(f, starts=[(0.1, 0.1, 0.1), (0.4, 0.4, 0.4)])
        assert many.nll_at_optimum <= one.nll_at_optimum + 1e-9

    def test_batch_independent_of_workers(self):
        a = batch_estimate(L0, 10_000, 6, 123, workers=1)
        b = batch_estimate(L0, 10_000, 6, 123, workers=2)
        assert np.array_equal(a.estimates, b.estimates)
        assert a.per_photon_variance.shape == (3,)

    def test_batch_needs_two_frames(self):
        with pytest.raises(ValueError):
            batch_estimate(L0, 100, 1, 0)
