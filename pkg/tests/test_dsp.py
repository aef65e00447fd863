import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distpsz.dsp import (
    NoiseSpec,
    SignalHistory,
    bandlimited_noise,
    bandpass_taps,
    filtered_reference,
    fir_dot,
    history_matrix,
)
from distpsz.errors import ConfigError, DimensionError


def test_fir_dot_unit_impulse_selects_newest():
    assert fir_dot([1, 2, 3], [1, 0, 0]) == 1


def test_fir_dot_zero_filter():
    assert fir_dot([5, -7, 9], [0, 0, 0]) == 0


def test_fir_dot_direct_sum():
    # 1*0.5 + 2*0.25 + 3*0.125
    assert fir_dot([1, 2, 3], [0.5, 0.25, 0.125]) == pytest.approx(1.375, abs=0)


def test_fir_dot_length_mismatch():
    with pytest.raises(DimensionError):
        fir_dot([1, 2], [1, 2, 3])


class TestSignalHistory:
    def test_window_is_newest_first(self):
        h = SignalHistory(5)
        h.extend([1, 2, 3])
        np.testing.assert_array_equal(h.window(5), [3, 2, 1, 0, 0])

    def test_wraps_past_capacity(self):
        h = SignalHistory(3)
        h.extend(range(10))
        np.testing.assert_array_equal(h.window(3), [9, 8, 7])

    def test_window_too_long(self):
        with pytest.raises(DimensionError):
            SignalHistory(3).window(4)

    def test_for_dims_capacity(self):
        assert SignalHistory.for_dims(K=8, J=4).capacity == 8 + 4 - 1


class TestHistoryMatrix:
    def test_zero_history(self):
        X = history_matrix(SignalHistory(10), 3, 4)
        np.testing.assert_array_equal(X, np.zeros((3, 4)))

    def test_single_row_is_window(self):
        h = SignalHistory(6)
        h.extend([1, 2, 3, 4])
        np.testing.assert_array_equal(history_matrix(h, 1, 4), [h.window(4)])

    def test_hand_enumerated(self):
        # x(0)=1, x(1)=2; at n=1 entries are x(1-j-k)
        h = SignalHistory(3)
        h.extend([1, 2])
        np.testing.assert_array_equal(history_matrix(h, 2, 2), [[2, 1], [1, 0]])

    def test_insufficient_capacity(self):
        with pytest.raises(DimensionError):
            history_matrix(SignalHistory(4), 3, 3)

    @given(st.lists(st.floats(-10, 10), min_size=0, max_size=30),
           st.integers(1, 6), st.integers(1, 6))
    def test_entries_match_definition(self, xs, J, K):
        h = SignalHistory(J + K - 1)
        h.extend(xs)
        X = history_matrix(h, J, K)
        n = len(xs) - 1
        for j in range(J):
            for k in range(K):
                idx = n - j - k
                assert X[j, k] == (xs[idx] if idx >= 0 else 0.0)
        # shift property
        np.testing.assert_array_equal(X[1:, :-1], X[:-1, 1:])


class TestFilteredReference:
    def test_identity_plant(self, rng):
        h = SignalHistory(12)
        h.extend(rng.standard_normal(20))
        X = history_matrix(h, 4, 6)
        np.testing.assert_array_equal(filtered_reference(X, [1, 0, 0, 0]), h.window(6))

    def test_zero_plant(self, rng):
        X = rng.standard_normal((3, 5))
        np.testing.assert_array_equal(filtered_reference(X, np.zeros(3)), np.zeros(5))

    def test_matrix_vector(self):
        np.testing.assert_allclose(filtered_reference([[2, 1], [1, 0]], [1, 0.5]), [2.5, 1.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            filtered_reference(np.zeros((3, 4)), np.zeros(2))

    def test_linear_in_plant_and_history(self, rng):
        X1, X2 = rng.standard_normal((2, 4, 7))
        h1, h2 = rng.standard_normal((2, 4))
        a, b = 0.7, -1.3
        np.testing.assert_allclose(filtered_reference(X1, a * h1 + b * h2),
                                   a * filtered_reference(X1, h1) + b * filtered_reference(X1, h2),
                                   rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(filtered_reference(a * X1 + b * X2, h1),
                                   a * filtered_reference(X1, h1) + b * filtered_reference(X2, h1),
                                   rtol=1e-12, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_commutation_identity(J, K, seed):
    """h^T X w computed filter-first equals reference-first."""
    rng = np.random.default_rng(seed)
    xs = rng.standard_normal(J + K + 5)
    h, w = rng.standard_normal(J), rng.standard_normal(K)
    hist = SignalHistory(J + K - 1)
    u = SignalHistory(J)
    for x in xs:
        hist.push(x)
        u.push(fir_dot(hist.window(K), w))
    filter_first = fir_dot(u.window(J), h)
    ref_first = fir_dot(filtered_reference(history_matrix(hist, J, K), h), w)
    assert filter_first == pytest.approx(ref_first, rel=1e-12, abs=1e-12)


class TestNoise:
    def test_deterministic(self):
        spec = NoiseSpec(seed=3)
        np.testing.assert_array_equal(bandlimited_noise(spec, 500), bandlimited_noise(spec, 500))

    def test_empty(self):
        assert bandlimited_noise(NoiseSpec(), 0).size == 0

    def test_unit_variance(self):
        assert bandlimited_noise(NoiseSpec(seed=1), 8000).var() == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("low,high", [(0, 100), (100, 100), (1000, 100), (100, 2000), (-5, 50)])
    def test_bad_band(self, low, high):
        with pytest.raises(ConfigError):
            bandlimited_noise(NoiseSpec(4000, low, high), 10)

    def test_linear_phase_symmetric(self):
        taps = bandpass_taps(NoiseSpec())
        assert taps.size == 255
        np.testing.assert_allclose(taps, taps[::-1], atol=1e-15)

    def test_spectral_mask(self):
        """Averaged periodogram: 50 Hz and 1500 Hz at least 40 dB under the in-band mean."""
        fs, n, seg = 4000.0, 16384, 1024
        x = bandlimited_noise(NoiseSpec(fs, 100, 1000, seed=7), n)
        win = np.hanning(seg)
        segs = [x[i:i + seg] * win for i in range(0, n - seg + 1, seg // 2)]
        psd = np.mean([np.abs(np.fft.rfft(s)) ** 2 for s in segs], axis=0)
        freqs = np.fft.rfftfreq(seg, 1 / fs)
        inband = psd[(freqs >= 150) & (freqs <= 950)].mean()
        for f in (50.0, 1500.0):
            level = psd[np.argmin(np.abs(freqs - f))]
            assert 10 * np.log10(level / inband) <= -40.0
