import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sptrack.exceptions import InsufficientDataError, OrderingError
from sptrack.trend import PolyTrend, Window, eval_trend, fit_trend, fitting_errors


def make_window(times, values, max_len=None):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] != len(times):
        values = values.T
    window = Window(max_len or len(times))
    for t, row in zip(times, values):
        window.push(t, row)
    return window


class TestWindow:
    def test_keeps_most_recent(self):
        window = Window(3)
        for k in range(1, 8):
            window.push(k, [float(k)])
        assert len(window) == 3
        np.testing.assert_array_equal(window.times, [5.0, 6.0, 7.0])

    @given(st.integers(min_value=1, max_value=20), st.integers(min_value=1, max_value=10))
    def test_length_is_min_of_pushes_and_capacity(self, pushes, max_len):
        window = Window(max_len)
        for k in range(pushes):
            window.push(k, [0.0])
        assert len(window) == min(pushes, max_len)

    def test_non_increasing_time_rejected(self):
        window = Window(5)
        window.push(1.0, [0.0])
        with pytest.raises(OrderingError):
            window.push(1.0, [0.0])
        with pytest.raises(OrderingError):
            window.push(0.5, [0.0])


class TestFitTrend:
    def test_constant_signal(self):
        window = make_window(range(1, 6), np.full(5, 7.0))
        trend = fit_trend(window, 2)
        coeffs = trend.unnormalized_coeffs()[:, 0]
        assert coeffs[0] == pytest.approx(7.0, abs=1e-10)
        assert coeffs[1] == pytest.approx(0.0, abs=1e-10)
        assert coeffs[2] == pytest.approx(0.0, abs=1e-10)

    def test_exact_linear_recovery(self):
        times = np.arange(1.0, 6.0)
        window = make_window(times, 3.0 * times)
        trend = fit_trend(window, 1)
        coeffs = trend.unnormalized_coeffs()[:, 0]
        assert coeffs[0] == pytest.approx(0.0, abs=1e-9)
        assert coeffs[1] == pytest.approx(3.0, rel=1e-9)

    def test_quadratic_residual_tiny(self):
        times = np.arange(1.0, 7.0)
        values = times**2 - 2.0 * times + 1.0
        window = make_window(times, values)
        trend = fit_trend(window, 2)
        fitted = np.array([eval_trend(trend, t)[0] for t in times])
        assert np.linalg.norm(fitted - values) < 1e-9

    def test_underdetermined_rejected(self):
        window = make_window([1.0, 2.0], [0.0, 1.0])
        with pytest.raises(InsufficientDataError):
            fit_trend(window, 2)

    @given(
        st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=4),
        st.integers(min_value=5, max_value=9),
    )
    @settings(max_examples=40)
    def test_exact_interpolation_of_polynomials(self, coeffs, n_points):
        # noise-free polynomial input of degree <= fitted order is recovered
        times = np.linspace(1.0, 6.0, n_points)
        values = sum(c * times**i for i, c in enumerate(coeffs))
        window = make_window(times, values)
        trend = fit_trend(window, 3)
        errors = np.array([e.value[0] for e in fitting_errors(window, trend)])
        bound = 1e-8 * (1.0 + np.abs(values).max())
        assert np.abs(errors).max() < bound

    def test_perturbing_coefficients_never_improves(self):
        rng = np.random.default_rng(5)
        times = np.arange(1.0, 9.0)
        values = 0.5 * times**2 + rng.normal(size=times.size)
        window = make_window(times, values)
        trend = fit_trend(window, 2)

        def ssr(coeffs):
            perturbed = PolyTrend(coeffs, 2, trend.t_center, trend.t_scale,
                                  trend.window_end)
            errs = [e.value[0] for e in fitting_errors(window, perturbed)]
            return float(np.sum(np.square(errs)))

        base = ssr(trend.coeffs)
        for i in range(3):
            for delta in (-1e-3, 1e-3):
                bumped = trend.coeffs.copy()
                bumped[i, 0] += delta
                assert ssr(bumped) >= base - 1e-12

    @given(st.floats(min_value=-100, max_value=100))
    @settings(max_examples=25)
    def test_shift_equivariance(self, shift):
        rng = np.random.default_rng(17)
        times = np.arange(1.0, 7.0)
        values = rng.normal(size=times.size)
        t_probe = 3.7
        base = eval_trend(fit_trend(make_window(times, values), 2), t_probe)[0]
        shifted = eval_trend(
            fit_trend(make_window(times, values + shift), 2), t_probe
        )[0]
        assert shifted == pytest.approx(base + shift, rel=1e-9, abs=1e-7)


class TestEvalTrend:
    def test_constant(self):
        trend = PolyTrend(np.array([[7.0]]), 0, 0.0, 1.0, 0.0)
        for t in (-3.0, 0.0, 11.5):
            assert eval_trend(trend, t)[0] == 7.0

    def test_normalized_at_zero(self):
        trend = PolyTrend(np.array([[1.0], [2.0], [3.0]]), 2, 0.0, 1.0, 0.0)
        assert eval_trend(trend, 0.0)[0] == pytest.approx(1.0)

    def test_normalized_at_two(self):
        # 1 + 2*2 + 3*4 = 17
        trend = PolyTrend(np.array([[1.0], [2.0], [3.0]]), 2, 0.0, 1.0, 0.0)
        assert eval_trend(trend, 2.0)[0] == pytest.approx(17.0)

    def test_vectorized_times(self):
        trend = PolyTrend(np.array([[1.0, 0.0], [0.0, 1.0]]), 1, 0.0, 1.0, 0.0)
        out = eval_trend(trend, np.array([0.0, 2.0]))
        np.testing.assert_allclose(out, [[1.0, 0.0], [1.0, 2.0]])


class TestFittingErrors:
    def test_noise_free_quadratic(self):
        times = np.arange(1.0, 7.0)
        window = make_window(times, 2.0 * times**2 + times)
        errors = fitting_errors(window, fit_trend(window, 2))
        assert max(abs(e.value[0]) for e in errors) < 1e-9

    def test_matches_independent_ols_oracle(self):
        # oracle: numpy polyfit on raw time
        times = np.arange(1.0, 11.0)
        values = times**2 + np.sin(times)
        window = make_window(times, values)
        errors = np.array([e.value[0] for e in fitting_errors(window, fit_trend(window, 2))])
        oracle = values - np.polyval(np.polyfit(times, values, 2), times)
        np.testing.assert_allclose(errors, oracle, atol=1e-8)

    def test_outlier_shows_up_in_errors(self):
        times = np.arange(1.0, 9.0)
        values = 3.0 * times.copy()
        values[4] += 10.0
        window = make_window(times, values)
        errors = np.array([e.value[0] for e in fitting_errors(window, fit_trend(window, 2))])
        oracle = values - np.polyval(np.polyfit(times, values, 2), times)
        np.testing.assert_allclose(errors, oracle, atol=1e-8)
        assert errors[4] == pytest.approx(oracle[4])
        assert abs(errors[4]) > 5.0
