import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from oracles import (
    normal_equations_fit,
    slr_half_width,
    slr_standard_errors,
    t_critical_quadrature,
)
from sigscope.exceptions import DegenerateGeometryError, InsufficientPointsError, ValidationError
from sigscope.regression import (
    ConfidenceBand,
    FittedCurve,
    PolynomialCurveRegressor,
    band_half_width,
    confidence_ellipse,
    ellipse_contains,
    fit_clusters,
    fit_polynomial,
    fits_from_dict,
    fits_to_dict,
    select_degree,
    t_critical,
)


def _noisy(n, coeffs, sigma, seed, lo=-1.0, hi=1.0):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.uniform(lo, hi, n))
    y = np.polynomial.polynomial.polyval(x, coeffs) + rng.normal(0, sigma, n)
    return x, y


class TestFit:
    def test_exact_line(self):
        x = np.arange(6.0)
        c = fit_polynomial(x, 2 + 3 * x, 1)
        np.testing.assert_allclose(c.coeffs, [2, 3], atol=1e-12)
        assert c.ss == pytest.approx(0, abs=1e-24)
        assert c.r_squared == 1.0
        assert c.df == 4

    def test_recovers_decreasing_line(self):
        x = np.linspace(-2, 3, 9)
        c = fit_polynomial(x, 0.149 - 0.092 * x, 1)
        np.testing.assert_allclose(c.coeffs, [0.149, -0.092], atol=1e-12)
        assert c.equation() == "y = 0.149 - 0.092x"

    def test_matches_normal_equations(self):
        x, y = _noisy(10, [1, -2, 0.5], 0.3, seed=0)
        c = fit_polynomial(x, y, 2)
        np.testing.assert_allclose(c.coeffs, normal_equations_fit(x, y, 2), rtol=1e-8, atol=1e-8)

    def test_insufficient_points(self):
        with pytest.raises(InsufficientPointsError):
            fit_polynomial([0, 1, 2], [0, 1, 2], 2)

    def test_identical_x(self):
        with pytest.raises(DegenerateGeometryError):
            fit_polynomial([1, 1, 1, 1], [0, 1, 2, 3], 1)

    def test_too_few_distinct_x(self):
        with pytest.raises(DegenerateGeometryError):
            fit_polynomial([0, 0, 1, 1, 1], [0, 1, 2, 3, 4], 2)

    def test_offset_frame_is_well_conditioned(self):
        # large raw coordinates, cubic
        x = np.linspace(1000, 1010, 12)
        y = 3 + 0.5 * (x - 1005) ** 3
        c = fit_polynomial(x, y, 3)
        np.testing.assert_allclose(c.predict(x), y, rtol=1e-10)

    def test_covariance_matches_slr_standard_errors(self):
        x, y = _noisy(15, [0.5, 2.0], 0.4, seed=3)
        c = fit_polynomial(x, y, 1)
        se0, se1 = slr_standard_errors(x, y)
        np.testing.assert_allclose(np.sqrt(np.diag(c.covariance)), [se0, se1], rtol=1e-9)

    def test_covariance_is_symmetric_psd(self):
        x, y = _noisy(12, [0, 1, -1, 0.5], 0.2, seed=4)
        c = fit_polynomial(x, y, 3)
        np.testing.assert_array_equal(c.covariance, c.covariance.T)
        assert np.linalg.eigvalsh(c.covariance).min() >= -1e-12 * np.abs(c.covariance).max()


class TestSelectDegree:
    def test_line_with_tiny_noise(self):
        x, y = _noisy(20, [1, 2], 1e-3, seed=0)
        assert select_degree(x, y, 3).degree == 1

    def test_cubic(self):
        x = np.linspace(-0.5, 1.5, 15)
        y = -0.234 + 1.462 * x - 2.244 * x**2 + 1.117 * x**3
        c = select_degree(x, y, 3)
        assert c.degree == 3
        np.testing.assert_allclose(c.coeffs, [-0.234, 1.462, -2.244, 1.117], atol=1e-9)

    def test_odd_cubic_not_stopped_by_flat_quadratic_step(self):
        x = np.linspace(-1, 1, 21)
        assert select_degree(x, x**3 - x, 3).degree == 3

    def test_feasibility_cap(self):
        x = np.array([0.0, 1.0, 2.0, 3.0])
        y = np.array([0.0, 1.0, 5.0, 2.0])
        assert select_degree(x, y, 5).degree <= 2

    def test_needs_three_points(self):
        with pytest.raises(InsufficientPointsError):
            select_degree([0, 1], [0, 1], 3)


class TestTCritical:
    def test_df10(self):
        assert t_critical(0.05, 10) == pytest.approx(2.2281, abs=1e-3)
        assert t_critical(0.05, 10) == pytest.approx(t_critical_quadrature(0.05, 10), abs=1e-9)

    def test_normal_limit(self):
        assert t_critical(0.05, 1e7) == pytest.approx(1.959964, abs=1e-5)

    @pytest.mark.parametrize("df", [1, 2, 5, 10, 30, 100])
    @pytest.mark.parametrize("alpha", [0.01, 0.05, 0.32])
    def test_against_quadrature(self, alpha, df):
        assert t_critical(alpha, df) == pytest.approx(t_critical_quadrature(alpha, df), abs=1e-6)

    def test_shrinks_to_zero(self):
        vals = [t_critical(a, 5) for a in (0.5, 0.9, 0.99, 0.9999)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-3

    @pytest.mark.parametrize("alpha,df", [(0, 5), (1, 5), (0.05, 0), (-0.1, 3)])
    def test_invalid(self, alpha, df):
        with pytest.raises(ValidationError):
            t_critical(alpha, df)


class TestBand:
    def test_slr_closed_form(self):
        x, y = _noisy(12, [1, -0.5], 0.3, seed=5)
        band = ConfidenceBand.from_curve(fit_polynomial(x, y, 1), 0.05)
        probe = np.linspace(-3, 3, 20)
        np.testing.assert_allclose(band.half_width(probe), slr_half_width(x, y, probe, 0.05), rtol=1e-9)

    def test_unscaled_reading_gives_same_band(self):
        x, y = _noisy(14, [0, 1, 2], 0.2, seed=6)
        c = fit_polynomial(x, y, 2)
        band = ConfidenceBand.from_curve(c)
        V = np.vander(x, 3, increasing=True)
        unscaled = np.linalg.inv(V.T @ V)
        for x0 in (-1.5, 0.0, 0.7):
            g = np.array([1, x0, x0**2])
            textbook_form = np.sqrt(g @ unscaled @ g) * np.sqrt(c.ss / c.df) * band.t_crit
            assert band_half_width(band, x0) == pytest.approx(textbook_form, rel=1e-8)
            assert band_half_width(band, x0) == pytest.approx(
                band.t_crit * np.sqrt(g @ c.covariance @ g), rel=1e-8
            )

    def test_positive_when_ss_positive(self):
        x, y = _noisy(8, [0, 1], 0.1, seed=7)
        band = ConfidenceBand.from_curve(fit_polynomial(x, y, 1))
        assert np.all(band.half_width(np.linspace(-100, 100, 50)) > 0)

    def test_minimum_at_mean_x(self):
        x, y = _noisy(10, [2, 1], 0.5, seed=8)
        band = ConfidenceBand.from_curve(fit_polynomial(x, y, 1))
        grid = np.linspace(x.min(), x.max(), 20001)
        xmin = grid[np.argmin(band.half_width(grid))]
        assert xmin == pytest.approx(x.mean(), abs=2 * (grid[1] - grid[0]))

    def test_exact_fit_has_zero_width(self):
        x = np.linspace(0, 1, 6)
        c = fit_polynomial(x, 1 + x, 1)
        band = ConfidenceBand.from_curve(c)
        assert band.half_width(0.3) == pytest.approx(0, abs=1e-12)
        np.testing.assert_allclose(c.predict(x), 1 + x, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.01, 0.4), st.floats(0.41, 0.9))
    def test_nesting(self, seed, a1, a2):
        x, y = _noisy(9, [0, 1, 1], 0.3, seed=seed)
        c = fit_polynomial(x, y, 2)
        grid = np.linspace(-2, 2, 40)
        wide = ConfidenceBand.from_curve(c, a1).half_width(grid)
        narrow = ConfidenceBand.from_curve(c, a2).half_width(grid)
        assert np.all(wide >= narrow)


class TestEllipse:
    def test_square(self):
        e = confidence_ellipse([(0, 0), (2, 0), (0, 2), (2, 2)], 0.05)
        assert e.center == (1.0, 1.0)
        assert (e.semi_axis_x, e.semi_axis_y) == pytest.approx((1.9, 1.9))

    def test_coincident(self):
        e = confidence_ellipse([(1, 1)] * 3, 0.05)
        assert (e.semi_axis_x, e.semi_axis_y) == (0, 0)
        assert ellipse_contains(e, (1, 1))
        assert not ellipse_contains(e, (1, 1.0000001))

    def test_random_cloud(self):
        P = np.random.default_rng(0).normal(size=(30, 2))
        e = confidence_ellipse(P, 0.05)
        np.testing.assert_allclose(e.center, [np.mean(P[:, 0]), np.mean(P[:, 1])], atol=1e-12)
        np.testing.assert_allclose(
            [e.semi_axis_x, e.semi_axis_y],
            [(max(P[:, 0]) - min(P[:, 0])) * 0.95, (max(P[:, 1]) - min(P[:, 1])) * 0.95],
            atol=1e-12,
        )

    def test_one_point(self):
        with pytest.raises(InsufficientPointsError):
            confidence_ellipse([(0, 0)], 0.05)

    def test_membership(self):
        e = confidence_ellipse([(0, 0), (2, 0), (0, 2), (2, 2)], 0.05)
        a = e.semi_axis_x
        assert ellipse_contains(e, e.center)
        assert ellipse_contains(e, (1 + a, 1))
        assert not ellipse_contains(e, (1 + a * 1.001, 1))

    @given(st.floats(0.01, 0.5), st.floats(0.51, 0.99))
    def test_nesting(self, a1, a2):
        P = np.random.default_rng(1).normal(size=(10, 2))
        e1, e2 = confidence_ellipse(P, a1), confidence_ellipse(P, a2)
        assert e1.semi_axis_x >= e2.semi_axis_x and e1.semi_axis_y >= e2.semi_axis_y


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(-50, 50), st.floats(-50, 50), st.integers(1, 3))
def test_translation_equivariance(seed, dx, dy, degree):
    x, y = _noisy(12, [0.3, -1, 0.5, 0.2], 0.2, seed=seed)
    a = fit_polynomial(x, y, degree)
    b = fit_polynomial(x + dx, y + dy, degree)
    probe = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(b.predict(probe + dx), a.predict(probe) + dy, atol=1e-8)
    assert b.ss == pytest.approx(a.ss, rel=1e-6, abs=1e-12)
    assert b.r_squared == pytest.approx(a.r_squared, abs=1e-9)


def test_fit_clusters_skips_small_clusters():
    pts = np.array([[0, 0], [1, 1], [2, 2.1], [3, 2.9], [10, 10], [20, 20], [21, 21]], dtype=float)
    ids = np.array([0, 0, 0, 0, 1, 2, 2])
    fits = fit_clusters(pts, ids)
    assert fits[0].curve is not None and fits[0].band is not None
    assert fits[1].ellipse is None and fits[1].curve is None
    assert fits[2].ellipse is not None and fits[2].curve is None


def test_fits_json_round_trip():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(0, 1, 12), rng.uniform(0, 1, 12)])
    ids = np.repeat([0, 1, 2], [6, 5, 1])
    fits = fit_clusters(pts, ids)
    import json

    back = fits_from_dict(json.loads(json.dumps(fits_to_dict(fits))))
    for cid in fits:
        a, b = fits[cid], back[cid]
        assert (a.curve is None) == (b.curve is None)
        if a.curve is not None:
            assert a.band.half_width(0.37) == b.band.half_width(0.37)
            assert a.curve.predict(0.37) == b.curve.predict(0.37)
        if a.ellipse is not None:
            assert a.ellipse == b.ellipse


def test_curve_from_coefficients():
    c = FittedCurve.from_coefficients([1, 0, 2])
    assert c.degree == 2
    assert c.predict(2.0) == pytest.approx(9.0)
    assert c.derivative(2.0) == pytest.approx(8.0)


class TestRegressor:
    def test_fit_predict_score(self):
        x, y = _noisy(30, [1, 2, -1], 0.01, seed=9)
        model = PolynomialCurveRegressor().fit(x[:, None], y)
        assert model.degree_ == 2
        assert model.score(x[:, None], y) > 0.99
        lo, hi = model.predict_band(x[:, None])
        assert np.all(lo <= hi)

    def test_fixed_degree_and_clone(self):
        model = PolynomialCurveRegressor(degree=1, alpha=0.1)
        twin = clone(model)
        assert twin.get_params()["degree"] == 1
        x = np.linspace(0, 1, 5)
        twin.fit(x[:, None], 3 * x)
        assert twin.intercept_ == pytest.approx(0, abs=1e-12)
        np.testing.assert_allclose(twin.coef_, [3])

    def test_rejects_multi_column(self):
        with pytest.raises(ValueError):
            PolynomialCurveRegressor().fit(np.ones((5, 2)), np.ones(5))
