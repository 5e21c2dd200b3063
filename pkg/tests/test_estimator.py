import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from poissonproj.basis import BasisFamily, Model, default_collection
from poissonproj.estimator import (
    ProjectionEstimate,
    Quadrature,
    contrast,
    evaluate,
    fit_projection,
    l2_error_sq,
    projection_of,
    sup_norm,
    true_coefficients,
)
from poissonproj.sampler import (
    CovariateProcessSpec,
    Sample,
    constant_intensity,
    simulate_dataset,
)

TRIG = BasisFamily.TRIGONOMETRIC
HIST = BasisFamily.DYADIC_HISTOGRAM


def one_point(x, y):
    return Sample(np.array([x]), np.array([y]))


class TestFit:
    def test_single_constant(self):
        est = fit_projection(one_point(0.25, 2), Model(TRIG, 0))
        assert est.coefficients.tolist() == [2.0]
        assert evaluate(est, 0.9) == 2.0

    def test_zero_counts(self):
        s = Sample(np.linspace(0, 1, 7), np.zeros(7, dtype=int))
        for fam in (TRIG, HIST):
            assert not np.any(fit_projection(s, Model(fam, 2)).coefficients)

    def test_histogram_point(self):
        est = fit_projection(one_point(0.1, 3), Model(HIST, 2))
        assert est.coefficients.tolist() == [6.0, 0.0, 0.0, 0.0]
        assert evaluate(est, 0.2) == 12.0

    def test_empty(self):
        with pytest.raises(ValueError):
            fit_projection(Sample(np.array([]), np.array([], dtype=int)), Model(TRIG, 0))

    def test_evaluate_range(self):
        est = fit_projection(one_point(0.1, 3), Model(HIST, 2))
        with pytest.raises(ValueError):
            evaluate(est, 1.01)

    @settings(max_examples=25, deadline=None)
    @given(m=st.integers(0, 5), seed=st.integers(0, 10**6), fam=st.sampled_from([TRIG, HIST]))
    def test_matches_definition(self, m, seed, fam):
        r = np.random.default_rng(seed)
        s = Sample(r.random(40), r.poisson(3.0, 40))
        model = Model(fam, m)
        est = fit_projection(s, model)
        direct = [np.mean(s.ys * model.design_matrix(s.xs)[:, k]) for k in range(model.dimension)]
        np.testing.assert_allclose(est.coefficients, direct, rtol=1e-12, atol=1e-12)
        x = r.random(5)
        np.testing.assert_allclose(est(x), model.design_matrix(x) @ est.coefficients, atol=1e-12)


class TestContrast:
    def test_self_contrast(self):
        est = ProjectionEstimate(Model(TRIG, 1), [1.0, 2.0, -1.0], 3)
        assert contrast(est, est) == pytest.approx(-6.0)

    def test_zero(self):
        z = ProjectionEstimate(Model(HIST, 1), [0.0, 0.0], 3)
        big = ProjectionEstimate(Model(HIST, 2), [1.0, 2.0, 3.0, 4.0], 3)
        assert contrast(z, big) == 0.0

    def test_nested_trig_example(self):
        s = Sample(np.array([0.1, 0.6]), np.array([3, 1]))
        small = fit_projection(s, Model(TRIG, 0))
        big = fit_projection(s, Model(TRIG, 1))
        assert small.coefficients[0] == 2.0
        assert contrast(small, big) == pytest.approx(-4.0, rel=1e-12)

    def test_mismatch(self):
        a = ProjectionEstimate(Model(TRIG, 2), np.zeros(5), 1)
        b = ProjectionEstimate(Model(TRIG, 1), np.zeros(3), 1)
        with pytest.raises(ValueError):
            contrast(a, b)
        with pytest.raises(ValueError):
            contrast(ProjectionEstimate(Model(HIST, 0), [0.0], 1), b)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), fam=st.sampled_from([TRIG, HIST]), n=st.integers(8, 200))
    def test_identity_and_monotone(self, seed, fam, n):
        s = Sample(np.random.default_rng(seed).random(n), np.random.default_rng(seed + 1).poisson(4.0, n))
        coll = default_collection(fam, n)
        ests = [fit_projection(s, m) for m in coll.models]
        top = ests[-1]
        values = []
        for est in ests:
            c = contrast(est, top)
            expected = -float(est.coefficients @ est.coefficients)
            assert c == pytest.approx(expected, rel=1e-12, abs=1e-12)
            values.append(c)
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))

    def test_contrast_matches_function_space(self, quad):
        # ||f||² - 2<λ̂_n, f> by quadrature of the functions themselves
        r = np.random.default_rng(3)
        s = Sample(r.random(64), r.poisson(5.0, 64))
        top = fit_projection(s, Model(HIST, 4))
        for m in range(5):
            est = fit_projection(s, Model(HIST, m))
            edges = [k / 16 for k in range(1, 16)]
            val = quad.integrate(lambda x: est(x) ** 2 - 2 * est(x) * top(x), edges)
            assert contrast(est, top) == pytest.approx(val, rel=1e-9)


class TestQuadrature:
    def test_validation(self):
        for bad in (0, 3):
            with pytest.raises(ValueError):
                Quadrature(panels=bad)

    def test_polynomial_exact(self):
        q = Quadrature(panels=2)
        assert q.integrate(lambda x: x**3) == pytest.approx(0.25, rel=1e-14)

    def test_l2_zero_estimate(self, paper, quad):
        zero = ProjectionEstimate(Model(HIST, 3), np.zeros(8), 1)
        assert l2_error_sq(zero, paper, quad) == pytest.approx(575 / 12, abs=1e-8)

    def test_l2_exact_constant(self, quad):
        est = ProjectionEstimate(Model(TRIG, 0), [2.5], 1)
        assert l2_error_sq(est, constant_intensity(2.5), quad) <= 1e-12

    def test_l2_unit(self, quad):
        est = ProjectionEstimate(Model(TRIG, 0), [1.0], 1)
        assert l2_error_sq(est, constant_intensity(0.0), quad) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("m", [0, 3, 7])
    def test_l2_against_adaptive_quadrature(self, paper, quad, m):
        r = np.random.default_rng(m)
        est = ProjectionEstimate(Model(HIST, m), r.normal(3, 1, 2**m), 1)
        d = 2**m
        pieces = sorted({k / d for k in range(d + 1)} | {0.5})
        ref = sum(
            integrate.quad(lambda x: (float(est(x)) - float(paper(x))) ** 2, a, b, epsabs=1e-13)[0]
            for a, b in zip(pieces[:-1], pieces[1:])
        )
        assert l2_error_sq(est, paper, quad) == pytest.approx(ref, rel=1e-9)

    def test_true_coefficients_against_scipy(self, paper, quad):
        model = Model(TRIG, 2)
        got = true_coefficients(model, paper, quad)
        for k, eta in enumerate(model.etas):
            f = lambda x: float(paper(x)) * float(model.design_matrix([x])[0, k])
            ref = integrate.quad(f, 0, 0.5)[0] + integrate.quad(f, 0.5, 1)[0]
            assert got[k] == pytest.approx(ref, abs=1e-9)


class TestSupNorm:
    def test_histogram_exact(self):
        est = ProjectionEstimate(Model(HIST, 2), np.array([2.0, 0.0, -1.0, 5.0]) / 2.0, 1)
        assert sup_norm(est) == 5.0

    def test_zero(self):
        assert sup_norm(ProjectionEstimate(Model(TRIG, 3), np.zeros(7), 1)) == 0.0

    def test_trig_cosine(self):
        est = ProjectionEstimate(Model(TRIG, 1), [0.0, 1.0, 0.0], 1)
        assert sup_norm(est, 4096) == pytest.approx(math.sqrt(2), rel=1e-6)

    def test_resolution(self):
        with pytest.raises(ValueError):
            sup_norm(ProjectionEstimate(Model(TRIG, 0), [1.0], 1), 1)


@pytest.mark.parametrize("fam,m", [(TRIG, 2), (HIST, 3)])
def test_pythagoras_per_replicate(paper, quad, fam, m):
    model = Model(fam, m)
    proj = projection_of(model, paper, quad)
    bias = paper.l2_norm_sq - float(proj.coefficients @ proj.coefficients)
    for seed in range(20):
        s = simulate_dataset(paper, CovariateProcessSpec(), 256, seed)
        est = fit_projection(s, model)
        var = float(np.sum((est.coefficients - proj.coefficients) ** 2))
        assert l2_error_sq(est, paper, quad) == pytest.approx(bias + var, rel=1e-8, abs=1e-8)
