import math

import numpy as np
import pytest
from scipy import stats

from pertspec.errors import WindingMismatch
from pertspec.gaf import (GafSample, LimitProcessSpec, _newton, det_sigma_matrix, find_det_zeros, find_zeros,
                          polynomial_roots, sample_gaf, sample_gaf_matrix, sample_limit_process,
                          translate_process, truncation_level)
from pertspec.rng import derive_seed

from conftest import matched_distance


def _counts(samples):
    c = np.array(samples, dtype=float)
    return c.mean(), c.std(ddof=1) / math.sqrt(c.size)


def test_truncation_tail_bound():
    for sigma in (0.25, 0.5, 1.0):
        for R in (1.0, 3.0, 6.0):
            N = truncation_level(sigma, R)
            n = np.arange(N + 1, N + 400)
            lt = 0.5 * (n * math.log(sigma * R * R) - np.array([math.lgamma(k + 1) for k in n]))
            tail = np.exp(lt - sigma * R * R / 2).sum()
            assert tail <= 1e-3
            n0 = N  # one fewer term would violate the bound
            lt0 = 0.5 * (np.arange(n0, n0 + 400) * math.log(sigma * R * R)
                         - np.array([math.lgamma(k + 1) for k in range(n0, n0 + 400)]))
            assert np.exp(lt0 - sigma * R * R / 2).sum() > 1e-3


def test_coefficients_and_prefix_stability():
    a = sample_gaf(0.5, 2.0, 11)
    b = sample_gaf(0.5, 5.0, 11)
    assert np.all(np.isfinite(b.coefficients))
    assert np.array_equal(a.coefficients, b.coefficients[: a.coefficients.size])


def test_covariance_and_variance():
    sigma, u, w = 0.8, 0.3, 0.5 + 0.2j
    M = 5000
    gu = np.empty(M, complex)
    gw = np.empty(M, complex)
    g0 = np.empty(M, complex)
    for s in range(M):
        g = sample_gaf(sigma, 1.0, s)
        gu[s], gw[s], g0[s] = g(u), g(w), g(0.0)
    prod = gu * gw.conj()
    se = prod.std(ddof=1) / math.sqrt(M)
    assert abs(prod.mean() - np.exp(sigma * u * np.conj(w))) <= 3 * se
    var_w = np.abs(gw) ** 2
    assert abs(var_w.mean() - math.exp(sigma * abs(w) ** 2)) <= 3 * var_w.std(ddof=1) / math.sqrt(M)
    # g(0) is the n = 0 coefficient: standard complex Gaussian
    assert abs(np.mean(np.abs(g0) ** 2) - 1) <= 3 * np.std(np.abs(g0) ** 2) / math.sqrt(M)
    assert stats.kstest(np.abs(g0) ** 2, "expon").pvalue > 0.001


def test_constructed_polynomial():
    coef = np.array([-0.1j, 0.2j - 0.5, 1.0, 0, 0, 0], dtype=complex)
    g = GafSample(1.0, 5, coef, 2.0, 0)
    z = find_zeros(g).zeros
    assert matched_distance(z, [0.5, -0.2j]) < 1e-10


def test_polynomial_roots_with_zero_root():
    r = polynomial_roots(np.array([0, 0, -2, 1], dtype=complex))
    assert matched_distance(r, [0, 0, 2]) < 1e-12


@pytest.mark.parametrize("sigma", [0.25, 0.5, 1.0])
def test_zero_count_mean(sigma):
    R = 3.0
    m, se = _counts([len(find_zeros(sample_gaf(sigma, R, s))) for s in range(2000)])
    assert abs(m - sigma * R * R) <= 3 * se


def test_zero_residuals_and_window():
    for s in range(50):
        g = sample_gaf(1.0, 4.0, s)
        zs = find_zeros(g)
        assert np.all(np.abs(zs.zeros) < 4.0)
        assert np.all(zs.residuals <= 1e-8 * np.exp(np.abs(zs.zeros) ** 2 / 2))


def test_scaling_covariance():
    # zeros of g_sigma are zeros of g_1 dilated by 1/sqrt(sigma)
    sigma, M = 0.25, 1500
    edges = np.array([0, 1.5, 3, 4.5, 6.0])
    a = np.zeros((M, 4))
    b = np.zeros((M, 4))
    for s in range(M):
        za = np.abs(find_zeros(sample_gaf(sigma, 6.0, s)).zeros)
        zb = np.abs(find_zeros(sample_gaf(1.0, 3.0, 10**6 + s)).zeros) / math.sqrt(sigma)
        a[s] = np.histogram(za, edges)[0]
        b[s] = np.histogram(zb, edges)[0]
    diff = a.mean(0) - b.mean(0)
    se = np.sqrt(a.var(0, ddof=1) / M + b.var(0, ddof=1) / M)
    assert np.all(np.abs(diff) <= 3 * se)


def test_product_j1_is_single_gaf():
    spec = LimitProcessSpec("ProductV", [0.7], 3.0, seed=5)
    single = find_zeros(sample_gaf(0.7, 3.0, derive_seed(5, 0)))
    assert np.array_equal(sample_limit_process(spec).zeros, single.zeros)


def test_product_is_union_of_factors():
    spec = LimitProcessSpec("ProductV", [0.4, 1.1], 3.0, seed=8)
    parts = [find_zeros(sample_gaf(s, 3.0, derive_seed(8, j))).zeros for j, s in enumerate([0.4, 1.1])]
    assert np.array_equal(sample_limit_process(spec).zeros, np.concatenate(parts))


def test_det_j1_is_single_gaf():
    spec = LimitProcessSpec("DetM", [[0.9]], 3.0, seed=2)
    single = find_zeros(sample_gaf(0.9, 3.0, derive_seed(2, 0)))
    assert matched_distance(sample_limit_process(spec).zeros, single.zeros) < 1e-10


def test_det_zeros_match_companion_oracle():
    S = det_sigma_matrix([0.6, 1.1], [0.8, 0.5])
    for seed in range(15):
        M = sample_gaf_matrix(S, 3.0, seed)
        got = find_det_zeros(M, 0j, 3.0, float(np.trace(S)) / math.pi).zeros
        r = polynomial_roots(M.det_coefficients(), scale=3.0)
        r = _newton(M.det, M.det_derivative, r[np.abs(r) < 3.2])
        r = r[np.abs(r) < 3.0]
        assert got.size == r.size
        assert matched_distance(got, r) < 1e-9


def test_det_j2_count_mean():
    sigma, R = 1.0, 2.5
    spec = lambda s: LimitProcessSpec("DetM", np.full((2, 2), sigma), R, seed=s)
    m, se = _counts([len(sample_limit_process(spec(s))) for s in range(400)])
    assert abs(m - 2 * sigma * R * R) <= 3 * se


def test_det_derivative_jacobi():
    S = np.array([[0.5, 0.9], [1.2, 0.4]])
    M = sample_gaf_matrix(S, 2.0, 3)
    w = np.array([0.3 + 0.1j, -1.0 + 0.5j])
    eps = 1e-6
    fd = (M.det(w + eps) - M.det(w - eps)) / (2 * eps)
    assert np.allclose(M.det_derivative(w), fd, rtol=1e-6)


def test_det_sigma_convention():
    S = det_sigma_matrix([1.0, 2.0], [10.0, 20.0])
    assert S[0, 1] == (2.0 + 10.0) / 2 and S[1, 0] == (1.0 + 20.0) / 2


def test_spec_validation():
    with pytest.raises(ValueError):
        LimitProcessSpec("ProductV", [0.0], 1.0)
    with pytest.raises(ValueError):
        LimitProcessSpec("DetM", [1.0, 2.0], 1.0)
    with pytest.raises(ValueError):
        LimitProcessSpec("Other", [1.0], 1.0)


def test_winding_mismatch_on_boundary_zero():
    # a polynomial with a zero exactly on the window circle cannot be certified
    from pertspec.gaf import GafMatrix

    g = GafSample(1.0, 1, np.array([-2.0, 1.0], complex), 2.0, 0)
    with pytest.raises(WindingMismatch):
        find_det_zeros(GafMatrix([[g]]), 0j, 2.0, 1.0)


def test_zero_between_boundary_chord_and_arc():
    # the boundary winding is taken along an inscribed polygon; a zero just
    # inside the circle but outside that polygon must not trip the cross-check
    from pertspec.gaf import GafMatrix, _inside_polygon

    w0 = 2.0 * (1 - 1e-5) * np.exp(1j * math.pi / 256)
    assert not _inside_polygon(np.array([w0]), 0j, 2.0)[0]
    g = GafSample(1.0, 1, np.array([-w0, 1.0]), 2.0, 0)
    zs = find_det_zeros(GafMatrix([[g]]), 0j, 2.0, 1.0)
    assert zs.zeros.size == 1 and abs(zs.zeros[0] - w0) < 1e-12


def test_translate_identity():
    spec = LimitProcessSpec("ProductV", [0.5, 1.0], 3.0, seed=4)
    assert np.allclose(translate_process(spec, 1.0, 0.0).zeros, sample_limit_process(spec).zeros)
    with pytest.raises(ValueError):
        translate_process(spec, 2.0, 0.0)


def test_translation_rotation_count_means():
    spec = lambda s: LimitProcessSpec("ProductV", [0.5, 1.0], 2.0, seed=s)
    M = 800
    a = [len(sample_limit_process(spec(s))) for s in range(M)]
    b = [len(translate_process(spec(s), np.exp(0.7j), 1.5 - 2.0j)) for s in range(M)]
    (ma, sa), (mb, sb) = _counts(a), _counts(b)
    assert abs(ma - mb) <= 3 * math.hypot(sa, sb)
    assert abs(ma - 1.5 * 4.0) <= 3 * sa


def test_det_residuals_relative_to_scale():
    spec = LimitProcessSpec("DetM", det_sigma_matrix([0.6, 1.1], [0.8, 0.5]), 3.0, seed=1)
    zs = sample_limit_process(spec)
    assert len(zs) > 0
    assert np.all(zs.residuals <= 1e-8 * np.exp(spec.scale_exponent * np.abs(zs.zeros) ** 2))
