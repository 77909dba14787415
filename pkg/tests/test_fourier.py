"""Truncated Fourier series: arithmetic, composition, inversion, clamping."""

import pickle

import numpy as np
import pytest

from kamforge.errors import NearSingularError
from kamforge.fourier import (
    FourierSeries,
    clamp_small,
    compose_id_plus,
    derivative,
    evaluate,
    grid_values,
    invert_pointwise,
    mean,
    pad_to,
    product,
    strip_norm_bound,
    sup_norm,
    truncate,
)

TWO_PI = 2.0 * np.pi


def random_series(rng, N, amp=1.0, decay=0.5):
    ks = np.arange(-N, N + 1)
    mag = amp * np.exp(-decay * np.abs(ks))
    return FourierSeries(mag * (rng.standard_normal(2 * N + 1)
                                + 1j * rng.standard_normal(2 * N + 1)))


def eval_direct(phi, theta):
    # independent slow oracle: plain sum of c_k exp(2 pi i k theta)
    total = 0j
    for k in range(-phi.N, phi.N + 1):
        total += phi.coeff(k) * np.exp(2j * np.pi * k * theta)
    return total


def test_validation():
    with pytest.raises(ValueError):
        FourierSeries([1.0, 2.0])            # even length
    with pytest.raises(ValueError):
        FourierSeries([[1.0], [2.0], [3.0]])  # not 1-d
    with pytest.raises(ValueError):
        FourierSeries([1.0, np.inf, 1.0])


def test_immutability_and_pickle():
    s = FourierSeries([1.0, 2.0, 3.0])
    with pytest.raises(AttributeError):
        s.coeffs = np.zeros(3)
    with pytest.raises(ValueError):
        s.coeffs[0] = 9.0  # numpy read-only buffer
    t = pickle.loads(pickle.dumps(s))
    assert np.array_equal(t.coeffs, s.coeffs)


def test_coeff_indexing():
    s = FourierSeries.basis(3, 2.0)
    assert s.N == 3
    assert s.coeff(3) == 2.0
    assert s.coeff(-3) == 0.0
    assert s.coeff(99) == 0.0


def test_cos_shorthand():
    f = FourierSeries.cos()
    assert f.N == 1
    assert f.coeff(1) == 0.5 and f.coeff(-1) == 0.5 and f.coeff(0) == 0.0
    # cos(2 pi theta) at theta = 0, 1/4, 1/2
    assert abs(evaluate(f, 0.0) - 1.0) < 1e-15
    assert abs(evaluate(f, 0.25)) < 1e-15
    assert abs(evaluate(f, 0.5) + 1.0) < 1e-15


def test_evaluate_matches_direct_sum():
    rng = np.random.default_rng(7)
    s = random_series(rng, 9)
    for theta in [0.0, 0.37, 1.91, 0.1 + 0.02j, -0.3 - 0.01j]:
        assert abs(evaluate(s, theta) - eval_direct(s, theta)) < 1e-12


def test_mean_is_zero_mode():
    rng = np.random.default_rng(8)
    s = random_series(rng, 6)
    assert mean(s) == s.coeff(0)


def test_addition_aligns_cutoffs():
    rng = np.random.default_rng(9)
    a = random_series(rng, 4)
    b = random_series(rng, 7)
    c = (a + b) - b
    assert c.N == 7
    assert sup_norm(c - a) < 1e-15  # up to add/sub rounding
    assert np.array_equal((2.0 * a).coeffs, a.coeffs * 2.0)


def test_product_is_convolution():
    # basis(j, x) * basis(k, y) = basis(j + k, x y) exactly
    p = product(FourierSeries.basis(2, 1.5), FourierSeries.basis(3, -2.0))
    assert p.coeff(5) == -3.0
    assert sup_norm(p - FourierSeries.basis(5, -3.0)) == 0.0
    rng = np.random.default_rng(10)
    a = random_series(rng, 5)
    b = random_series(rng, 3)
    # independent oracle: numpy full convolution
    conv = np.convolve(a.coeffs, b.coeffs)
    assert np.max(np.abs(product(a, b).coeffs - conv)) < 1e-15


def test_derivative_law():
    k = 4
    d = derivative(FourierSeries.basis(k, 1.0))
    assert abs(d.coeff(k) - 2j * np.pi * k) < 1e-15
    # derivative of a product = Leibniz (on a random instance)
    rng = np.random.default_rng(11)
    a = random_series(rng, 4)
    b = random_series(rng, 4)
    lhs = derivative(product(a, b))
    rhs = product(derivative(a), b) + product(a, derivative(b))
    assert sup_norm(lhs - rhs) < 1e-12 * max(sup_norm(lhs), 1.0)


def test_pad_truncate_roundtrip():
    rng = np.random.default_rng(12)
    s = random_series(rng, 5)
    padded = pad_to(s, 12)
    assert padded.N == 12
    back, tail = truncate(padded, 5)
    assert tail == 0.0
    assert np.array_equal(back.coeffs, s.coeffs)
    small, tail2 = truncate(s, 2)
    assert small.N == 2
    assert tail2 == float(np.max(np.abs(
        np.concatenate([s.coeffs[:3], s.coeffs[-3:]]))))


def test_grid_values_match_evaluate():
    rng = np.random.default_rng(13)
    s = random_series(rng, 6)
    G = 32
    vals = grid_values(s, G)
    theta = np.arange(G) / G
    assert np.max(np.abs(vals - evaluate(s, theta))) < 1e-12


def test_compose_zero_displacement_is_identity():
    f = FourierSeries.cos()
    out, rep = compose_id_plus(f, FourierSeries.zero(0))
    assert np.array_equal(out.coeffs, f.coeffs)
    assert rep.aliasing_tail == 0.0


def test_compose_constant_shift_phase_law():
    # f(theta + c) has coefficients c_k exp(2 pi i k c), exactly
    rng = np.random.default_rng(14)
    f = random_series(rng, 5)
    c = 0.21 - 0.04j
    out, rep = compose_id_plus(f, FourierSeries.constant(c))
    ks = np.arange(-f.N, f.N + 1)
    assert np.array_equal(out.coeffs, f.coeffs * np.exp(2j * np.pi * ks * c))
    assert rep.aliasing_tail == 0.0


def test_compose_general_matches_pointwise():
    # f(theta + u(theta)) sampled two ways: composed series vs direct values
    rng = np.random.default_rng(15)
    f = random_series(rng, 6, decay=1.0)
    u = random_series(rng, 4, amp=0.005, decay=1.0)
    comp, rep = compose_id_plus(f, u, cutoff=24)
    theta = np.arange(128) / 128.0
    direct = evaluate(f, theta + evaluate(u, theta))
    assert np.max(np.abs(evaluate(comp, theta) - direct)) < 1e-12
    assert rep.aliasing_tail < 1e-12
    # the default cutoff truncates more and says so in the report
    _, rep_default = compose_id_plus(f, u)
    assert rep_default.aliasing_tail > rep.aliasing_tail


def test_invert_pointwise_inverse():
    f = FourierSeries([0.5, 2.0, 0.5])  # 2 + cos, strictly positive
    inv = invert_pointwise(f)
    one = product(f, inv)
    assert abs(mean(one) - 1.0) < 1e-13
    theta = np.arange(48) / 48.0
    assert np.max(np.abs(evaluate(one, theta) - 1.0)) < 1e-12


def test_invert_pointwise_near_singular():
    f = FourierSeries([0.5, 1.0, 0.5])  # 1 + cos vanishes at theta = 1/2
    with pytest.raises(NearSingularError):
        invert_pointwise(f)


def test_clamp_small_drops_noise_tail():
    c = np.zeros(41, dtype=np.complex128)
    c[20 + 1] = 1.0
    c[20 + 15] = 1e-19       # far-mode junk below 1e-16 relative
    c[20 - 18] = -3e-20
    s = clamp_small(FourierSeries(c))
    assert s.N == 1
    assert s.coeff(1) == 1.0
    assert s.coeff(15) == 0.0
    # rel = 0 disables clamping
    t = clamp_small(FourierSeries(c), rel=0.0)
    assert t.coeff(15) == 1e-19


def test_strip_norm_bound_values():
    # basis(1): sum |c_k| e^(2 pi r |k|) = e^(2 pi r)
    b = FourierSeries.basis(1, 1.0)
    r = 0.25
    assert abs(strip_norm_bound(b, r) - np.exp(TWO_PI * r)) < 1e-12
    assert strip_norm_bound(b, 0.0) == 1.0
    with pytest.raises(ValueError):
        strip_norm_bound(b, -0.1)


def test_json_roundtrip_exact():
    rng = np.random.default_rng(16)
    s = random_series(rng, 8)
    t = FourierSeries.from_json_dict(s.to_json_dict())
    assert np.array_equal(s.coeffs, t.coeffs)
