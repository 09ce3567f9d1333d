"""Entry-density construction, evaluation, and sampling."""
import numpy as np
import pytest

from saddletail.density import make_density, uniform_density


def test_uniform_density_is_flat_and_normalised():
    d = uniform_density((0.25, 0.75), 2)
    y = np.linspace(0.25, 0.75, 9)
    assert np.allclose(d.w(y), 2.0)  # 1/(hi-lo)
    assert np.allclose(d.h(np.linspace(0, 0.3, 5), 0.5), 1.0)
    assert d.n_coeffs == 2


def test_weight_normalisation():
    # w proportional to y on (0.5, 1): mass 0.375, so w(y) = y/0.375
    d = make_density((0.5, 1.0), [[1.0], [0.0]], [0.0, 1.0], kappa=2)
    assert d.w(0.7) == pytest.approx(0.7 / 0.375, rel=1e-13)


def test_h_series_uses_factorials():
    # h_0 = 1, h_1 = 0, h_2 = 6  ->  h(x, y) = 1 + 6 x^2 / 2! = 1 + 3 x^2
    d = make_density(
        (0.5, 1.0), [[1.0], [0.0], [6.0], [0.0]], [1.0], kappa=4
    )
    x = np.array([0.0, 0.1, 0.2])
    assert np.allclose(d.h(x, 0.6), 1.0 + 3.0 * x**2, rtol=1e-14)


def test_inner_mass_is_exact_antiderivative():
    # h(x, y) = 1 + 2x: integral to x_cut is x_cut + x_cut^2
    d = make_density((0.5, 1.0), [[1.0], [2.0]], [1.0], kappa=2)
    for xc in (0.05, 0.2):
        assert d.inner_mass(0.7, xc) == pytest.approx(xc + xc**2, rel=1e-13)


def test_sample_heights_inverts_uniform_cdf():
    lo, hi = 0.25, 0.75
    d = uniform_density((lo, hi), 2)
    draws = d.sample_heights(np.random.default_rng(0), 64)
    expect = lo + np.random.default_rng(0).random(64) * (hi - lo)
    assert np.all((draws >= lo) & (draws <= hi))
    assert np.allclose(draws, expect, rtol=0.0, atol=1e-9)


def test_sample_abscissae_flat_case():
    d = uniform_density((0.25, 0.75), 2)
    y = np.full(64, 0.5)
    x_max = np.full(64, 0.2)
    draws = d.sample_abscissae(np.random.default_rng(1), y, x_max)
    expect = np.random.default_rng(1).random(64) * 0.2
    assert np.allclose(draws, expect, rtol=0.0, atol=1e-9)


def test_make_density_validation():
    with pytest.raises(ValueError):
        make_density((0.75, 0.25), [[1.0], [0.0]], [1.0], kappa=2)
    with pytest.raises(ValueError):
        make_density((0.25, 0.75), [[1.0]], [1.0], kappa=2)  # wrong count
    with pytest.raises(ValueError):
        make_density((0.25, 0.75), [[1.0], [0.0]], [1.0, -4.0], kappa=2)
    with pytest.raises(ValueError):
        make_density((0.25, 0.75), [[0.0], [1.0]], [1.0], kappa=2)  # h_0 = 0
    with pytest.raises(ValueError):
        make_density((0.25, 0.75), [[1.0], [0.0]], [0.0], kappa=2)  # no mass
