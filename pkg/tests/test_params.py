"""Parameter validation and derived-constant arithmetic."""
import math

import numpy as np
import pytest

from saddletail.errors import DegenerateDelta
from saddletail.params import (
    MeasureClass,
    SaddleParams,
    default_section,
    derive_constants,
    make_rect,
    rescale,
    validate,
)

P1 = SaddleParams(1.0, 3.0, 2.0, 1.0, 2)
P2 = SaddleParams(1.0, 1.0, 1.0, 2.0, 2)


def test_p1_constants_by_hand():
    d = derive_constants(P1)
    assert d.delta == 5.0
    assert d.u == pytest.approx(2 * 1 * 3 / 5, rel=1e-15)
    assert d.v == pytest.approx(2 * 1 * 4 / 5, rel=1e-15)
    assert d.beta0 == pytest.approx(1.5, rel=1e-15)
    assert d.beta2 == pytest.approx(2.0, rel=1e-15)
    assert d.c0 == 3.0 and d.c2 == 4.0
    assert d.beta_star == pytest.approx(0.5, rel=1e-15)
    assert d.measure_class is MeasureClass.FINITE_SRB
    assert not d.divergence_free


def test_p2_constants_by_hand():
    d = derive_constants(P2)
    assert d.delta == -1.0
    assert d.u == pytest.approx(-8.0, rel=1e-15)
    assert d.v == pytest.approx(-6.0, rel=1e-15)
    # u + v + kappa collapses to kappa*c0*c2/delta
    assert d.u + d.v + 2 == pytest.approx(2 * 2 * 3 / -1.0, rel=1e-14)
    assert d.beta0 == pytest.approx(1.0, rel=1e-15)
    assert d.beta2 == pytest.approx(0.75, rel=1e-15)
    assert d.beta_star == pytest.approx(0.25, rel=1e-15)
    assert d.measure_class is MeasureClass.INFINITE_SRB


def test_both_beta_closed_forms_agree():
    rng = np.random.default_rng(11)
    for _ in range(50):
        a0, a2, b0, b2 = np.exp(rng.uniform(-3, 3, size=4))
        p = SaddleParams(float(a0), float(a2), float(b0), float(b2), 2)
        if abs(p.delta) <= 1e-9 * max(a2 * b0, a0 * b2):
            continue
        d = derive_constants(p)
        assert d.beta0 == pytest.approx((p.a0 + p.b0) / (2 * p.a0), rel=1e-12)
        assert d.beta2 == pytest.approx((p.a2 + p.b2) / (2 * p.b2), rel=1e-12)
        assert d.beta0 == pytest.approx((d.u + d.v + 2) / (2 * d.v), rel=1e-12)
        assert d.beta2 == pytest.approx((d.u + d.v + 2) / (2 * d.u), rel=1e-12)


def test_rescale_leaves_exponents_bit_identical():
    d = derive_constants(P1)
    for r, s in ((2.0, 0.25), (8.0, 8.0), (0.5, 4.0)):
        dr = derive_constants(rescale(P1, r, s))
        assert dr.beta0 == d.beta0
        assert dr.beta2 == d.beta2
        assert dr.beta_star == d.beta_star


def test_divergence_free_family():
    for kappa in (2, 4, 6):
        p = SaddleParams(1.3, (kappa + 1) * 0.7, (kappa + 1) * 1.3, 0.7, kappa)
        d = derive_constants(p)
        assert d.divergence_free
        assert d.beta2 == pytest.approx((kappa + 2) / kappa, rel=1e-14)


def test_validate_codes():
    assert validate(P2) == []
    assert "OddKappa" in validate(SaddleParams(1.0, 1.0, 1.0, 2.0, 3))
    assert "NonPositiveKappa" in validate(SaddleParams(1.0, 1.0, 1.0, 2.0, 0))
    assert "NonPositiveCoefficient:a0" in validate(SaddleParams(0.0, 1.0, 1.0, 2.0, 2))
    assert "DegenerateDelta" in validate(SaddleParams(1.0, 1.0, 1.0, 1.0, 2))


def test_permissive_admits_degenerate_brackets():
    p = SaddleParams(1.0, 0.0, 1.0, 2.0, 2)
    assert any(c.startswith("NonPositiveCoefficient") for c in validate(p))
    assert validate(p, permissive=True) == []


def test_derive_constants_raises():
    with pytest.raises(DegenerateDelta):
        derive_constants(SaddleParams(1.0, 1.0, 1.0, 1.0, 2))
    with pytest.raises(ValueError):
        derive_constants(SaddleParams(1.0, 1.0, 1.0, 2.0, 3))


def test_default_section_p2():
    assert default_section(P2) == pytest.approx(8.0 ** -0.5, rel=1e-15)


def test_make_rect_top_edge():
    rect = make_rect(P2)
    assert rect.zeta0 == pytest.approx(8.0 ** -0.5, rel=1e-15)
    assert rect.eta0 == pytest.approx(8.0 ** -0.5, rel=1e-15)
    # one unit of stable-axis travel from eta1 lands exactly on eta0
    assert rect.eta1 == pytest.approx(0.5, rel=1e-14)
    k, b2 = P2.kappa, P2.b2
    assert (rect.eta1 ** -k + k * b2) ** (-1.0 / k) == pytest.approx(
        rect.eta0, rel=1e-14
    )


def test_make_rect_rejects_tall_entry():
    with pytest.raises(ValueError):
        make_rect(P2, eta0=1.0)


def test_kappa_must_be_python_int():
    bad = SaddleParams(1.0, 1.0, 1.0, 2.0, np.int64(2))
    assert "NonPositiveKappa" in validate(bad)
