import numpy as np
import pytest

from so3cat.qnum import (gauss_closed, gauss_product, identity_residuals, is_primitive,
                         make_context, qint, qint_from_powers, qpow)


def test_root_of_unity():
    assert make_context(1).q == pytest.approx(np.exp(1j * np.pi / 6))
    assert make_context(2).q == pytest.approx(np.exp(1j * np.pi / 10))
    for m in range(1, 9):
        ctx = make_context(m)
        assert ctx.order == 8 * m + 4
        assert is_primitive(ctx)


@pytest.mark.parametrize("bad", [0, -1, 1.5])
def test_bad_level(bad):
    with pytest.raises(ValueError):
        make_context(bad)


def test_bad_tolerance():
    with pytest.raises(ValueError):
        make_context(2, tol=0)


@pytest.mark.parametrize("m", range(1, 13))
def test_special_values(m):
    ctx = make_context(m)
    assert qint(ctx, 0) == 0
    assert qint(ctx, 1) == pytest.approx(1)
    assert abs(qint(ctx, 4 * m + 2)) < 1e-12
    assert qint(ctx, 4 * m + 1) == pytest.approx(1)
    # the sine form against the power form
    for n in range(-3, 4 * m + 4):
        assert qint_from_powers(ctx, n) == pytest.approx(qint(ctx, n), abs=1e-12)


def test_m1_three():
    assert qint(make_context(1), 3) == pytest.approx(2.0)


def test_qpow_matches_power():
    ctx = make_context(3)
    for k in range(-20, 21):
        assert qpow(ctx, k) == pytest.approx(ctx.q ** k)


@pytest.mark.parametrize("m", range(1, 13))
def test_identities(m):
    res = identity_residuals(make_context(m))
    assert set(res) == {"recurrence", "reflection", "fusion"}
    assert max(res.values()) < 1e-9


def test_gauss_product_values():
    assert gauss_product(make_context(1)) == pytest.approx(-1j * np.sqrt(3))
    assert gauss_product(make_context(2)) == pytest.approx(-np.sqrt(5))
    for m in range(1, 13):
        assert abs(gauss_product(make_context(m)) - gauss_closed(m)) < 1e-9
