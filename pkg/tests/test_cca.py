from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cryptodr.cca import fit_cca, rao_f, variate_loadings, wilks_sequence, wilks_tests
from cryptodr.errors import AlignmentError, NotPositiveDefiniteError, OrientationError, ShapeError

from conftest import make_matrix
from oracles import grid_cca_first

REFERENCE_RHO = (0.965987, 0.855689, 0.673962)


def blocks(seed, n=80, p=3, q=5, coupling=0.6):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, q))
    y = coupling * x[:, :p] @ rng.standard_normal((p, p)) + rng.standard_normal((n, p))
    return (make_matrix(y, [f"y{i}" for i in range(p)]), make_matrix(x, [f"x{i}" for i in range(q)]))


def test_identical_blocks():
    y, _ = blocks(0, p=3, q=3)
    x = make_matrix(y.values, ["a", "b", "c"])
    assert np.allclose(fit_cca(y, x).correlations, 1.0, atol=1e-8)


def test_zero_cross_covariance():
    rng = np.random.default_rng(1)
    z = rng.standard_normal((50, 5))
    z -= z.mean(axis=0)
    q_mat, _ = np.linalg.qr(z)
    y = make_matrix(q_mat[:, :2], ["y0", "y1"])
    x = make_matrix(q_mat[:, 2:], ["x0", "x1", "x2"])
    model = fit_cca(y, x)
    assert np.allclose(model.correlations, 0.0, atol=1e-8)
    # the completed basis still gives unit-variance, uncorrelated X variates
    vx = model.x_variates(x)
    assert np.allclose(np.cov(vx.T), np.eye(2), atol=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_first_correlation_matches_grid_search(seed):
    y, x = blocks(seed, n=60, p=2, q=3)
    assert fit_cca(y, x).correlations[0] == pytest.approx(grid_cca_first(y.values, x.values), abs=1e-2)


@given(st.integers(0, 2**32 - 1))
def test_model_invariants(seed):
    y, x = blocks(seed)
    model = fit_cca(y, x)
    rho = model.correlations
    assert np.all(np.diff(rho) <= 1e-15) and np.all((rho >= 0) & (rho <= 1))
    vy, vx = model.y_variates(y), model.x_variates(x)
    assert np.max(np.abs(np.cov(vy.T) - np.eye(3))) < 1e-8
    assert np.max(np.abs(np.cov(vx.T) - np.eye(3))) < 1e-8
    pair = np.cov(vy.T, vx.T)[:3, 3:]
    assert np.max(np.abs(pair - np.diag(rho))) < 1e-8


@given(st.integers(0, 2**32 - 1), st.lists(st.floats(0.01, 100), min_size=8, max_size=8))
def test_scale_invariance(seed, scales):
    y, x = blocks(seed)
    s = np.array(scales)
    y2 = make_matrix(y.values * s[:3], list(y.names))
    x2 = make_matrix(x.values * s[3:], list(x.names))
    assert np.allclose(fit_cca(y, x).correlations, fit_cca(y2, x2).correlations, atol=1e-8)


@given(st.integers(0, 2**32 - 1))
def test_remix_invariance(seed):
    y, x = blocks(seed)
    mix = np.random.default_rng(seed + 1).standard_normal((5, 5)) + 3 * np.eye(5)
    x2 = make_matrix(x.values @ mix, list(x.names))
    assert np.allclose(fit_cca(y, x).correlations, fit_cca(y, x2).correlations, atol=1e-7)


def test_orientation_error():
    y, x = blocks(2, p=3, q=3)
    with pytest.raises(OrientationError):
        fit_cca(x.select(x.names), y.select(y.names[:2]))


def test_singular_block_names_column():
    y, x = blocks(3)
    dup = make_matrix(np.column_stack([x.values, x.values[:, 0]]), list(x.names) + ["x0_copy"])
    with pytest.raises(NotPositiveDefiniteError) as ei:
        fit_cca(y, dup)
    assert "x0_copy" in str(ei.value) and "prune" in str(ei.value)


def test_empty_block_is_not_positive_definite():
    y, x = blocks(4)
    with pytest.raises(NotPositiveDefiniteError):
        fit_cca(y.select([]), x)


def test_row_mismatch():
    y, x = blocks(5)
    with pytest.raises(AlignmentError):
        fit_cca(y, x.take_rows(np.arange(10)))


def test_needs_rows():
    y, x = blocks(6, n=5, p=2, q=5)
    with pytest.raises(ShapeError):
        fit_cca(y, x)


# -- Wilks -------------------------------------------------------------------

def test_wilks_reference_values():
    steps = wilks_sequence(REFERENCE_RHO, 962, 6)
    assert [s.wilks_lambda for s in steps] == pytest.approx([0.0097734, 0.146156, 0.545776], abs=1e-5)
    assert [s.df1 for s in steps] == [18, 10, 4]
    assert steps[2].df2 == 957
    assert steps[2].f_value == pytest.approx((1 - 0.545776) / 0.545776 * 957 / 4, rel=1e-5)
    assert steps[2].f_value == pytest.approx(199.117, rel=1e-4)


def test_rao_f_small_block_uses_s_one():
    # p_k = 1, q_k = 2 -> denominator 0, s = 1
    f, df1, df2 = rao_f(0.5, 1, 2, 50)
    m0 = 50 - 1 - 2.0
    assert df1 == 2 and df2 == m0 - 1 + 1
    assert f == pytest.approx((1 - 0.5) / 0.5 * df2 / df1)


def test_rao_f_zero_lambda():
    f, _, _ = rao_f(0.0, 3, 6, 100)
    assert math.isinf(f)
    steps = wilks_sequence([1.0, 0.5], 100, 3)
    assert math.isinf(steps[0].f_value) and steps[0].p_value == 0.0


def test_wilks_needs_rows():
    with pytest.raises(ShapeError):
        wilks_sequence([0.5, 0.4, 0.3], 10, 6)


@given(st.lists(st.floats(0, 0.999), min_size=1, max_size=4), st.integers(30, 2000))
def test_wilks_invariants(rho, n):
    rho = sorted(rho, reverse=True)
    steps = wilks_sequence(rho, n, 6)
    lams = [s.wilks_lambda for s in steps]
    for k, lam in enumerate(lams):
        assert lam == pytest.approx(float(np.prod([1 - r * r for r in rho[k:]])), abs=1e-10)
        assert 0 < lam <= 1
    assert lams == sorted(lams)
    assert all(0 <= s.p_value <= 1 for s in steps)


def test_wilks_tests_uses_model_size():
    y, x = blocks(7)
    model = fit_cca(y, x)
    steps = wilks_tests(model)
    assert [s.df1 for s in steps] == [15, 8, 3]
    assert steps[0].correlation == model.correlations[0]


# -- loadings ----------------------------------------------------------------

def test_loading_of_own_variate_is_one():
    y, x = blocks(8)
    model = fit_cca(y, x)
    v1 = model.x_variates(x)[:, 0]
    x_plus = make_matrix(np.column_stack([x.values, 2.5 * v1]), list(x.names) + ["v"])
    r = np.corrcoef(x_plus.values[:, -1], v1)[0, 1]
    assert r == pytest.approx(1.0)
    load = variate_loadings(model, y, x)
    assert load.x_own.shape == (5, 3) and load.y_own.shape == (3, 3)
    assert load.y_cross.shape == (3, 3) and load.x_cross.shape == (5, 3)


@given(st.integers(0, 2**32 - 1))
def test_cross_loading_identity(seed):
    y, x = blocks(seed)
    model = fit_cca(y, x)
    load = variate_loadings(model, y, x)
    rho = model.correlations
    assert np.max(np.abs(load.y_cross - load.y_own * rho)) < 1e-8
    assert np.max(np.abs(load.x_cross - load.x_own * rho)) < 1e-8
    for table in (load.x_own, load.y_own, load.y_cross, load.x_cross):
        assert np.all(np.abs(table) <= 1)


def test_fixture_signature(fixture_report):
    ins = fixture_report.in_sample
    col = np.abs(ins.cca_loadings.x_own[:, 0])
    assert ins.cca.x_names[int(np.argmax(col))] == "BTC_Volume"
    assert ins.cca.p == 3 and ins.cca.q == 6
