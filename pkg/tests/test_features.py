from __future__ import annotations

import math
from datetime import date

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from cryptodr.errors import (
    AlignmentError,
    DegenerateColumnError,
    DomainError,
    InsufficientDataError,
    ShapeError,
)
from cryptodr.features import (
    FeatureMatrix,
    assemble_panel,
    hml,
    intraday_variance,
    log_returns,
    prune_correlated,
    standardize,
    vmom,
)
from cryptodr.linalg import correlation_matrix
from cryptodr.market_data import OhlcvBar, align, series_from_bars

from conftest import make_matrix, random_walk_series
from oracles import calendar, usable_row_indices, vmom_scalar

finite = dict(allow_nan=False, allow_infinity=False)


# -- log returns -------------------------------------------------------------

def test_log_returns_examples():
    assert np.array_equal(log_returns([5, 5, 5]), [0.0, 0.0])
    assert log_returns([1, 2])[0] == pytest.approx(0.6931472, abs=1e-7)
    assert np.allclose(log_returns([math.e, math.e**2, math.e**3]), [1.0, 1.0])


def test_log_returns_domain():
    with pytest.raises(DomainError):
        log_returns([1.0, 0.0, 2.0])


@given(st.lists(st.floats(1e-3, 1e6), min_size=2, max_size=40), st.floats(1e-3, 1e3))
def test_log_returns_scale_invariant(prices, k):
    base = log_returns(prices)
    scaled = log_returns([k * p for p in prices])
    assert np.allclose(base, scaled, atol=1e-12)


# -- HML ---------------------------------------------------------------------

def test_hml_examples():
    assert np.array_equal(hml([3.0, 4.0], [3.0, 4.0]), [0.0, 0.0])
    assert np.array_equal(hml([10.0], [4.0]), [6.0])
    assert np.array_equal(hml([3.0, 5.0], [1.0, 5.0]), [2.0, 0.0])


def test_hml_shape_mismatch():
    with pytest.raises(ShapeError):
        hml([1.0, 2.0], [1.0])


# -- VMOM --------------------------------------------------------------------

def test_vmom_flat_weekly_price():
    p = [float(i % 7) + 10 for i in range(60)]
    out = vmom(p, [1.5] * 60)
    assert np.all(np.isnan(out[:22]))
    assert np.all(out[22:] == 0.0)


def test_vmom_arithmetic_grid():
    d, h = 0.75, 2.0
    p = [100 + d * i for i in range(50)]
    out = vmom(p, [h] * 50)
    expected = 7 * d / (23 * h / 22)
    assert np.allclose(out[22:], expected, rtol=1e-13)


def test_vmom_zero_hml_undefined():
    assert np.all(np.isnan(vmom(np.arange(1.0, 41.0), np.zeros(40))))


def test_vmom_short_input():
    assert np.all(np.isnan(vmom(np.arange(1.0, 23.0), np.ones(22))))


@given(st.integers(23, 80), st.integers(0, 2**32 - 1))
def test_vmom_matches_scalar_oracle(n, seed):
    rng = np.random.default_rng(seed)
    p = list(100 * np.exp(np.cumsum(0.03 * rng.standard_normal(n))))
    h = list(rng.random(n) + 0.01)
    out = vmom(p, h)
    for t in range(n):
        if t < 22:
            assert math.isnan(out[t])
        else:
            assert out[t] == pytest.approx(vmom_scalar(p, h, t), rel=1e-12)


# -- intraday variance -------------------------------------------------------

def test_iv_examples():
    assert intraday_variance([1.0], [2.0], [2.0], [1.5])[0] == 0.0
    assert intraday_variance([1.0], [math.e], [1.0], [2.0])[0] == pytest.approx(1.0)
    assert intraday_variance([1.0], [math.exp(0.5)], [1.0], [1.2])[0] == pytest.approx(0.25)


def test_iv_domain():
    with pytest.raises(DomainError):
        intraday_variance([1.0], [1.0], [0.0], [1.0])


@given(st.floats(1e-3, 1e6), st.floats(1.0, 3.0), st.floats(1e-3, 1e6), st.floats(1e-3, 1e6))
def test_iv_branch_irrelevance(low, ratio, o, c):
    high = low * ratio
    out = intraday_variance([o, c], [high, high], [low, low], [c, o])
    expected = math.log(high / low) ** 2
    assert out[0] == expected and out[1] == expected


# -- standardization ---------------------------------------------------------

def test_standardize_two_points():
    m = make_matrix([[0.0], [2.0]])
    z = standardize(m, (m.dates[0], m.dates[-1]))
    assert np.allclose(z.values[:, 0], [-1 / math.sqrt(2), 1 / math.sqrt(2)])
    assert z.scaler["c0"] == (1.0, pytest.approx(math.sqrt(2)))


def test_standardize_already_standard():
    x = np.random.default_rng(0).standard_normal((30, 2))
    x = (x - x.mean(axis=0)) / x.std(axis=0, ddof=1)
    m = make_matrix(x)
    assert np.allclose(standardize(m, (m.dates[0], m.dates[-1])).values, x, atol=1e-12)


def test_standardize_constant_column():
    m = make_matrix([[1.0, 3.0], [2.0, 3.0], [4.0, 3.0]], ["a", "b"])
    with pytest.raises(DegenerateColumnError) as ei:
        standardize(m, (m.dates[0], m.dates[-1]))
    assert ei.value.column == "b"


def test_standardize_uses_fit_window_only():
    x = np.concatenate([np.random.default_rng(1).standard_normal(20), [1e6, -1e6]])
    m = make_matrix(x[:, None])
    z = standardize(m, (m.dates[0], m.dates[19]))
    head = z.values[:20, 0]
    assert abs(head.mean()) < 1e-12 and abs(head.std(ddof=1) - 1) < 1e-12


@given(st.integers(3, 40), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_standardize_idempotent(n, q, seed):
    m = make_matrix(np.random.default_rng(seed).normal(5, 3, (n, q)))
    window = (m.dates[0], m.dates[-1])
    z1 = standardize(m, window)
    assert np.max(np.abs(z1.values.mean(axis=0))) < 1e-10
    assert np.max(np.abs(z1.values.std(axis=0, ddof=1) - 1)) < 1e-10
    z2 = standardize(z1, window)
    assert np.max(np.abs(z2.values - z1.values)) < 1e-10


# -- pruning -----------------------------------------------------------------

def test_prune_duplicated_column():
    x = np.random.default_rng(2).standard_normal((30, 2))
    m = make_matrix(np.column_stack([x, x[:, 0]]), ["a", "b", "a2"])
    out = prune_correlated(m)
    assert out.names == ("a", "b")
    assert [n for n, _ in out.dropped] == ["a2"]


def test_prune_orthogonal_keeps_all():
    x = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    out = prune_correlated(make_matrix(x))
    assert out.names == ("c0", "c1") and out.dropped == ()


def test_prune_three_identical_keeps_first():
    x = np.random.default_rng(3).standard_normal(20)
    out = prune_correlated(make_matrix(np.column_stack([x, x, x]), ["a", "b", "c"]))
    assert out.names == ("a",)
    assert [n for n, _ in out.dropped] == ["b", "c"]


def test_prune_negative_correlation():
    x = np.random.default_rng(4).standard_normal(20)
    out = prune_correlated(make_matrix(np.column_stack([x, -x]), ["a", "b"]))
    assert out.names == ("a",)


@given(st.integers(5, 40), st.integers(2, 7), st.integers(0, 2**32 - 1), st.floats(0.5, 0.999))
def test_prune_postcondition(n, q, seed, threshold):
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n, 2))
    # columns are noisy mixtures of two factors so many pairs are near-duplicates
    x = base @ rng.standard_normal((2, q)) + rng.choice([1e-3, 0.1, 1.0]) * rng.standard_normal((n, q))
    assume(np.all(x.std(axis=0) > 0))
    out = prune_correlated(make_matrix(x), threshold)
    r = correlation_matrix(out.values)
    for i in range(out.n_cols):
        for j in range(i + 1, out.n_cols):
            assert abs(r[i, j]) <= threshold
    assert out.n_cols + len(out.dropped) == q


# -- FeatureMatrix -----------------------------------------------------------

def test_feature_matrix_invariants():
    d = calendar(date(2020, 1, 1), 2)
    with pytest.raises(ShapeError):
        FeatureMatrix(tuple(d), ("a",), np.zeros((3, 1)))
    with pytest.raises(ShapeError):
        FeatureMatrix(tuple(d), ("a", "a"), np.zeros((2, 2)))
    m = FeatureMatrix(tuple(d), ("a",), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        m.values[0, 0] = 1.0
    with pytest.raises(AlignmentError):
        m.column("b")


def test_feature_matrix_csv():
    m = make_matrix([[1.5, -2.0]], ["a", "b"])
    assert m.to_csv() == "date,a,b\n2020-01-01,1.5,-2.0\n"


# -- panel assembly ----------------------------------------------------------

def panel_of(n: int, seed: int = 0):
    a = random_walk_series("BTC", n, seed)
    b = random_walk_series("ETH", n, seed + 1)
    return align(a, b, a.dates[0], a.dates[-1])


def test_assemble_100_bars_gives_78_rows():
    panel = panel_of(100)
    x, y = assemble_panel(panel)
    expected = [panel.dates[i] for i in usable_row_indices(100)]
    assert x.n_rows == 78 == len(expected)
    assert list(x.dates) == expected == list(y.dates)
    assert x.names == ("BTC_Close", "BTC_Return", "BTC_Volume", "BTC_HML", "BTC_VMOM", "BTC_IV")
    assert y.names == ("ETH_Return", "ETH_Volume", "ETH_IV")


def test_assemble_23_bars():
    x, _ = assemble_panel(panel_of(23))
    assert x.n_rows <= 1


def test_assemble_zero_hml():
    bars = [OhlcvBar(d, 1.0 + i, 1.0 + i, 1.0 + i, 1.0 + i, 10.0) for i, d in enumerate(calendar(date(2020, 1, 1), 40))]
    s = series_from_bars("BTC", bars)
    with pytest.raises(InsufficientDataError):
        assemble_panel(align(s, s, s.dates[0], s.dates[-1]))


@given(st.integers(24, 90), st.integers(0, 10_000))
def test_assemble_shares_dates(n, seed):
    x, y = assemble_panel(panel_of(n, seed))
    assert x.dates == y.dates
    assert np.all(np.isfinite(x.values)) and np.all(np.isfinite(y.values))
