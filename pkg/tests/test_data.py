import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from trp.data import (
    AssetId,
    ReturnsPanel,
    TrpConfig,
    active_set,
    load_returns,
    load_signals,
    recent_magnitude,
)
from trp.errors import (
    EmptyActiveSet,
    LookbackExceedsHistory,
    MissingFile,
    NonFiniteValue,
    ParseError,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_returns_shape(tmp_path):
    p = write(tmp_path, "r.csv", "AAA,BBB,CCC\n0.01,0.02,-0.01\n0.00,-0.03,0.02\n")
    panel = load_returns(p)
    assert panel.tickers == ("AAA", "BBB", "CCC")
    assert (panel.n_assets, panel.n_periods) == (3, 2)
    assert panel.returns[1, 1] == -0.03


def test_load_returns_rejects_nan(tmp_path):
    p = write(tmp_path, "r.csv", "A,B\n0.1,NaN\n0.2,0.3\n")
    with pytest.raises(NonFiniteValue):
        load_returns(p)


def test_load_returns_empty_data(tmp_path):
    p = write(tmp_path, "r.csv", "A,B,C\n")
    with pytest.raises(ParseError):
        load_returns(p)


def test_load_returns_reports_cell(tmp_path):
    p = write(tmp_path, "r.csv", "A,B\n0.1,0.2\n0.3,abc\n")
    with pytest.raises(ParseError) as info:
        load_returns(p)
    assert (info.value.row, info.value.col) == (3, 2)


def test_load_returns_needs_two_periods(tmp_path):
    p = write(tmp_path, "r.csv", "A,B\n0.1,0.2\n")
    with pytest.raises(ParseError):
        load_returns(p)


def test_load_returns_missing(tmp_path):
    with pytest.raises(MissingFile):
        load_returns(tmp_path / "nope.csv")


def test_load_signals_alignment(tmp_path):
    p = write(tmp_path, "s.csv", "ticker,signal\nC,0.5\nA,-1.25\n")
    s = load_signals(p, ("A", "B", "C"))
    np.testing.assert_array_equal(s, [-1.25, 0.0, 0.5])


def test_load_signals_unknown_ticker(tmp_path):
    p = write(tmp_path, "s.csv", "ticker,signal\nZZZ,0.5\n")
    with pytest.raises(ParseError):
        load_signals(p, ("A",))


def test_panel_invariants():
    with pytest.raises(ValueError):
        ReturnsPanel(("A", "A"), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        ReturnsPanel(("A",), np.zeros((2, 3)))
    with pytest.raises(NonFiniteValue):
        ReturnsPanel(("A",), np.array([[0.0, np.inf]]))


def test_asset_id_sector_prefix():
    assert AssetId("XLK").is_sector_etf
    assert not AssetId("AXLE").is_sector_etf
    with pytest.raises(ValueError):
        AssetId("")


@pytest.mark.parametrize("kwargs", [
    {"rho": -0.1}, {"rho": 1.5}, {"leverage": 0.0}, {"cap": 0.0},
    {"lookback": 0}, {"subtree_exponent": 0.5}, {"root_mode": "center"},
])
def test_config_rejects(kwargs):
    with pytest.raises(ValueError):
        TrpConfig(**kwargs)


def test_config_default_tau():
    assert TrpConfig().signal_threshold == 1e-3


def test_recent_magnitude_examples():
    panel = ReturnsPanel(("A", "B"), np.array([[0.05, 0.01, -0.03], [0.0, 0.0, 0.0]]))
    m = recent_magnitude(panel, 2)
    assert m[0] == pytest.approx(0.02)
    assert m[1] == 0.0
    np.testing.assert_allclose(recent_magnitude(panel, 3), np.abs(panel.returns).mean(axis=1))
    with pytest.raises(LookbackExceedsHistory):
        recent_magnitude(panel, 4)


def _panel_with_magnitudes(m):
    return ReturnsPanel(tuple(f"A{i}" for i in range(len(m))), np.column_stack([m, m]))


def test_active_set_filters_on_magnitude():
    panel = _panel_with_magnitudes([0.02, 0.0])
    act = active_set(panel, [0.5, 0.5], TrpConfig(magnitude_threshold=0.01))
    assert act.indices.tolist() == [0]


def test_active_set_strict_signal_boundary():
    panel = _panel_with_magnitudes([0.02, 0.02])
    act = active_set(panel, [1e-3, 0.5], TrpConfig(magnitude_threshold=0.01, signal_threshold=1e-3))
    assert act.indices.tolist() == [1]


def test_active_set_all_pass():
    panel = _panel_with_magnitudes([0.02, 0.03, 0.04])
    act = active_set(panel, [1.0, -1.0, 2.0], TrpConfig(magnitude_threshold=0.01))
    assert act.indices.tolist() == [0, 1, 2] and act.n_active == 3


def test_active_set_empty():
    panel = _panel_with_magnitudes([0.02])
    with pytest.raises(EmptyActiveSet):
        active_set(panel, [0.0], TrpConfig())


returns_st = arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 10)),
                    elements=st.floats(-0.2, 0.2))


@settings(max_examples=150, deadline=None)
@given(r=returns_st, data=st.data())
def test_active_set_membership_and_monotonicity(r, data):
    panel = ReturnsPanel(tuple(f"A{i}" for i in range(r.shape[0])), r)
    s = data.draw(arrays(np.float64, r.shape[0], elements=st.floats(-1, 1)))
    eps = data.draw(st.floats(1e-6, 0.1))
    tau = data.draw(st.floats(1e-6, 0.5))
    bump = data.draw(st.floats(1.0, 10.0))

    def members(e, t):
        try:
            return set(active_set(panel, s, TrpConfig(magnitude_threshold=e, signal_threshold=t)).indices)
        except EmptyActiveSet:
            return set()

    m = np.abs(r).mean(axis=1)
    base = members(eps, tau)
    assert base == {i for i in range(len(s)) if m[i] > eps and abs(s[i]) > tau}
    assert members(eps * bump, tau) <= base
    assert members(eps, tau * bump) <= base


@settings(max_examples=100, deadline=None)
@given(r=returns_st, data=st.data())
def test_recent_magnitude_sign_flip(r, data):
    k = data.draw(st.integers(1, r.shape[1]))
    a = ReturnsPanel(tuple(f"A{i}" for i in range(r.shape[0])), r)
    b = ReturnsPanel(a.tickers, -r)
    np.testing.assert_array_equal(recent_magnitude(a, k), recent_magnitude(b, k))
