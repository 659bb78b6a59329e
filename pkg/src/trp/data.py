"""Asset universe, return panels, signals, configuration and the activity filter."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyActiveSet,
    LookbackExceedsHistory,
    MissingFile,
    NonFiniteValue,
    ParseError,
)

SECTOR_PREFIX = "XL"
ROOT_MODES = ("hub", "maxmag", "fixed")


def is_sector_etf(ticker: str) -> bool:
    return ticker.startswith(SECTOR_PREFIX)


@dataclass(frozen=True)
class AssetId:
    ticker: str

    def __post_init__(self):
        if not self.ticker:
            raise ValueError("ticker must be nonempty")

    @property
    def is_sector_etf(self) -> bool:
        return is_sector_etf(self.ticker)


@dataclass(frozen=True, eq=False)
class ReturnsPanel:
    """N x T matrix of period returns, one row per asset."""

    tickers: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        tickers = tuple(str(t) for t in self.tickers)
        returns = np.array(self.returns, dtype=float)
        if returns.ndim != 2:
            raise ValueError("returns must be a 2-d array (assets x periods)")
        if returns.shape[0] != len(tickers):
            raise ValueError(
                f"{returns.shape[0]} return rows for {len(tickers)} tickers"
            )
        if returns.shape[1] < 1:
            raise ValueError("panel needs at least one period")
        if any(not t for t in tickers):
            raise ValueError("empty ticker")
        if len(set(tickers)) != len(tickers):
            raise ValueError("duplicate tickers in panel")
        if not np.all(np.isfinite(returns)):
            raise NonFiniteValue("returns contain non-finite entries")
        returns.setflags(write=False)
        object.__setattr__(self, "tickers", tickers)
        object.__setattr__(self, "returns", returns)

    @property
    def n_assets(self) -> int:
        return self.returns.shape[0]

    @property
    def n_periods(self) -> int:
        return self.returns.shape[1]

    @property
    def assets(self) -> tuple[AssetId, ...]:
        return tuple(AssetId(t) for t in self.tickers)

    def subset(self, indices) -> ReturnsPanel:
        idx = np.asarray(indices, dtype=int)
        return ReturnsPanel(tuple(self.tickers[i] for i in idx), self.returns[idx])


@dataclass(frozen=True)
class TrpConfig:
    """Allocator parameters.

    ``root_mode`` is ``"hub"``, ``"maxmag"`` or ``"fixed"``; in fixed mode
    ``root_index`` is the original (0-based) panel index of the root asset.
    ``lookback=None`` uses the whole history. ``postprocess=None`` means
    clip/threshold only in the sector-anchored variant.
    """

    lookback: int | None = None
    magnitude_threshold: float = 1e-8
    signal_threshold: float = 1e-3
    rho: float = 0.5
    leverage: float = 1.0
    root_mode: str = "hub"
    root_index: int = 0
    cap: float | None = None
    min_weight: float | None = None
    subtree_exponent: float = 1.0
    renormalize_after_postprocess: bool = False
    neutralize_depth_one: bool = False
    postprocess: bool | None = None

    def __post_init__(self):
        if self.lookback is not None and self.lookback < 1:
            raise ValueError("lookback must be a positive integer")
        if not self.magnitude_threshold > 0:
            raise ValueError("magnitude_threshold must be positive")
        if not self.signal_threshold > 0:
            raise ValueError("signal_threshold must be positive")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if not self.leverage > 0:
            raise ValueError("leverage must be positive")
        if self.root_mode not in ROOT_MODES:
            raise ValueError(f"root_mode must be one of {ROOT_MODES}")
        if self.cap is not None and not self.cap > 0:
            raise ValueError("cap must be positive")
        if self.min_weight is not None and self.min_weight < 0:
            raise ValueError("min_weight must be nonnegative")
        if not self.subtree_exponent >= 1:
            raise ValueError("subtree_exponent must be >= 1")


@dataclass(frozen=True, eq=False)
class ActiveSet:
    indices: np.ndarray
    recent_magnitudes: np.ndarray = field(repr=False)

    @property
    def n_active(self) -> int:
        return len(self.indices)


def load_returns(path) -> ReturnsPanel:
    """Read a wide CSV: a header row of tickers, then one row per period."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"returns file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("returns file is empty", row=1)
    tickers = [c.strip() for c in rows[0]]
    if any(not t for t in tickers):
        raise ParseError("blank ticker in header", row=1)
    if len(set(tickers)) != len(tickers):
        raise ParseError("duplicate ticker in header", row=1)
    data = rows[1:]
    if not data:
        raise ParseError("no data rows after header", row=2)
    values = np.empty((len(data), len(tickers)))
    for r, row in enumerate(data, start=2):
        if len(row) != len(tickers):
            raise ParseError(f"expected {len(tickers)} cells, got {len(row)}", row=r)
        for c, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r}", row=r, col=c) from None
            if not math.isfinite(v):
                raise NonFiniteValue(f"non-finite value {cell!r} at row {r}, col {c}")
            values[r - 2, c - 1] = v
    if len(data) < 2:
        raise ParseError("at least 2 periods are required for correlation", row=2)
    return ReturnsPanel(tuple(tickers), values.T)


def load_signals(path, tickers) -> np.ndarray:
    """Read a ``ticker,signal`` CSV and align it to ``tickers``.

    Tickers absent from the file get signal 0 (and so fall out of the active
    set); tickers not in the panel are an error.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"signals file not found: {path}")
    position = {t: i for i, t in enumerate(tickers)}
    out = np.zeros(len(tickers))
    seen = set()
    with path.open(newline="", encoding="utf-8") as fh:
        for r, row in enumerate(csv.reader(fh), start=1):
            if not row or not any(c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError("expected two columns ticker,signal", row=r)
            ticker, cell = row[0].strip(), row[1].strip()
            if r == 1 and ticker.lower() == "ticker":
                continue
            if ticker not in position:
                raise ParseError(f"unknown ticker {ticker!r}", row=r, col=1)
            if ticker in seen:
                raise ParseError(f"duplicate ticker {ticker!r}", row=r, col=1)
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric signal {cell!r}", row=r, col=2) from None
            if not math.isfinite(v):
                raise NonFiniteValue(f"non-finite signal at row {r}")
            seen.add(ticker)
            out[position[ticker]] = v
    return out


def write_returns(path, panel: ReturnsPanel) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(panel.tickers)
        for row in panel.returns.T:
            writer.writerow(repr(float(v)) for v in row)


def recent_magnitude(panel: ReturnsPanel, k: int) -> np.ndarray:
    """Mean absolute return over the last ``k`` periods, per asset."""
    if not 1 <= k <= panel.n_periods:
        raise LookbackExceedsHistory(
            f"lookback {k} outside 1..{panel.n_periods}"
        )
    return np.abs(panel.returns[:, -k:]).mean(axis=1)


def active_set(panel: ReturnsPanel, signals, cfg: TrpConfig) -> ActiveSet:
    signals = np.asarray(signals, dtype=float)
    if signals.shape != (panel.n_assets,):
        raise ValueError(f"expected {panel.n_assets} signals, got {signals.shape}")
    if not np.all(np.isfinite(signals)):
        raise NonFiniteValue("signals contain non-finite entries")
    k = panel.n_periods if cfg.lookback is None else cfg.lookback
    m = recent_magnitude(panel, k)
    mask = (m > cfg.magnitude_threshold) & (np.abs(signals) > cfg.signal_threshold)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise EmptyActiveSet("no asset passes the activity filter")
    return ActiveSet(idx, m)
