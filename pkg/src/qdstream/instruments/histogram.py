from __future__ import annotations

from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Any, Dict, Iterable, List, Tuple

import numpy as np
import pandas as pd

from qdstream.errors import GridMismatchError, InvalidArgumentError

DEFAULT_BLOCK_EVENTS = 65536


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    """
    Binned time differences. Bin i covers [t_min + i*bin_width, t_min + (i+1)*bin_width).
    `meta` carries instrument context (period, delay_pulses, n_meetings, ...).
    """

    bin_width: float
    t_min: float
    t_max: float
    counts: np.ndarray
    n_events_processed: int = 0
    flags: Tuple[str, ...] = ()
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n_bins = int(round((self.t_max - self.t_min) / self.bin_width))
        if n_bins != len(self.counts):
            raise InvalidArgumentError(f"{len(self.counts)} counts for {n_bins} bins")

    @classmethod
    def empty(cls, bin_width: float, t_min: float, t_max: float, **kwargs: Any) -> "CoincidenceHistogram":
        n_bins = n_bins_for(bin_width, t_min, t_max)
        return cls(bin_width=bin_width, t_min=t_min, t_max=t_min + n_bins * bin_width,
                   counts=np.zeros(n_bins, dtype=np.int64), **kwargs)

    @classmethod
    def from_values(
        cls,
        values: np.ndarray,
        bin_width: float,
        t_min: float,
        t_max: float,
        **kwargs: Any,
    ) -> "CoincidenceHistogram":
        h = cls.empty(bin_width, t_min, t_max, **kwargs)
        counts = bin_values(np.asarray(values, dtype=float), h.bin_width, h.t_min, h.n_bins)
        return replace(h, counts=counts)

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def edges(self) -> np.ndarray:
        return self.t_min + self.bin_width * np.arange(self.n_bins + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.t_min + self.bin_width * (np.arange(self.n_bins) + 0.5)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def area(self, lo: float, hi: float) -> int:
        """Counts in bins whose centre lies in [lo, hi]."""
        c = self.centers
        return int(self.counts[(c >= lo) & (c <= hi)].sum())

    def mean(self) -> float:
        if self.total == 0:
            return float("nan")
        return float(np.sum(self.centers * self.counts) / self.total)

    def same_binning(self, other: "CoincidenceHistogram") -> bool:
        return (
            self.n_bins == other.n_bins
            and np.isclose(self.bin_width, other.bin_width, rtol=1e-12, atol=0.0)
            and np.isclose(self.t_min, other.t_min, rtol=1e-12, atol=1e-18)
        )

    def merge(self, other: "CoincidenceHistogram") -> "CoincidenceHistogram":
        if not self.same_binning(other):
            raise GridMismatchError("cannot merge histograms with different binning")
        flags = tuple(sorted(set(self.flags) | set(other.flags)))
        meta = dict(self.meta)
        for key in ("n_meetings",):
            if key in self.meta or key in other.meta:
                meta[key] = int(self.meta.get(key, 0)) + int(other.meta.get(key, 0))
        return replace(
            self,
            counts=self.counts + other.counts,
            n_events_processed=self.n_events_processed + other.n_events_processed,
            flags=flags,
            meta=meta,
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"bin_center_ps": self.centers * 1e12, "counts": self.counts})


def n_bins_for(bin_width: float, t_min: float, t_max: float) -> int:
    if not bin_width > 0:
        raise InvalidArgumentError(f"bin_width must be > 0, got {bin_width!r}")
    if not t_max > t_min:
        raise InvalidArgumentError(f"t_max must exceed t_min, got [{t_min!r}, {t_max!r}]")
    return max(1, int(round((t_max - t_min) / bin_width)))


def bin_values(values: np.ndarray, bin_width: float, t_min: float, n_bins: int) -> np.ndarray:
    idx = np.floor((values - t_min) / bin_width).astype(np.int64)
    idx = idx[(idx >= 0) & (idx < n_bins)]
    return np.bincount(idx, minlength=n_bins).astype(np.int64)


def merge_histograms(histograms: Iterable[CoincidenceHistogram]) -> CoincidenceHistogram:
    items = list(histograms)
    if not items:
        raise InvalidArgumentError("nothing to merge")
    out = items[0]
    for h in items[1:]:
        out = out.merge(h)
    return out


def _correlate_block(args: tuple) -> np.ndarray:
    t_a, t_b, bin_width, t_min, n_bins = args
    t_max = t_min + n_bins * bin_width
    lo = np.searchsorted(t_b, t_a + t_min, side="left")
    hi = np.searchsorted(t_b, t_a + t_max, side="left")
    n_pairs = hi - lo
    total = int(n_pairs.sum())
    if total == 0:
        return np.zeros(n_bins, dtype=np.int64)
    # flatten all (a, b) pairs inside the window
    a_idx = np.repeat(np.arange(len(t_a)), n_pairs)
    offsets = np.arange(total) - np.repeat(np.cumsum(n_pairs) - n_pairs, n_pairs)
    b_idx = np.repeat(lo, n_pairs) + offsets
    return bin_values(t_b[b_idx] - t_a[a_idx], bin_width, t_min, n_bins)


def cross_correlate(
    t_a: np.ndarray,
    t_b: np.ndarray,
    bin_width: float,
    t_min: float,
    t_max: float,
    *,
    workers: int = 1,
    block_events: int = DEFAULT_BLOCK_EVENTS,
) -> np.ndarray:
    """
    Histogram of t_b - t_a over every pair with difference in [t_min, t_max).
    Both inputs must be sorted. Blocks of t_a are binned independently and summed.
    """
    n_bins = n_bins_for(bin_width, t_min, t_max)
    t_a = np.asarray(t_a, dtype=float)
    t_b = np.asarray(t_b, dtype=float)
    tasks: List[tuple] = [
        (t_a[start : start + block_events], t_b, bin_width, t_min, n_bins)
        for start in range(0, len(t_a), block_events)
    ]
    if not tasks:
        return np.zeros(n_bins, dtype=np.int64)
    if workers > 1 and len(tasks) > 1:
        with Pool(min(int(workers), len(tasks))) as pool:
            parts = pool.map(_correlate_block, tasks)
    else:
        parts = [_correlate_block(t) for t in tasks]
    return np.sum(parts, axis=0).astype(np.int64)


def peak_areas(
    h: CoincidenceHistogram,
    period: float,
    n_side: int | None = None,
    window: float = 1.5e-9,
) -> Tuple[int, Dict[int, int]]:
    """
    Central area and the areas of side peaks at j*period (j != 0) inside [t_min, t_max].
    Each peak is integrated over +/- window.
    """
    if window <= 0 or window >= period / 2:
        raise InvalidArgumentError(f"window must lie in (0, period/2), got {window!r}")
    central = h.area(-window, window)
    side: Dict[int, int] = {}
    j_max = int(np.floor((max(abs(h.t_min), abs(h.t_max)) - window) / period))
    for j in range(-j_max, j_max + 1):
        if j == 0 or (n_side is not None and abs(j) > n_side):
            continue
        centre = j * period
        if centre - window < h.t_min or centre + window > h.t_max:
            continue
        side[j] = h.area(centre - window, centre + window)
    return central, side
