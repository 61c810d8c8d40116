"""Discretization of attribute values into d-bin probability mass functions.

Categorical attributes get one bin per domain value.  Numerical and temporal
attributes get ``d`` bins spaced logarithmically when the observed maximum is
at least ten times the (positive-floored) minimum, linearly otherwise.  Bins
are half-open ``[b_i, b_{i+1})`` with the last bin closed; anything below the
first marker lands in bin 0 and anything above the last in bin ``d - 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .aggregate import AttributeRangeStats
from .graph import CATEGORICAL

log = logging.getLogger(__name__)

LINEAR = "linear"
LOGARITHMIC = "logarithmic"
BIN_KINDS = (CATEGORICAL, LINEAR, LOGARITHMIC)

DEFAULT_BINS = 20
# floor for log spacing: values below it (zero IATs included) go to bin 0
EPS_POS = 1.0
LOG_RATIO = 10.0


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    masses: np.ndarray
    n: int

    def __post_init__(self) -> None:
        m = np.asarray(self.masses, dtype=np.float64)
        if m.ndim != 1 or len(m) < 1:
            raise ValueError("masses must be a non-empty vector")
        if np.any(m < 0):
            raise ValueError("masses must be non-negative")
        if self.n < 0:
            raise ValueError("support count must be non-negative")
        object.__setattr__(self, "masses", m)

    @property
    def d(self) -> int:
        return len(self.masses)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, DiscreteDistribution)
            and self.n == other.n
            and np.array_equal(self.masses, other.masses)
        )


@dataclass(frozen=True, eq=False)
class BinSpec:
    kind: str
    d: int
    boundaries: np.ndarray | None = None
    categories: tuple[str, ...] | None = None
    degenerate: bool = False
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in BIN_KINDS:
            raise ValueError(f"unknown bin kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("bin count must be >= 1")
        if self.kind == CATEGORICAL:
            if self.categories is None or len(self.categories) != self.d:
                raise ValueError("categorical bins need exactly d categories")
            object.__setattr__(self, "_index", {c: i for i, c in enumerate(self.categories)})
            return
        b = np.asarray(self.boundaries, dtype=np.float64)
        if b.shape != (self.d + 1,):
            raise ValueError(f"expected {self.d + 1} boundaries, got {b.shape}")
        if self.degenerate:
            if self.d != 1:
                raise ValueError("degenerate spec must have a single bin")
        elif not np.all(np.diff(b) > 0):
            raise ValueError("boundaries must be strictly ascending")
        if self.kind == LOGARITHMIC and b[0] <= 0:
            raise ValueError("logarithmic boundaries must be positive")
        object.__setattr__(self, "boundaries", b)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinSpec):
            return False
        same_b = (self.boundaries is None and other.boundaries is None) or (
            self.boundaries is not None
            and other.boundaries is not None
            and np.array_equal(self.boundaries, other.boundaries)
        )
        return (self.kind, self.d, self.categories, self.degenerate) == (
            other.kind, other.d, other.categories, other.degenerate
        ) and same_b

    def labels(self) -> list[str]:
        """Human-readable bin labels: category names or interval strings."""
        if self.kind == CATEGORICAL:
            return list(self.categories)
        b = self.boundaries
        out = []
        for i in range(self.d):
            close = "]" if i == self.d - 1 else ")"
            out.append(f"[{b[i]:.6g}, {b[i + 1]:.6g}{close}")
        return out

    def to_dict(self) -> dict:
        doc: dict = {"kind": self.kind, "d": self.d}
        if self.kind == CATEGORICAL:
            doc["categories"] = list(self.categories)
        else:
            doc["boundaries"] = [float(x) for x in self.boundaries]
        if self.degenerate:
            doc["degenerate"] = True
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> BinSpec:
        return cls(
            kind=doc["kind"],
            d=int(doc["d"]),
            boundaries=np.asarray(doc["boundaries"], dtype=np.float64) if "boundaries" in doc else None,
            categories=tuple(doc["categories"]) if "categories" in doc else None,
            degenerate=bool(doc.get("degenerate", False)),
        )


def uses_log_bins(minimum: float, maximum: float) -> bool:
    """The order-of-magnitude rule: log spacing iff max >= 10 * max(min, EPS_POS).

    Compared exactly, so a float product rounding at the threshold cannot flip it.
    """
    return Fraction(maximum) >= Fraction(LOG_RATIO) * Fraction(max(minimum, EPS_POS))


def log_boundaries(lower: float, upper: float, d: int) -> np.ndarray:
    b = 10.0 ** np.linspace(np.log10(lower), np.log10(upper), d + 1)
    b[0], b[-1] = lower, upper
    return b


def choose_binning(
    kind: str,
    stats: AttributeRangeStats,
    d_default: int = DEFAULT_BINS,
    domain: tuple[str, ...] | None = None,
) -> BinSpec:
    """Pick the bin layout for one attribute from its pooled range statistics.

    Categorical attributes need ``domain``.  An attribute whose values are all
    equal yields a flagged single-bin spec.
    """
    if kind == CATEGORICAL:
        if not domain:
            raise ValueError("categorical binning needs the declared domain")
        return BinSpec(CATEGORICAL, len(domain), categories=tuple(domain))
    if stats.empty:
        raise ValueError(f"no values observed for {stats.relation}.{stats.attribute}")
    if d_default < 1:
        raise ValueError("d_default must be >= 1")
    lo, hi = stats.minimum, stats.maximum
    if lo == hi:
        log.warning("attribute %s.%s is constant (%g); using a single bin", stats.relation, stats.attribute, lo)
        return BinSpec(LINEAR, 1, boundaries=np.array([lo, hi]), degenerate=True)
    if uses_log_bins(lo, hi):
        return BinSpec(LOGARITHMIC, d_default, boundaries=log_boundaries(max(lo, EPS_POS), hi, d_default))
    return BinSpec(LINEAR, d_default, boundaries=np.linspace(lo, hi, d_default + 1))


def bin_codes(values, spec: BinSpec) -> np.ndarray:
    """Bin index of every value.

    Raises:
        ValueError: a categorical value outside the spec's categories.
    """
    if spec.kind == CATEGORICAL:
        index = spec._index
        try:
            return np.fromiter(
                (index[v if isinstance(v, str) else str(v)] for v in values), dtype=np.int64
            )
        except KeyError as exc:
            raise ValueError(f"categorical value {exc.args[0]!r} not among {list(spec.categories)}") from None
    v = np.asarray(values, dtype=np.float64)
    if spec.degenerate:
        return np.zeros(len(v), dtype=np.int64)
    idx = np.searchsorted(spec.boundaries, v, side="right") - 1
    return np.clip(idx, 0, spec.d - 1)


def bin_and_normalize(values, spec: BinSpec) -> DiscreteDistribution:
    """Histogram ``values`` over ``spec`` and normalize by the value count."""
    codes = bin_codes(values, spec)
    n = len(codes)
    counts = np.bincount(codes, minlength=spec.d).astype(np.float64)
    masses = counts / n if n else counts
    return DiscreteDistribution(masses, n)


def histogram_matrix(codes: np.ndarray, offsets: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalized histograms for many nodes at once.

    ``codes`` are bin indices laid out back to back, node ``i`` owning
    ``codes[offsets[i]:offsets[i + 1]]``.  Returns ``(masses, n)`` with empty
    rows left all-zero.
    """
    n = np.diff(offsets)
    rows = np.repeat(np.arange(len(n)), n)
    counts = np.bincount(rows * d + codes, minlength=len(n) * d).reshape(len(n), d).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        masses = np.where(n[:, None] > 0, counts / n[:, None], 0.0)
    return masses, n
