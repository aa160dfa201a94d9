"""Interval-valued observations and their internal (uniform) representation.

An observation is a hyper-rectangle ``[a_1, b_1] x ... x [a_p, b_p]``.  Points
are assumed to be spread uniformly inside it, which gives each observation a
mean vector ``theta1`` (the midpoints) and a spread matrix ``theta2`` equal to
``w w^T / 12`` where ``w`` holds the interval widths.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import DataError

BUNDLED_DATASETS = ("medical", "cars")


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lower, upper]``; ``lower == upper`` is a point."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise DataError(f"interval endpoints must be finite: [{self.lower}, {self.upper}]")
        if self.lower > self.upper:
            raise DataError(f"lower > upper: [{self.lower}, {self.upper}]")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class IntervalObservation:
    coords: tuple[Interval, ...]

    def __post_init__(self):
        if len(self.coords) < 1:
            raise DataError("an observation needs at least one interval")

    @classmethod
    def from_bounds(cls, lower: Sequence[float], upper: Sequence[float]) -> IntervalObservation:
        return cls(tuple(Interval(float(a), float(b)) for a, b in zip(lower, upper, strict=True)))

    @property
    def p(self) -> int:
        return len(self.coords)

    @property
    def lower(self) -> np.ndarray:
        return np.array([c.lower for c in self.coords])

    @property
    def upper(self) -> np.ndarray:
        return np.array([c.upper for c in self.coords])


@dataclass(frozen=True, eq=False)
class IntervalDataset:
    """``n`` observations of ``p`` intervals, stored column-wise.

    ``lower`` and ``upper`` are ``(n, p)`` arrays; ``names`` labels the ``p``
    variables.
    """

    lower: np.ndarray
    upper: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float, ndmin=2)
        upper = np.array(self.upper, dtype=float, ndmin=2)
        if lower.shape != upper.shape or lower.ndim != 2:
            raise DataError(f"lower/upper shape mismatch: {lower.shape} vs {upper.shape}")
        n, p = lower.shape
        if n < 1 or p < 1:
            raise DataError("dataset needs n >= 1 observations of p >= 1 variables")
        if len(self.names) != p:
            raise DataError(f"{len(self.names)} names given for {p} variables")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise DataError("interval endpoints must be finite")
        bad = np.argwhere(lower > upper)
        if bad.size:
            i, j = bad[0]
            raise DataError(f"lower > upper at row {i + 1}, var {j + 1}")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "names", tuple(self.names))

    @classmethod
    def from_observations(cls, observations: Sequence[IntervalObservation],
                          names: Sequence[str] | None = None) -> IntervalDataset:
        if not observations:
            raise DataError("dataset needs at least one observation")
        p = observations[0].p
        if any(o.p != p for o in observations):
            raise DataError("all observations must have the same number of intervals")
        if names is None:
            names = [str(j + 1) for j in range(p)]
        return cls(np.array([o.lower for o in observations]),
                   np.array([o.upper for o in observations]), tuple(names))

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def p(self) -> int:
        return self.lower.shape[1]

    @property
    def observations(self) -> list[IntervalObservation]:
        return [IntervalObservation.from_bounds(a, b) for a, b in zip(self.lower, self.upper)]

    def __len__(self):
        return self.n

    def __getitem__(self, i: int) -> IntervalObservation:
        return IntervalObservation.from_bounds(self.lower[i], self.upper[i])

    def theta1(self) -> np.ndarray:
        """Midpoint vectors, shape ``(n, p)``."""
        return 0.5 * (self.lower + self.upper)

    def theta2(self) -> np.ndarray:
        """Spread matrices, shape ``(n, p, p)``."""
        w = self.upper - self.lower
        return w[:, :, None] * w[:, None, :] / 12.0

    def internal_reps(self) -> list[InternalRep]:
        return [InternalRep(t1, t2) for t1, t2 in zip(self.theta1(), self.theta2())]


@dataclass(frozen=True, eq=False)
class InternalRep:
    """Mean vector and spread matrix of one observation's internal distribution."""

    theta1: np.ndarray
    theta2: np.ndarray

    def to_dict(self) -> dict:
        return {"theta1": np.asarray(self.theta1).tolist(),
                "theta2": np.asarray(self.theta2).tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> InternalRep:
        t1 = np.asarray(d["theta1"], dtype=float)
        t2 = np.asarray(d["theta2"], dtype=float)
        if t2.shape != (t1.size, t1.size):
            raise DataError(f"theta2 shape {t2.shape} does not match theta1 length {t1.size}")
        return cls(t1, t2)


def internal_mean(obs: IntervalObservation) -> np.ndarray:
    """Midpoint vector ``(a_j + b_j) / 2``."""
    return 0.5 * (obs.lower + obs.upper)


def internal_spread(obs: IntervalObservation) -> np.ndarray:
    """Spread matrix with entries ``(b_j - a_j)(b_k - a_k) / 12``."""
    w = obs.upper - obs.lower
    return np.outer(w, w) / 12.0


def to_internal(obs: IntervalObservation) -> InternalRep:
    return InternalRep(internal_mean(obs), internal_spread(obs))


# --------------------------------------------------------------------------
# Descriptive statistics under the uniform-spread assumption
# --------------------------------------------------------------------------

def describe_mean_var(data: IntervalDataset, j: int) -> tuple[float, float]:
    """Symbolic sample mean and variance of variable ``j`` (0-based).

    Treats the sample as an equal-weight mixture of uniform distributions on
    the observed intervals::

        mean = (2n)^-1 sum(a + b)
        var  = (3n)^-1 sum(a^2 + a b + b^2) - mean^2
    """
    a = data.lower[:, j]
    b = data.upper[:, j]
    n = data.n
    mean = math.fsum(a + b) / (2 * n)
    # centring first keeps the subtraction well conditioned
    ac = a - mean
    bc = b - mean
    var = math.fsum(ac * ac + ac * bc + bc * bc) / (3 * n)
    return mean, var


def describe_cov(data: IntervalDataset, j: int, k: int) -> float:
    """Symbolic sample covariance of variables ``j`` and ``k`` (0-based).

    Each rectangle contributes the covariance of a point moving uniformly
    along its main diagonal::

        (6n)^-1 sum[2 a_j' a_k' + a_j' b_k' + b_j' a_k' + 2 b_j' b_k']

    with primes denoting deviations from the symbolic means.  For ``j == k``
    this is the variance from :func:`describe_mean_var`.
    """
    mj, _ = describe_mean_var(data, j)
    mk, _ = describe_mean_var(data, k)
    aj = data.lower[:, j] - mj
    bj = data.upper[:, j] - mj
    ak = data.lower[:, k] - mk
    bk = data.upper[:, k] - mk
    # cross terms summed in a fixed order so (j, k) and (k, j) agree exactly
    cross = np.sort(np.stack([aj * bk, bj * ak]), axis=0).sum(axis=0)
    terms = 2 * aj * ak + cross + 2 * bj * bk
    return math.fsum(terms) / (6 * data.n)


def describe(data: IntervalDataset) -> dict:
    """All per-variable means/variances and pairwise covariances."""
    variables = []
    for j, name in enumerate(data.names):
        mean, var = describe_mean_var(data, j)
        variables.append({"name": name, "mean": mean, "variance": var})
    covariances = []
    for j in range(data.p):
        for k in range(j + 1, data.p):
            covariances.append({"pair": [data.names[j], data.names[k]],
                                "covariance": describe_cov(data, j, k)})
    return {"n": data.n, "p": data.p, "variables": variables, "covariances": covariances}


# --------------------------------------------------------------------------
# CSV I/O
# --------------------------------------------------------------------------

def _parse_header(header: list[str]) -> tuple[str, ...]:
    header = [h.strip() for h in header]
    if len(header) == 0 or len(header) % 2:
        raise DataError(f"header must hold a/b column pairs, got {len(header)} columns")
    names = []
    for j in range(0, len(header), 2):
        lo, hi = header[j], header[j + 1]
        if not (lo.startswith("a_") and hi.startswith("b_") and lo[2:] == hi[2:] and lo[2:]):
            raise DataError(f"header columns {j + 1}-{j + 2} must be 'a_<name>,b_<name>', "
                            f"got {lo!r},{hi!r}")
        names.append(lo[2:])
    return tuple(names)


def parse_dataset(text: str) -> IntervalDataset:
    """Parse CSV text with header ``a_1,b_1,...,a_p,b_p``.

    A headerless body (first line numeric) is accepted too; variables are
    then named ``1..p``.

    Raises
    ------
    DataError
        On an odd column count, a non-numeric cell, a non-finite value or
        ``lower > upper``; the message names the row and variable (1-based,
        counting data rows only).
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError("empty dataset")
    try:
        [float(c) for c in rows[0]]
        names = None
    except ValueError:
        names = _parse_header(rows[0])
        rows = rows[1:]
    if not rows:
        raise DataError("dataset has a header but no rows")
    ncol = len(rows[0]) if names is None else 2 * len(names)
    if ncol % 2:
        raise DataError(f"odd column count {ncol} at row 1")
    values = np.empty((len(rows), ncol))
    for i, row in enumerate(rows):
        if len(row) != ncol:
            raise DataError(f"row {i + 1} has {len(row)} columns, expected {ncol}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"malformed number {cell.strip()!r} at row {i + 1}, "
                                f"var {c // 2 + 1}") from None
            if not math.isfinite(v):
                raise DataError(f"non-finite value at row {i + 1}, var {c // 2 + 1}")
            values[i, c] = v
    if names is None:
        names = tuple(str(j + 1) for j in range(ncol // 2))
    return IntervalDataset(values[:, 0::2], values[:, 1::2], names)


def dataset_to_csv(data: IntervalDataset) -> str:
    """Serialise to the CSV schema; ``repr`` keeps every float exact."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([f"{ab}_{name}" for name in data.names for ab in ("a", "b")])
    for lo, hi in zip(data.lower, data.upper):
        w.writerow([repr(float(x)) for pair in zip(lo, hi) for x in pair])
    return out.getvalue()


def read_dataset(path: str | Path) -> IntervalDataset:
    """Read a CSV file; bare names ``medical``/``cars`` (with or without
    ``.csv``) fall back to the bundled datasets when no such file exists."""
    path = Path(path)
    if not path.exists():
        stem = path.name.removesuffix(".csv")
        if path.parent == Path(".") and stem in BUNDLED_DATASETS:
            return load_bundled(stem)
        raise FileNotFoundError(f"no such file: {path}")
    return parse_dataset(path.read_text())


def load_bundled(name: str) -> IntervalDataset:
    """Load a bundled dataset: ``medical`` (59 patients, pulse and blood
    pressure ranges) or ``cars`` (8 car models, 4 variables)."""
    if name not in BUNDLED_DATASETS:
        raise KeyError(f"unknown bundled dataset {name!r}; choose from {BUNDLED_DATASETS}")
    text = resources.files("interval_stats").joinpath("data").joinpath(f"{name}.csv").read_text()
    return parse_dataset(text)
