"""Insert and query distributions over a finite universe ``[0, u)``.

A :class:`WeightedUniverse` carries the two oracles the filter is designed
around: ``p[x]``, the probability that a single insert draw yields ``x``, and
``q[x]``, the probability that a query asks for ``x``. Both are dense float64
arrays normalized once at construction.

Sampling uses numpy's PCG64 bit generator seeded directly with the caller's
64-bit seed, followed by inverse-CDF lookup over the cumulative ``p`` array.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

#: Largest universe the harness will enumerate exactly.
MAX_UNIVERSE = 1 << 24

_NORM_TOL = 1e-9


class WeightsFormatError(ValueError):
    """Raised for malformed weight tables (bad header, duplicate or missing ids)."""


def _normalize(weights: np.ndarray, name: str) -> np.ndarray:
    if np.any(~np.isfinite(weights)):
        raise ValueError(f"{name} weights must be finite")
    if np.any(weights < 0):
        raise ValueError(f"{name} weights must be non-negative")
    total = math.fsum(weights.tolist())
    if total <= 0:
        raise ValueError(f"{name} weights must have a positive total")
    out = weights / total
    # one correction pass keeps the compensated sum within tolerance
    drift = math.fsum(out.tolist()) - 1.0
    if abs(drift) > _NORM_TOL:
        out = out / (1.0 + drift)
    return out


@dataclass(frozen=True, eq=False)
class WeightedUniverse:
    """Universe ``[0, u)`` with insert probabilities ``p`` and query probabilities ``q``."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=np.float64)
        q = np.asarray(self.q, dtype=np.float64)
        if p.ndim != 1 or p.shape != q.shape:
            raise ValueError("p and q must be 1-d arrays of equal length")
        if p.size < 1:
            raise ValueError("universe must contain at least one element")
        p = _normalize(p, "p")
        q = _normalize(q, "q")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def u(self) -> int:
        return int(self.p.size)

    def cdf(self) -> np.ndarray:
        """Cumulative insert distribution, ending at exactly 1.0."""
        c = np.cumsum(self.p)
        return c / c[-1]

    def query_only(self) -> int:
        """Number of elements with ``q > 0`` and ``p = 0``: they can only be false positives."""
        return int(np.count_nonzero((self.q > 0) & (self.p == 0)))

    def same_as(self, other: "WeightedUniverse") -> bool:
        return self is other or (
            self.u == other.u
            and np.array_equal(self.p, other.p)
            and np.array_equal(self.q, other.q)
        )


@dataclass(frozen=True, eq=False)
class SampledSet:
    """``n`` ordered draws (with replacement) and the distinct set they produce."""

    draws: np.ndarray
    distinct: np.ndarray

    @property
    def n(self) -> int:
        return int(self.draws.size)


def uniform(u: int) -> WeightedUniverse:
    if u < 1:
        raise ValueError(f"universe size must be >= 1, got {u}")
    w = np.full(u, 1.0 / u)
    return WeightedUniverse(w, w)


def zipf_weights(u: int, s: float) -> np.ndarray:
    """Normalized weights proportional to ``rank ** -s`` with element 0 at rank 1."""
    if u < 1:
        raise ValueError(f"universe size must be >= 1, got {u}")
    if s < 0 or not math.isfinite(s):
        raise ValueError(f"zipf exponent must be finite and >= 0, got {s}")
    ranks = np.arange(1, u + 1, dtype=np.float64)
    w = ranks ** (-float(s))
    return w / math.fsum(w.tolist())


def zipf(
    u: int,
    s: float,
    role: str = "q",
    other: WeightedUniverse | None = None,
) -> WeightedUniverse:
    """Zipf-distributed ``p`` or ``q`` (chosen by ``role``); the other side comes from ``other``.

    When ``other`` is omitted the other side is uniform.
    """
    if role not in ("p", "q"):
        raise ValueError(f"role must be 'p' or 'q', got {role!r}")
    skew = zipf_weights(u, s)
    if other is None:
        base = np.full(u, 1.0 / u)
        base_p = base_q = base
    else:
        if other.u != u:
            raise ValueError(f"other universe has size {other.u}, expected {u}")
        base_p, base_q = other.p, other.q
    if role == "p":
        return WeightedUniverse(skew, base_q)
    return WeightedUniverse(base_p, skew)


def from_table(rows: Iterable[Sequence[float]]) -> WeightedUniverse:
    """Build a universe from ``(id, p, q)`` rows in any order; weights need not be normalized."""
    rows = list(rows)
    if not rows:
        raise WeightsFormatError("weight table is empty")
    u = len(rows)
    p = np.full(u, np.nan)
    q = np.full(u, np.nan)
    seen = np.zeros(u, dtype=bool)
    for row in rows:
        if len(row) != 3:
            raise WeightsFormatError(f"expected (id, p, q), got {row!r}")
        raw_id, wp, wq = row
        try:
            ident = int(raw_id)
            integral = float(raw_id) == ident
        except (TypeError, ValueError):
            integral = False
        if not integral:
            raise WeightsFormatError(f"id {raw_id!r} is not an integer")
        if not 0 <= ident < u:
            raise WeightsFormatError(f"id {ident} outside 0..{u - 1}")
        if seen[ident]:
            raise WeightsFormatError(f"duplicate id {ident}")
        seen[ident] = True
        wp, wq = float(wp), float(wq)
        if wp < 0 or wq < 0:
            raise ValueError(f"negative weight for id {ident}")
        p[ident] = wp
        q[ident] = wq
    return WeightedUniverse(p, q)


def load_weights(path: str | Path) -> WeightedUniverse:
    """Read a ``id,p,q`` CSV file (header line required)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "p", "q"]:
            raise WeightsFormatError(f"{path}: header must be 'id,p,q'")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) != 3:
                raise WeightsFormatError(f"{path}:{lineno}: expected 3 fields")
            try:
                rows.append((int(rec[0]), float(rec[1]), float(rec[2])))
            except ValueError as exc:
                raise WeightsFormatError(f"{path}:{lineno}: {exc}") from None
    return from_table(rows)


def save_weights(w: WeightedUniverse, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["id", "p", "q"])
        for x in range(w.u):
            out.writerow([x, repr(float(w.p[x])), repr(float(w.q[x]))])


def sample_set(w: WeightedUniverse, n: int, seed: int) -> SampledSet:
    """Draw ``n`` ids i.i.d. from ``p``; a pure function of ``(w, n, seed)``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))
    r = rng.random(n)
    draws = np.searchsorted(w.cdf(), r, side="right").astype(np.int64)
    # r < 1 and cdf[-1] == 1 keep draws in range; zero-mass ids are never hit
    return SampledSet(draws=draws, distinct=np.unique(draws))


def assumption_value(w: WeightedUniverse, n: int) -> float:
    """``n * sum_x p_x q_x``."""
    return n * math.fsum((w.p * w.q).tolist())


def assumption_holds(w: WeightedUniverse, n: int, fpr: float) -> tuple[bool, float]:
    """Whether ``n * sum_x p_x q_x <= fpr``, together with the left-hand side."""
    if not 0 < fpr < 1:
        raise ValueError(f"false-positive rate must be in (0, 1), got {fpr}")
    value = assumption_value(w, n)
    return value <= fpr, value


def entropy_bits(w: WeightedUniverse, n: int) -> float:
    """Entropy of ``n`` independent draws from ``p``, in bits."""
    p = w.p[w.p > 0]
    return n * math.fsum((-p * np.log2(p)).tolist())
