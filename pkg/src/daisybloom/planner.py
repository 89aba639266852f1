"""Per-element hash counts and array sizing.

The Daisy rule assigns every element one of five classes from ``(p, q, n, F)``:

====  =====================================  ==========================
class  condition (first match wins)            real hash count
====  =====================================  ==========================
U0    ``q <= F*p``                            0
U1    ``p > 1/n``                             0
U2    ``q <= min(p, F/n)``                    ``log2(q / (F*p))``
U3    ``q > p`` and ``p <= F/n``              ``log2(1/F)``
U4    otherwise (``F/n < p <= 1/n``, q > F/n) ``log2(1/(n*p))``
====  =====================================  ==========================

Class boundaries are decided in exact rational arithmetic so that exactly one
class predicate holds for every float input. A plan built for a user budget
``F`` instantiates both the hash counts and the array at ``F/6``; the bit
array length is ``ceil(log2(e) * n * sum_x p_x k_x)`` with a floor of 64.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .distributions import WeightedUniverse

LOG2E = math.log2(math.e)
MIN_BITS = 64
#: Factor between the user-facing budget and the budget the plan is built at.
BUDGET_SPLIT = 6

_NEAR = 1e-9


class PartitionClass(enum.IntEnum):
    U0 = 0
    U1 = 1
    U2 = 2
    U3 = 3
    U4 = 4


def _check_rate(F: float) -> None:
    if not 0 < F < 1:
        raise ValueError(f"false-positive rate must be in (0, 1), got {F}")


def hash_cap(F: float) -> int:
    """``ceil(log2(1/F))``: the most hash positions any element may use."""
    return max(0, math.ceil(-math.log2(F) - 1e-9))


def classify(p: float, q: float, n: int, F: float) -> PartitionClass:
    """Partition class of a single element, with exact boundary comparisons."""
    P, Q, Fr = Fraction(p), Fraction(q), Fraction(F)
    if Q <= Fr * P:
        return PartitionClass.U0
    if P * n > 1:
        return PartitionClass.U1
    if Q <= P and Q * n <= Fr:
        return PartitionClass.U2
    if Q > P and P * n <= Fr:
        return PartitionClass.U3
    return PartitionClass.U4


def classify_array(p: np.ndarray, q: np.ndarray, n: int, F: float) -> np.ndarray:
    """Vectorized :func:`classify`; elements near a boundary fall back to the exact path."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    f_n = F / n
    inv_n = 1.0 / n
    fp = F * p
    cls = np.full(p.shape, PartitionClass.U4, dtype=np.int8)
    u3 = (q > p) & (p <= f_n)
    u2 = (q <= p) & (q <= f_n)
    cls[u3] = PartitionClass.U3
    cls[u2] = PartitionClass.U2
    cls[p > inv_n] = PartitionClass.U1
    cls[q <= fp] = PartitionClass.U0

    def near(a, b):
        return np.abs(a - b) <= _NEAR * np.maximum(np.abs(a), np.abs(b))

    risky = near(q, fp) | near(p, inv_n) | near(q, p) | near(q, f_n) | near(p, f_n)
    if np.any(risky):
        idx = np.flatnonzero(risky)
        pairs, inverse = np.unique(
            np.stack([p[idx], q[idx]], axis=1), axis=0, return_inverse=True
        )
        exact = np.array([classify(float(a), float(b), n, F) for a, b in pairs], dtype=np.int8)
        cls[idx] = exact[inverse.ravel()]
    return cls


def k_real(p: float, q: float, n: int, F: float) -> float:
    """Real-valued hash count for one element."""
    return float(k_real_array(np.array([p]), np.array([q]), n, F)[0])


def k_real_array(
    p: np.ndarray, q: np.ndarray, n: int, F: float, cls: np.ndarray | None = None
) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if cls is None:
        cls = classify_array(p, q, n, F)
    b = -math.log2(F)
    k = np.zeros(p.shape)
    m2 = cls == PartitionClass.U2
    m3 = cls == PartitionClass.U3
    m4 = cls == PartitionClass.U4
    k[m2] = np.log2(q[m2] / p[m2]) + b
    k[m3] = b
    k[m4] = -np.log2(n * p[m4])
    return np.clip(k, 0.0, b)


def k_int(k: float | np.ndarray, F: float):
    """Round half up, then clamp into ``[0, ceil(log2(1/F))]``."""
    rounded = np.clip(np.floor(np.asarray(k, dtype=np.float64) + 0.5), 0, hash_cap(F))
    if np.ndim(rounded) == 0:
        return int(rounded)
    return rounded.astype(np.int64)


def lb_bits(w: WeightedUniverse, n: int, F: float) -> float:
    """``n * sum_x p_x k_x`` over the U2, U3 and U4 classes."""
    _check_rate(F)
    k = k_real_array(w.p, w.q, n, F)
    return n * math.fsum((w.p * k).tolist())


@dataclass(frozen=True, eq=False)
class FilterPlan:
    universe: WeightedUniverse
    n: int
    F_user: float
    F_internal: float
    k_real: np.ndarray
    k_int: np.ndarray
    cls: np.ndarray
    lb_bits: float
    m_bits: int
    kind: str

    @property
    def degenerate(self) -> bool:
        """True when no element uses any hash position."""
        return self.lb_bits == 0.0

    @property
    def max_hashes(self) -> int:
        return hash_cap(self.F_internal)

    def expected_writes(self) -> float:
        """``n * sum_x p_x k_int[x]``: the expected number of slot writes."""
        return self.n * math.fsum((self.universe.p * self.k_int).tolist())


def _size(lb: float) -> int:
    return max(MIN_BITS, math.ceil(LOG2E * lb))


def _finish(w, n, F_user, F_int, kr, cls, kind, ki=None) -> FilterPlan:
    if ki is None:
        ki = k_int(kr, F_int)
    lb = n * math.fsum((w.p * kr).tolist())
    for arr in (kr, ki, cls):
        arr.setflags(write=False)
    return FilterPlan(
        universe=w, n=n, F_user=F_user, F_internal=F_int,
        k_real=kr, k_int=ki, cls=cls, lb_bits=lb, m_bits=_size(lb), kind=kind,
    )


def plan_daisy(w: WeightedUniverse, n: int, F_user: float) -> FilterPlan:
    _check_rate(F_user)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    F_int = F_user / BUDGET_SPLIT
    cls = classify_array(w.p, w.q, n, F_int)
    kr = k_real_array(w.p, w.q, n, F_int, cls)
    return _finish(w, n, F_user, F_int, kr, cls, "daisy")


def plan_standard(w: WeightedUniverse, n: int, F: float) -> FilterPlan:
    """Classic Bloom filter: ``ceil(log2(1/F))`` hashes for everyone."""
    _check_rate(F)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    kr = np.full(w.u, -math.log2(F))
    ki = np.full(w.u, hash_cap(F), dtype=np.int64)
    cls = classify_array(w.p, w.q, n, F)
    return _finish(w, n, F, F, kr, cls, "standard", ki)


def plan_ratio_only(w: WeightedUniverse, n: int, F_user: float) -> FilterPlan:
    """Hash count from the ratio ``p/q`` alone, ignoring ``n``.

    ``k = 0`` if ``p/q >= 1/F``; ``log2(q/(F*p))`` if ``1 < p/q < 1/F``;
    ``log2(1/F)`` otherwise (ratio exactly 1 included). Built at ``F_user/6``.
    """
    _check_rate(F_user)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    F_int = F_user / BUDGET_SPLIT
    p, q = w.p, w.q
    cls = classify_array(p, q, n, F_int)
    b = -math.log2(F_int)
    kr = np.full(w.u, b)
    kr[cls == PartitionClass.U0] = 0.0  # U0 is exactly q <= F*p, i.e. p/q >= 1/F
    mid = (cls != PartitionClass.U0) & (p > q)
    kr[mid] = np.log2(q[mid] / p[mid]) + b
    kr = np.clip(kr, 0.0, b)
    return _finish(w, n, F_user, F_int, kr, cls, "ratio_only")


PLANNERS = {
    "daisy": plan_daisy,
    "standard": plan_standard,
    "ratio_only": plan_ratio_only,
}


def make_plan(kind: str, w: WeightedUniverse, n: int, F_user: float) -> FilterPlan:
    """Plan of the given kind; the standard baseline is sized at ``F_user`` itself."""
    try:
        planner = PLANNERS[kind]
    except KeyError:
        raise ValueError(f"unknown plan kind {kind!r}; expected one of {sorted(PLANNERS)}") from None
    return planner(w, n, F_user)


@dataclass
class ClassSummary:
    cls: PartitionClass
    count: int
    sum_p: float
    sum_q: float
    k_min: int | None
    k_max: int | None


@dataclass
class PlanReport:
    classes: list[ClassSummary]
    k_histogram: dict[int, int]
    lb_bits: float
    m_bits: int
    F_user: float
    F_internal: float
    kind: str
    degenerate: bool
    expected_distinct: float
    bits_per_key: float
    query_only: int = field(default=0)


def expected_distinct(w: WeightedUniverse, n: int) -> float:
    """Expected number of distinct ids among ``n`` draws."""
    miss = np.exp(n * np.log1p(-np.minimum(w.p, 1.0 - 1e-300)))
    miss[w.p >= 1.0] = 0.0
    return math.fsum((1.0 - miss).tolist())


def plan_report(plan: FilterPlan) -> PlanReport:
    w = plan.universe
    classes = []
    for c in PartitionClass:
        mask = plan.cls == c
        ks = plan.k_int[mask]
        classes.append(
            ClassSummary(
                cls=c,
                count=int(mask.sum()),
                sum_p=math.fsum(w.p[mask].tolist()),
                sum_q=math.fsum(w.q[mask].tolist()),
                k_min=int(ks.min()) if ks.size else None,
                k_max=int(ks.max()) if ks.size else None,
            )
        )
    hist = Counter(plan.k_int.tolist())
    distinct = expected_distinct(w, plan.n)
    return PlanReport(
        classes=classes,
        k_histogram=dict(sorted(hist.items())),
        lb_bits=plan.lb_bits,
        m_bits=plan.m_bits,
        F_user=plan.F_user,
        F_internal=plan.F_internal,
        kind=plan.kind,
        degenerate=plan.degenerate,
        expected_distinct=distinct,
        bits_per_key=plan.m_bits / distinct if distinct > 0 else math.inf,
        query_only=w.query_only(),
    )
