"""Exact measurement of built filters.

Every false-positive figure here comes from enumerating the whole universe
against one built filter, so for a given seed it is exact rather than an
estimate. The helpers also evaluate the load and concentration thresholds,
the lower-bound value, and the prefix-code lengths used by the lower-bound
argument, with their Kraft sums.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .distributions import (
    MAX_UNIVERSE,
    SampledSet,
    WeightedUniverse,
    assumption_holds,
    entropy_bits,
    sample_set,
)
from .filter import DaisyFilter, build
from .planner import FilterPlan, PartitionClass, classify_array, lb_bits, make_plan, plan_standard

KRAFT_TOL = 1e-9


class AuditError(RuntimeError):
    """An audited quantity violated a bound that must always hold."""


def _fsum(a: np.ndarray) -> float:
    return math.fsum(np.asarray(a, dtype=np.float64).tolist())


def exact_weighted_fpr(
    f: DaisyFilter, s: SampledSet, w: WeightedUniverse
) -> tuple[float, list[float]]:
    """Query mass of non-members answered YES, overall and per partition class."""
    if w.u > MAX_UNIVERSE:
        raise ValueError(f"universe of {w.u} elements exceeds enumeration cap {MAX_UNIVERSE}")
    if not w.same_as(f.plan.universe):
        raise ValueError("filter and universe do not match")
    outside = np.ones(w.u, dtype=bool)
    outside[s.distinct] = False
    cand = np.flatnonzero(outside & (w.q > 0))
    yes = f.query_many(cand)
    hits = cand[yes]
    cls = f.plan.cls[hits]
    qh = w.q[hits]
    by_class = [_fsum(qh[cls == c]) for c in PartitionClass]
    return _fsum(qh), by_class


def concentration_check(X: int, x_expect: float, F_internal: float) -> tuple[bool, float]:
    """``X <= (1 + tau) * E[X]`` with ``tau = 1 / (2 log2(1/F))``."""
    tau = 1.0 / (2.0 * -math.log2(F_internal))
    if x_expect <= 0:
        return True, tau
    return X <= (1.0 + tau) * x_expect, tau


def rho_threshold(F_internal: float) -> float | None:
    """Smallest zero fraction the analysis allows; ``None`` when ``F > 1/2``."""
    if not 0 < F_internal <= 0.5:
        return None
    return 1.0 - 2.0 ** (1.0 / -math.log2(F_internal)) / 2.0


def rho_check(rho: float, F_internal: float) -> bool | None:
    threshold = rho_threshold(F_internal)
    if threshold is None:
        return None
    return rho >= threshold


def theorem5_bound(w: WeightedUniverse, n: int, F: float) -> float:
    """Lower bound on the expected size in bits of any filter meeting budget ``F``.

    Reported as-is, including negative (vacuous) values.
    """
    return lb_bits(w, n, F) - 1.0 - 6.0 * n


def _code_len(x) -> np.ndarray:
    """``ceil(log2(x))`` elementwise."""
    return np.ceil(np.log2(np.asarray(x, dtype=np.float64))).astype(np.int64)


@dataclass
class EncodingAudit:
    b: np.ndarray
    total_bits: float
    kraft: dict[str, float]
    kraft_total: float
    codebook_sizes: dict[str, int]

    @property
    def kraft_ok(self) -> bool:
        return all(v <= 1 + KRAFT_TOL for v in self.kraft.values()) and (
            self.kraft_total <= 1 + KRAFT_TOL
        )


def encoding_lengths(
    f: DaisyFilter, s: SampledSet, w: WeightedUniverse, F: float
) -> EncodingAudit:
    """Per-draw code lengths of the lower-bound encoding for this filter instance.

    The YES-set of the filter is found by enumeration. Draws are classified at
    budget ``F`` and coded with one of four codebooks (U0 and U1 share one);
    each codebook's Kraft sum is at most 1/4, so their union is a prefix code.
    """
    if w.u > MAX_UNIVERSE:
        raise ValueError(f"universe of {w.u} elements exceeds enumeration cap {MAX_UNIVERSE}")
    n = s.n
    yes = f.query_many(np.arange(w.u))
    cls = classify_array(w.p, w.q, n, F)
    p, q = w.p, w.q

    book01 = ((cls == PartitionClass.U0) | (cls == PartitionClass.U1)) & (p > 0)
    book2 = yes & (cls == PartitionClass.U2)
    book3 = yes & (cls == PartitionClass.U3) & (p > 0)
    book4 = yes & (cls == PartitionClass.U4)
    sum_q2 = _fsum(q[book2])
    sum_p3 = _fsum(p[book3])
    count4 = int(book4.sum())

    # codeword length of every universe element under its own codebook
    lengths = np.zeros(w.u, dtype=np.int64)
    lengths[book01] = _code_len(4.0 / p[book01])
    lengths[book2] = _code_len(4.0 * sum_q2 / q[book2])
    lengths[book3] = _code_len(4.0 * sum_p3 / p[book3])
    if count4:
        lengths[book4] = _code_len(4.0 * count4)
    members = {"U0U1": book01, "U2": book2, "U3": book3, "U4": book4}

    coded = book01 | book2 | book3 | book4
    missing = ~coded[s.draws]
    if np.any(missing):
        x = int(s.draws[np.argmax(missing)])
        raise AuditError(f"draw {x} (class {PartitionClass(int(cls[x])).name}) has no codeword")
    b = lengths[s.draws]

    kraft = {name: _fsum(np.exp2(-lengths[mask].astype(np.float64))) for name, mask in members.items()}
    sizes = {name: int(mask.sum()) for name, mask in members.items()}
    return EncodingAudit(
        b=b,
        total_bits=float(b.sum()),
        kraft=kraft,
        kraft_total=math.fsum(kraft.values()),
        codebook_sizes=sizes,
    )


@dataclass
class BoundAudit:
    seed: int
    n: int
    u: int
    F: float
    lb_bits: float
    theorem5_bound: float
    entropy_bits: float
    encoding_total_bits: float
    kraft: dict[str, float]
    kraft_total: float
    filter_bits: int

    @property
    def kraft_ok(self) -> bool:
        return all(v <= 1 + KRAFT_TOL for v in self.kraft.values()) and (
            self.kraft_total <= 1 + KRAFT_TOL
        )

    @property
    def encoded_bits(self) -> float:
        """Filter bits + 1 flag bit + all draw codewords."""
        return self.filter_bits + 1 + self.encoding_total_bits


def run_audit(
    w: WeightedUniverse, n: int, F_user: float, seed: int, plan: FilterPlan | None = None
) -> BoundAudit:
    """Build one Daisy filter and audit the lower-bound encoding against it at ``F_user``."""
    if plan is None:
        plan = make_plan("daisy", w, n, F_user)
    s = sample_set(w, n, seed)
    f = build(plan, s, seed)
    enc = encoding_lengths(f, s, w, F_user)
    lb = lb_bits(w, n, F_user)
    return BoundAudit(
        seed=seed,
        n=n,
        u=w.u,
        F=F_user,
        lb_bits=lb,
        theorem5_bound=lb - 1.0 - 6.0 * n,
        entropy_bits=entropy_bits(w, n),
        encoding_total_bits=enc.total_bits,
        kraft=enc.kraft,
        kraft_total=enc.kraft_total,
        filter_bits=plan.m_bits,
    )


@dataclass
class TrialReport:
    trial: int
    seed: int
    kind: str
    F_user: float
    F_internal: float
    n: int
    u: int
    m_bits: int
    X: int
    x_expect: float
    tau: float
    concentration_ok: bool
    rho: float
    rho_ok: bool | None
    fpr: float | None
    fpr_by_class: list[float] | None
    assumption_value: float
    assumption_ok: bool
    max_probe: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


def run_trial(
    w: WeightedUniverse,
    n: int,
    F_user: float,
    plan_kind: str,
    seed: int,
    *,
    trial: int = 0,
    plan: FilterPlan | None = None,
    measure_fpr: bool = True,
    x_expect: float | None = None,
    assumption: tuple[bool, float] | None = None,
) -> TrialReport:
    """Sample, build and measure one filter. Deterministic in its arguments.

    The same ``seed`` drives the insert draws and the hash keys. Pass a
    precomputed ``plan`` to skip re-planning across trials; with
    ``measure_fpr=False`` only build-side quantities are reported.
    ``x_expect`` and ``assumption`` depend only on the plan and may be passed
    in by callers that run many trials against one plan.
    """
    if plan is None:
        plan = make_plan(plan_kind, w, n, F_user)
    elif plan.kind != plan_kind:
        raise ValueError(f"plan is {plan.kind!r}, asked for {plan_kind!r}")
    s = sample_set(w, n, seed)
    f = build(plan, s, seed)
    if x_expect is None:
        x_expect = plan.expected_writes()
    conc_ok, tau = concentration_check(f.X, x_expect, plan.F_internal)
    rho = f.zero_fraction()
    if measure_fpr:
        fpr, by_class = exact_weighted_fpr(f, s, w)
    else:
        fpr, by_class = None, None
    ok, value = assumption or assumption_holds(w, n, plan.F_internal)
    return TrialReport(
        trial=trial,
        seed=seed,
        kind=plan.kind,
        F_user=F_user,
        F_internal=plan.F_internal,
        n=n,
        u=w.u,
        m_bits=plan.m_bits,
        X=f.X,
        x_expect=x_expect,
        tau=tau,
        concentration_ok=conc_ok,
        rho=rho,
        rho_ok=rho_check(rho, plan.F_internal),
        fpr=fpr,
        fpr_by_class=by_class,
        assumption_value=value,
        assumption_ok=ok,
        max_probe=f.max_probe,
    )


def _frac(flags) -> float | None:
    flags = list(flags)
    return sum(bool(v) for v in flags) / len(flags) if flags else None


@dataclass
class BatchSummary:
    kind: str
    trials: int
    F_user: float
    F_internal: float
    n: int
    u: int
    m_bits: int
    lb_bits: float
    bits_per_key: float
    standard_bits_per_key: float
    fpr_mean: float | None
    fpr_median: float | None
    fpr_q95: float | None
    fpr_max: float | None
    frac_fpr_ok: float | None
    frac_fpr_ok_given_conc: float | None
    frac_concentration_ok: float
    frac_rho_ok: float | None
    frac_rho_ok_given_conc: float | None
    max_probe: int
    hash_cap: int
    reports: list[TrialReport] = field(repr=False, default_factory=list)


def run_batch(
    w: WeightedUniverse,
    n: int,
    F_user: float,
    plan_kind: str,
    trials: int,
    seed0: int,
    *,
    measure_fpr: bool = True,
    plan: FilterPlan | None = None,
) -> BatchSummary:
    """Run ``trials`` independent trials with seeds ``seed0, seed0 + 1, ...``.

    ``bits_per_key`` is ``m_bits / n``; ``standard_bits_per_key`` is the same
    figure for a classic Bloom filter sized at the Daisy internal budget
    ``F_user / 6``, for side-by-side comparison.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if plan is None:
        plan = make_plan(plan_kind, w, n, F_user)
    shared = dict(
        plan=plan,
        measure_fpr=measure_fpr,
        x_expect=plan.expected_writes(),
        assumption=assumption_holds(w, n, plan.F_internal),
    )
    reports = [
        run_trial(w, n, F_user, plan_kind, seed0 + t, trial=t, **shared) for t in range(trials)
    ]
    reference = plan_standard(w, n, F_user / 6)
    conc = [r for r in reports if r.concentration_ok]
    if measure_fpr:
        fprs = np.array([r.fpr for r in reports])
        fpr_stats = (
            float(fprs.mean()),
            float(np.median(fprs)),
            float(np.quantile(fprs, 0.95)),
            float(fprs.max()),
        )
        frac_ok = _frac(r.fpr <= F_user for r in reports)
        frac_ok_conc = _frac(r.fpr <= F_user for r in conc)
    else:
        fpr_stats = (None, None, None, None)
        frac_ok = frac_ok_conc = None
    rho_flags = [r.rho_ok for r in reports if r.rho_ok is not None]
    rho_conc = [r.rho_ok for r in conc if r.rho_ok is not None]
    return BatchSummary(
        kind=plan.kind,
        trials=trials,
        F_user=F_user,
        F_internal=plan.F_internal,
        n=n,
        u=w.u,
        m_bits=plan.m_bits,
        lb_bits=plan.lb_bits,
        bits_per_key=plan.m_bits / n,
        standard_bits_per_key=reference.m_bits / n,
        fpr_mean=fpr_stats[0],
        fpr_median=fpr_stats[1],
        fpr_q95=fpr_stats[2],
        fpr_max=fpr_stats[3],
        frac_fpr_ok=frac_ok,
        frac_fpr_ok_given_conc=frac_ok_conc,
        frac_concentration_ok=_frac(r.concentration_ok for r in reports),
        frac_rho_ok=_frac(rho_flags),
        frac_rho_ok_given_conc=_frac(rho_conc),
        max_probe=max(r.max_probe for r in reports),
        hash_cap=plan.max_hashes,
        reports=reports,
    )
