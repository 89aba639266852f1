import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_fpr

from daisybloom.analysis import (
    BoundAudit,
    concentration_check,
    encoding_lengths,
    exact_weighted_fpr,
    rho_check,
    rho_threshold,
    run_audit,
    run_batch,
    run_trial,
    theorem5_bound,
)
from daisybloom.distributions import (
    SampledSet,
    WeightedUniverse,
    entropy_bits,
    from_table,
    sample_set,
    uniform,
    zipf,
)
from daisybloom.filter import DaisyFilter, build
from daisybloom.planner import PartitionClass, classify, plan_daisy, plan_standard


def small_universes(max_u=200):
    return st.tuples(
        st.lists(st.floats(0, 5), min_size=2, max_size=max_u),
        st.lists(st.floats(0, 5), min_size=2, max_size=max_u),
        st.integers(1, 40),
        st.floats(0.005, 0.5),
        st.integers(0, 2**64 - 1),
    )


def _universe(ps, qs):
    size = min(len(ps), len(qs))
    ps, qs = list(ps[:size]), list(qs[:size])
    if sum(ps) <= 0:
        ps[0] = 1.0
    if sum(qs) <= 0:
        qs[-1] = 1.0
    return WeightedUniverse(np.array(ps), np.array(qs))


def test_fpr_all_ones():
    w = zipf(300, 1.0, role="q")
    plan = plan_daisy(w, 20, 0.05)
    s = sample_set(w, 20, 2)
    f = DaisyFilter(plan, seed=2)
    f.words[:] = np.uint64(2**64 - 1)
    fpr, by_class = exact_weighted_fpr(f, s, w)
    outside = np.setdiff1d(np.arange(w.u), s.distinct)
    assert fpr == pytest.approx(math.fsum(w.q[outside].tolist()), rel=1e-12)
    assert math.fsum(by_class) == pytest.approx(fpr, abs=1e-12)


def test_fpr_empty_bits():
    w = uniform(500)
    plan = plan_daisy(w, 10, 0.05)
    assert plan.k_int.min() >= 1
    s = sample_set(w, 10, 3)
    fpr, by_class = exact_weighted_fpr(DaisyFilter(plan, seed=3), s, w)
    assert fpr == 0 and by_class == [0.0] * 5


def test_fpr_u16_matches_brute_force():
    w = from_table([(i, 1 + (i % 3), 1 + (i * 7) % 5) for i in range(16)])
    for seed in range(20):
        plan = plan_daisy(w, 3, 0.3)
        s = sample_set(w, 3, seed)
        fpr, _ = exact_weighted_fpr(build(plan, s, seed), s, w)
        assert abs(fpr - brute_force_fpr(plan, s, w, seed)) <= 1e-12


def test_fpr_point_mass():
    # a point mass always gets k = 0 under the daisy plan, so use the classic one
    w = from_table([(0, 1, 0)] + [(i, 0, 1) for i in range(1, 400)])
    plan = plan_standard(w, 4, 0.2)
    assert plan.k_int[0] >= 1
    s = sample_set(w, 4, 11)
    f = build(plan, s, 11)
    yes = np.flatnonzero(f.query_many(np.arange(w.u)))
    expected = math.fsum(w.q[yes[yes != 0]].tolist())
    fpr, _ = exact_weighted_fpr(f, s, w)
    assert fpr == pytest.approx(expected, abs=1e-15)


def test_fpr_rejects_mismatched_universe():
    w = uniform(100)
    plan = plan_daisy(w, 5, 0.1)
    s = sample_set(w, 5, 0)
    with pytest.raises(ValueError):
        exact_weighted_fpr(build(plan, s, 0), s, uniform(101))


@settings(max_examples=60, deadline=None)
@given(small_universes())
def test_fpr_class_split_and_u0_bound(cfg):
    ps, qs, n, F, seed = cfg
    w = _universe(ps, qs)
    plan = plan_daisy(w, n, F)
    s = sample_set(w, n, seed)
    fpr, by_class = exact_weighted_fpr(build(plan, s, seed), s, w)
    assert 0 <= fpr <= 1 + 1e-12
    assert abs(fpr - math.fsum(by_class)) <= 1e-9
    u0 = plan.cls == PartitionClass.U0
    assert by_class[0] <= plan.F_internal * math.fsum(w.p[u0].tolist()) + 1e-15


def test_concentration_examples():
    ok, tau = concentration_check(100, 100.0, 2**-6)
    assert ok and tau == pytest.approx(1 / 12)
    assert not concentration_check(120, 100.0, 2**-6)[0]
    assert concentration_check(108, 100.0, 2**-6)[0]
    ok, tau = concentration_check(5, 0.0, 2**-6)
    assert ok and tau == pytest.approx(1 / 12)


def test_rho_threshold():
    with mpmath.workdps(30):
        exact = 1 - mpmath.power(2, mpmath.mpf(1) / 6) / 2
    assert rho_threshold(2**-6) == pytest.approx(float(exact), rel=1e-14)
    assert rho_threshold(2**-6) == pytest.approx(0.43877, abs=1e-5)
    assert rho_check(0.5, 2**-6)
    assert rho_check(1.0, 2**-6)
    for F in (0.4, 0.1, 2**-6, 1e-4):
        assert rho_check(0.0, F) is False
    assert rho_threshold(0.6) is None and rho_check(0.9, 0.6) is None


def test_size_lower_bound_examples():
    assert theorem5_bound(uniform(1024), 16, 2**-6) == pytest.approx(-1)
    assert theorem5_bound(uniform(2**20), 1000, 2**-10) == pytest.approx(3999)
    all_u0 = from_table([(0, 1, 0), (1, 1, 0), (2, 0, 1)])
    assert theorem5_bound(all_u0, 7, 0.01) == -1 - 6 * 7


def _audit_universe():
    # id 0 is U0 with p = 1/4, the rest spread over the other classes
    rows = [(0, 0.25, 0.0), (1, 0.25, 0.5)]
    rows += [(i, 0.5 / 14, (0.5 / 14) * (1 + i % 3)) for i in range(2, 16)]
    return from_table(rows)


def test_encoding_u0_codeword():
    w = _audit_universe()
    assert classify(0.25, 0.0, 2, 0.1) == PartitionClass.U0
    plan = plan_daisy(w, 2, 0.1)
    s = SampledSet(draws=np.array([0, 0]), distinct=np.array([0]))
    enc = encoding_lengths(build(plan, s, 1), s, w, 0.1)
    assert enc.b.tolist() == [4, 4]


def _independent_lengths(f, s, w, F):
    n = s.n
    p, q = w.p.tolist(), w.q.tolist()
    yes = [f.query(x) for x in range(w.u)]
    cls = [classify(p[x], q[x], n, F) for x in range(w.u)]
    sum_q2 = math.fsum(q[x] for x in range(w.u) if yes[x] and cls[x] == PartitionClass.U2)
    sum_p3 = math.fsum(p[x] for x in range(w.u) if yes[x] and cls[x] == PartitionClass.U3)
    count4 = sum(1 for x in range(w.u) if yes[x] and cls[x] == PartitionClass.U4)
    out = []
    for x in s.draws.tolist():
        c = cls[x]
        if c in (PartitionClass.U0, PartitionClass.U1):
            out.append(math.ceil(math.log2(4 / p[x])))
        elif c == PartitionClass.U2:
            out.append(math.ceil(math.log2(4 * sum_q2 / q[x])))
        elif c == PartitionClass.U3:
            out.append(math.ceil(math.log2(4 * sum_p3 / p[x])))
        else:
            out.append(math.ceil(math.log2(4 * count4)))
    return out


@pytest.mark.parametrize("n, F", [(2, 0.1), (3, 0.3), (5, 0.05)])
def test_encoding_lengths_u16(n, F):
    w = _audit_universe()
    plan = plan_daisy(w, n, F)
    for seed in range(10):
        s = sample_set(w, n, seed)
        f = build(plan, s, seed)
        enc = encoding_lengths(f, s, w, F)
        assert enc.b.tolist() == _independent_lengths(f, s, w, F)
        assert enc.total_bits == sum(enc.b.tolist())
        assert enc.kraft_ok
        assert all(v <= 0.25 + 1e-12 for v in enc.kraft.values())


@settings(max_examples=40, deadline=None)
@given(small_universes(120))
def test_kraft_on_random_instances(cfg):
    ps, qs, n, F, seed = cfg
    w = _universe(ps, qs)
    audit = run_audit(w, n, F, seed)
    assert isinstance(audit, BoundAudit)
    assert audit.kraft_ok and audit.kraft_total <= 1 + 1e-9


def test_encoding_beats_entropy_on_average():
    w = _audit_universe()
    n, F = 3, 0.2
    plan = plan_daisy(w, n, F)
    encoded = [run_audit(w, n, F, seed, plan).encoded_bits for seed in range(100)]
    assert np.mean(encoded) >= entropy_bits(w, n)


def test_run_trial_deterministic():
    w = zipf(4096, 1.2, role="q")
    a = run_trial(w, 50, 0.05, "daisy", 9)
    b = run_trial(w, 50, 0.05, "daisy", 9)
    assert a.as_dict() == b.as_dict()
    assert run_trial(w, 50, 0.05, "daisy", 10).as_dict() != a.as_dict()


def test_run_trial_fields():
    w = uniform(2**14)
    r = run_trial(w, 100, 0.05, "daisy", 4)
    plan = plan_daisy(w, 100, 0.05)
    assert r.m_bits == plan.m_bits and r.F_internal == pytest.approx(0.05 / 6)
    assert r.X == 100 * int(plan.k_int[0])
    assert r.x_expect == pytest.approx(r.X)
    assert r.concentration_ok
    assert r.fpr == pytest.approx(math.fsum(r.fpr_by_class), abs=1e-12)
    assert r.max_probe <= plan.max_hashes
    lean = run_trial(w, 100, 0.05, "daisy", 4, measure_fpr=False)
    assert lean.fpr is None and lean.X == r.X


def test_run_trial_rejects_wrong_plan():
    w = uniform(256)
    with pytest.raises(ValueError):
        run_trial(w, 4, 0.1, "daisy", 0, plan=plan_standard(w, 4, 0.1))


def test_batch_single_trial_equals_report():
    w = zipf(2048, 1.1, role="q")
    batch = run_batch(w, 40, 0.05, "daisy", 1, 17)
    r = run_trial(w, 40, 0.05, "daisy", 17)
    assert batch.reports[0].as_dict() == r.as_dict()
    assert batch.fpr_mean == batch.fpr_median == batch.fpr_max == r.fpr
    assert batch.frac_fpr_ok == float(r.fpr <= 0.05)
    assert batch.frac_concentration_ok == float(r.concentration_ok)
    assert batch.bits_per_key == r.m_bits / 40


def test_batch_rejects_zero_trials():
    with pytest.raises(ValueError):
        run_batch(uniform(16), 1, 0.1, "daisy", 0, 0)


def test_batch_seeds_consecutive():
    batch = run_batch(uniform(512), 8, 0.1, "standard", 3, 40)
    assert [r.seed for r in batch.reports] == [40, 41, 42]
    assert [r.trial for r in batch.reports] == [0, 1, 2]
