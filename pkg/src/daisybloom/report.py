"""CSV emitters. Numbers are written with 12 significant digits."""

from __future__ import annotations

import csv
import io
from typing import Iterable, Sequence

from .analysis import BatchSummary, BoundAudit, TrialReport
from .planner import PlanReport

TRIAL_COLUMNS = [
    "trial", "seed", "kind", "F_user", "F_internal", "n", "u", "m_bits", "X", "x_expect",
    "tau", "concentration_ok", "rho", "rho_ok", "fpr",
    "fpr_U0", "fpr_U1", "fpr_U2", "fpr_U3", "fpr_U4",
    "assumption_value", "assumption_ok",
]

SUMMARY_COLUMNS = [
    "kind", "trials", "F_user", "F_internal", "n", "u", "m_bits", "lb_bits", "bits_per_key",
    "standard_bits_per_key", "fpr_mean", "fpr_median", "fpr_q95", "fpr_max", "frac_fpr_ok",
    "frac_fpr_ok_given_conc", "frac_concentration_ok", "frac_rho_ok", "frac_rho_ok_given_conc",
    "max_probe", "hash_cap",
]

PLAN_CLASS_COLUMNS = ["class", "count", "sum_p", "sum_q", "k_min", "k_max"]
PLAN_SUMMARY_COLUMNS = ["lb_bits", "m_bits", "F_user", "F_internal", "kind", "degenerate"]
PLAN_BOUNDS_COLUMNS = [
    "kind", "expected_distinct", "bits_per_key", "theorem5_bound", "entropy_bits",
    "assumption_value", "assumption_ok", "query_only",
]
K_HIST_COLUMNS = ["kind", "k", "count"]

AUDIT_COLUMNS = [
    "seed", "n", "u", "F", "lb_bits", "theorem5_bound", "entropy_bits", "encoding_total_bits",
    "encoded_bits", "kraft_U0U1", "kraft_U2", "kraft_U3", "kraft_U4", "kraft_total",
    "filter_bits", "bound_ok", "kraft_ok",
]

SWEEP_COLUMNS = ["param", "value"] + SUMMARY_COLUMNS


def fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


class Table:
    """Accumulates CSV blocks; blocks are separated by one blank line."""

    def __init__(self) -> None:
        self._buf = io.StringIO()
        self._w = csv.writer(self._buf, lineterminator="\n")
        self._blocks = 0

    def block(self, header: Sequence[str], rows: Iterable[Sequence]) -> None:
        if self._blocks:
            self._buf.write("\n")
        self._w.writerow(header)
        for row in rows:
            self._w.writerow([fmt(v) for v in row])
        self._blocks += 1

    def getvalue(self) -> str:
        return self._buf.getvalue()


def trial_row(r: TrialReport) -> list:
    by_class = r.fpr_by_class or [None] * 5
    return [
        r.trial, r.seed, r.kind, r.F_user, r.F_internal, r.n, r.u, r.m_bits, r.X, r.x_expect,
        r.tau, r.concentration_ok, r.rho, r.rho_ok, r.fpr, *by_class,
        r.assumption_value, r.assumption_ok,
    ]


def summary_row(b: BatchSummary) -> list:
    return [getattr(b, c) for c in SUMMARY_COLUMNS]


def plan_blocks(table: Table, rep: PlanReport, extras: dict) -> None:
    table.block(
        PLAN_CLASS_COLUMNS,
        ([c.cls.name, c.count, c.sum_p, c.sum_q, c.k_min, c.k_max] for c in rep.classes),
    )
    table.block(
        PLAN_SUMMARY_COLUMNS,
        [[rep.lb_bits, rep.m_bits, rep.F_user, rep.F_internal, rep.kind, rep.degenerate]],
    )
    table.block(
        PLAN_BOUNDS_COLUMNS,
        [[rep.kind, rep.expected_distinct, rep.bits_per_key, extras["theorem5_bound"],
          extras["entropy_bits"], extras["assumption_value"], extras["assumption_ok"],
          rep.query_only]],
    )
    table.block(K_HIST_COLUMNS, ([rep.kind, k, c] for k, c in rep.k_histogram.items()))


def audit_row(a: BoundAudit) -> list:
    return [
        a.seed, a.n, a.u, a.F, a.lb_bits, a.theorem5_bound, a.entropy_bits,
        a.encoding_total_bits, a.encoded_bits, a.kraft["U0U1"], a.kraft["U2"],
        a.kraft["U3"], a.kraft["U4"], a.kraft_total, a.filter_bits,
        a.theorem5_bound <= a.filter_bits, a.kraft_ok,
    ]
