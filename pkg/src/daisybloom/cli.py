"""Command-line front end: ``daisybloom {plan,simulate,sweep,audit} CONFIG``.

The config is an INI file::

    [universe]
    kind = zipf          # uniform | zipf | file
    u = 1048576
    s = 1.2              # zipf exponent
    side = q             # which distribution is skewed: p | q
    path = weights.csv   # kind = file: CSV with header id,p,q

    [experiment]
    n = 1000
    fpr = 0.01
    kinds = daisy, standard
    trials = 200
    seed = 1
    out = -              # '-' is stdout

    [sweep]
    param = fpr          # fpr | zipf_s
    values = 0.0625, 0.03125, 0.015625

Flags ``--n --fpr --trials --seed --out`` override the file. ``DAISY_SEED``
overrides the configured seed; an explicit ``--seed`` wins over both.
Exit status: 0 ok, 2 configuration or usage error, 3 audit failure.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import distributions as dist
from .analysis import AuditError, run_audit, run_batch, theorem5_bound
from .planner import PLANNERS, make_plan, plan_report
from .report import (
    AUDIT_COLUMNS,
    SUMMARY_COLUMNS,
    SWEEP_COLUMNS,
    TRIAL_COLUMNS,
    Table,
    audit_row,
    plan_blocks,
    summary_row,
    trial_row,
)

EXIT_CONFIG = 2
EXIT_AUDIT = 3


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    universe_kind: str = "uniform"
    u: int = 1 << 20
    s: float = 1.0
    side: str = "q"
    path: str | None = None
    n: int = 1000
    fpr: float = 0.01
    kinds: tuple[str, ...] = ("daisy",)
    trials: int = 1
    seed: int = 1
    out: str = "-"
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()

    def validate(self) -> "ExperimentConfig":
        if self.universe_kind not in ("uniform", "zipf", "file"):
            raise ConfigError(f"unknown universe kind {self.universe_kind!r}")
        if self.universe_kind == "file" and not self.path:
            raise ConfigError("universe kind 'file' needs a path")
        if self.universe_kind != "file" and not 1 <= self.u <= dist.MAX_UNIVERSE:
            raise ConfigError(f"u must be in [1, {dist.MAX_UNIVERSE}], got {self.u}")
        if self.side not in ("p", "q"):
            raise ConfigError(f"side must be p or q, got {self.side!r}")
        if self.s < 0:
            raise ConfigError(f"zipf exponent must be >= 0, got {self.s}")
        if not 0 < self.fpr < 1:
            raise ConfigError(f"fpr must be in (0, 1), got {self.fpr}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.kinds:
            raise ConfigError("no plan kinds given")
        for k in self.kinds:
            if k not in PLANNERS:
                raise ConfigError(f"unknown plan kind {k!r}; expected {sorted(PLANNERS)}")
        return self


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.replace(";", ",").split(",") if t.strip()]


def load_config(path: str | Path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    uni = parser["universe"] if parser.has_section("universe") else {}
    exp = parser["experiment"] if parser.has_section("experiment") else {}
    swp = parser["sweep"] if parser.has_section("sweep") else {}
    base = ExperimentConfig()
    try:
        cfg = ExperimentConfig(
            universe_kind=uni.get("kind", base.universe_kind).strip(),
            u=int(uni.get("u", base.u)),
            s=float(uni.get("s", base.s)),
            side=uni.get("side", base.side).strip(),
            path=_resolve(path, uni.get("path")),
            n=int(exp.get("n", base.n)),
            fpr=float(exp.get("fpr", base.fpr)),
            kinds=tuple(_split(exp.get("kinds", ",".join(base.kinds)))),
            trials=int(exp.get("trials", base.trials)),
            seed=int(exp.get("seed", str(base.seed)), 0),
            out=exp.get("out", base.out).strip(),
            sweep_param=swp.get("param", "").strip() or None,
            sweep_values=tuple(float(v) for v in _split(swp.get("values", ""))),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg


def _resolve(config_path, value: str | None) -> str | None:
    if not value:
        return None
    p = Path(value.strip())
    if not p.is_absolute():
        p = Path(config_path).parent / p
    return str(p)


def build_universe(cfg: ExperimentConfig, s: float | None = None) -> dist.WeightedUniverse:
    if cfg.universe_kind == "file":
        try:
            w = dist.load_weights(cfg.path)
        except OSError as exc:
            raise ConfigError(f"cannot read weights {cfg.path}: {exc.strerror}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if w.u > dist.MAX_UNIVERSE:
            raise ConfigError(f"weights file has {w.u} elements, cap is {dist.MAX_UNIVERSE}")
        return w
    if cfg.universe_kind == "zipf" or s is not None:
        return dist.zipf(cfg.u, cfg.s if s is None else s, role=cfg.side)
    return dist.uniform(cfg.u)


def _emit(cfg: ExperimentConfig, text: str) -> None:
    if cfg.out in ("-", ""):
        sys.stdout.write(text)
    else:
        Path(cfg.out).write_text(text)


def cmd_plan(cfg: ExperimentConfig) -> int:
    w = build_universe(cfg)
    table = Table()
    for kind in cfg.kinds:
        plan = make_plan(kind, w, cfg.n, cfg.fpr)
        ok, value = dist.assumption_holds(w, cfg.n, plan.F_internal)
        extras = {
            "theorem5_bound": theorem5_bound(w, cfg.n, cfg.fpr),
            "entropy_bits": dist.entropy_bits(w, cfg.n),
            "assumption_value": value,
            "assumption_ok": ok,
        }
        plan_blocks(table, plan_report(plan), extras)
    _emit(cfg, table.getvalue())
    return 0


def cmd_simulate(cfg: ExperimentConfig) -> int:
    w = build_universe(cfg)
    rows, summaries = [], []
    for kind in cfg.kinds:
        batch = run_batch(w, cfg.n, cfg.fpr, kind, cfg.trials, cfg.seed)
        rows.extend(trial_row(r) for r in batch.reports)
        summaries.append(summary_row(batch))
    table = Table()
    table.block(TRIAL_COLUMNS, rows)
    table.block(SUMMARY_COLUMNS, summaries)
    _emit(cfg, table.getvalue())
    return 0


def cmd_sweep(cfg: ExperimentConfig) -> int:
    if cfg.sweep_param not in ("fpr", "zipf_s"):
        raise ConfigError(f"sweep param must be 'fpr' or 'zipf_s', got {cfg.sweep_param!r}")
    if not cfg.sweep_values:
        raise ConfigError("sweep list is empty")
    if cfg.sweep_param == "zipf_s" and cfg.universe_kind == "file":
        raise ConfigError("a zipf_s sweep needs a uniform or zipf universe")
    rows = []
    for value in cfg.sweep_values:
        if cfg.sweep_param == "fpr":
            point = replace(cfg, fpr=value).validate()
            w = build_universe(point)
        else:
            if value < 0:
                raise ConfigError(f"zipf exponent must be >= 0, got {value}")
            point = cfg
            w = build_universe(cfg, s=value)
        for kind in cfg.kinds:
            batch = run_batch(w, point.n, point.fpr, kind, point.trials, point.seed)
            rows.append([cfg.sweep_param, value, *summary_row(batch)])
    table = Table()
    table.block(SWEEP_COLUMNS, rows)
    _emit(cfg, table.getvalue())
    return 0


def cmd_audit(cfg: ExperimentConfig) -> int:
    w = build_universe(cfg)
    plan = make_plan("daisy", w, cfg.n, cfg.fpr)
    audits = [run_audit(w, cfg.n, cfg.fpr, cfg.seed + t, plan) for t in range(cfg.trials)]
    table = Table()
    table.block(AUDIT_COLUMNS, (audit_row(a) for a in audits))
    _emit(cfg, table.getvalue())
    bad = [a.seed for a in audits if not a.kraft_ok]
    if bad:
        print(f"audit failure: Kraft sum above 1 for seeds {bad}", file=sys.stderr)
        return EXIT_AUDIT
    return 0


COMMANDS = {
    "plan": cmd_plan,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
}


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in _split(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daisybloom", description="Daisy Bloom filter planning and experiments."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "plan": "per-class plan summary and space bounds",
        "simulate": "seeded trials with exact false-positive measurement",
        "sweep": "batch summaries over a list of fpr values or zipf exponents",
        "audit": "lower-bound encoding lengths and Kraft sums",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="INI experiment config")
        p.add_argument("--n", type=int)
        p.add_argument("--fpr", type=float)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=lambda v: int(v, 0))
        p.add_argument("--out")
        if name == "sweep":
            g = p.add_mutually_exclusive_group()
            g.add_argument("--fpr-list", type=_float_list, help="comma-separated fpr values")
            g.add_argument("--zipf-list", type=_float_list, help="comma-separated exponents")
    return parser


def resolve(args: argparse.Namespace, environ=os.environ) -> ExperimentConfig:
    cfg = load_config(args.config)
    env_seed = environ.get("DAISY_SEED")
    if env_seed:
        try:
            cfg = replace(cfg, seed=int(env_seed, 0))
        except ValueError:
            raise ConfigError(f"DAISY_SEED={env_seed!r} is not an integer") from None
    overrides = {
        k: getattr(args, k) for k in ("n", "fpr", "trials", "seed", "out")
        if getattr(args, k) is not None
    }
    cfg = replace(cfg, **overrides)
    if getattr(args, "fpr_list", None) is not None:
        cfg = replace(cfg, sweep_param="fpr", sweep_values=args.fpr_list)
    if getattr(args, "zipf_list", None) is not None:
        cfg = replace(cfg, sweep_param="zipf_s", sweep_values=args.zipf_list)
    return cfg.validate()


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"daisybloom: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AuditError as exc:
        print(f"daisybloom: audit failure: {exc}", file=sys.stderr)
        return EXIT_AUDIT


if __name__ == "__main__":
    sys.exit(main())
