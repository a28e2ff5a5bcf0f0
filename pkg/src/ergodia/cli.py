"""Command line: ``ergodia run | gen | export``.

``run`` evaluates check suites on a fixture or configuration file and writes a
JSON report; the exit status is 0 exactly when every check passes, 1 when a
check fails and 2 for invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, filters, operators
from .config import ConfigError, build, read_config, write_config
from .fixtures import FIXTURES, fixture_config, haar_bank, random_config, silo_bank
from .kernels import BACKEND
from .suites import SUITES, Context, run_suites
from .symspace import MeasureError

SCHEMA = 1
DEFAULT_TOL = 1e-9
EXIT_FAIL, EXIT_INPUT = 1, 2
GEN_NAMES = FIXTURES + ("fix-silo", "fix-haar", "random")


def _load(args):
    """Resolve ``(config dict, label)`` from ``--fixture``/``--config``."""
    if args.fixture and args.config:
        raise ConfigError("<args>", "pass either --fixture or --config, not both")
    if args.fixture:
        try:
            return fixture_config(args.fixture), args.fixture
        except KeyError as exc:
            raise ConfigError("--fixture", exc.args[0]) from None
    if args.config:
        return read_config(args.config), str(args.config)
    raise ConfigError("<args>", "one of --fixture or --config is required")


def _suite_names(arg):
    if arg in (None, "all"):
        return list(SUITES)
    names = [s.strip() for s in arg.split(",") if s.strip()]
    for s in names:
        if s not in SUITES:
            raise ConfigError("--suite", f"unknown suite {s!r}; expected 'all' or one of {', '.join(SUITES)}")
    return names


def _context(args, cfg):
    model, measure = build(cfg, args.depth)
    run = cfg.get("run", {})
    tol = args.tol if args.tol is not None else float(run.get("tol", DEFAULT_TOL))
    seed = args.seed if args.seed is not None else int(run.get("seed", 0))
    bank = None
    if "bank" in cfg:
        try:
            bank = filters.FilterBank.from_json(model, measure, cfg["bank"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("bank", f"invalid filter bank: {exc}") from exc
    return Context(model, measure, tol=tol, seed=seed, bank=bank)


def build_report(ctx: Context, suites, label: str, config: dict) -> dict:
    checks = run_suites(ctx, suites)
    failed = [c.name for c in checks if not c.passed]
    return {
        "schema": SCHEMA,
        "environment": {
            "source": label,
            "depth": ctx.model.depth,
            "seed": ctx.seed,
            "tol": ctx.tol,
            "suites": list(suites),
            "model": ctx.model.to_config(),
            "measure": ctx.measure.to_config(),
        },
        "verdict": "pass" if not failed else "fail",
        "summary": {"checks": len(checks), "passed": len(checks) - len(failed), "failed": failed},
        "checks": [c.to_json() for c in checks],
        "meta": {
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "version": __version__,
            "backend": BACKEND,
        },
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False, ensure_ascii=False) + "\n"


def _export_matrices(ctx: Context, out: Path):
    m, mu = ctx.model, ctx.measure
    out.mkdir(parents=True, exist_ok=True)
    ops = {
        "S_sigma": operators.compose_op(m, mu),
        "S_sigma_adjoint": operators.adjoint_op(m, mu),
        "R_sigma": operators.rokhlin_transfer(m, mu),
        "E_conditional": operators.conditional_expectation(m, mu),
    }
    written = []
    for name, op in ops.items():
        path = out / f"{name}.csv"
        op.to_csv(path)
        written.append(path.name)
    if m.constant_fiber is not None:
        bank = ctx.cyclic_bank()
        rep = bank.membership(ctx.tol)
        rep.grid_to_csv(out / "cuntz_grid.csv")
        (out / "cyclic_bank.json").write_text(json.dumps(bank.to_json(), indent=2) + "\n", encoding="utf-8")
        written += ["cuntz_grid.csv", "cyclic_bank.json"]
    return written


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args) -> int:
    cfg, label = _load(args)
    suites = _suite_names(args.suite or cfg.get("run", {}).get("suite"))
    ctx = _context(args, cfg)
    report = build_report(ctx, suites, label, cfg)
    text = dumps_report(report)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.csv:
        _export_matrices(ctx, Path(args.csv))
    if not args.quiet:
        s = report["summary"]
        print(f"{report['verdict']}: {s['passed']}/{s['checks']} checks passed", file=sys.stderr)
        for name in s["failed"]:
            print(f"  FAIL {name}", file=sys.stderr)
    return 0 if report["verdict"] == "pass" else EXIT_FAIL


def cmd_gen(args) -> int:
    name = args.name.lower()
    if name == "random":
        cfg = random_config(args.seed or 0, args.alphabet, args.depth or 3)
    elif name in ("fix-silo", "fix-haar"):
        cfg = fixture_config("fix-a")
        model, measure = build(cfg, args.depth)
        bank = silo_bank(model) if name == "fix-silo" else haar_bank(model)
        cfg["bank"] = filters.FilterBank(tuple(bank), model, measure).to_json()
    else:
        try:
            cfg = fixture_config(name)
        except KeyError as exc:
            raise ConfigError("name", exc.args[0]) from None
    if args.depth is not None:
        cfg["depth"] = args.depth
    build(cfg)  # validate before writing
    text = write_config(cfg, args.out, fmt=args.format)
    if args.out is None:
        sys.stdout.write(text)
    return 0


def cmd_export(args) -> int:
    cfg, _ = _load(args)
    ctx = _context(args, cfg)
    if not args.csv:
        raise ConfigError("--csv", "export needs an output directory")
    for name in _export_matrices(ctx, Path(args.csv)):
        print(name)
    return 0


def _common(p):
    p.add_argument("--fixture", choices=None, help=f"built-in fixture ({', '.join(FIXTURES)})")
    p.add_argument("--config", help="TOML or JSON configuration file")
    p.add_argument("--depth", type=int, help="override the depth budget")
    p.add_argument("--tol", type=float, help=f"check tolerance (default {DEFAULT_TOL:g})")
    p.add_argument("--seed", type=int, help="seed for randomized probes (default 0)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ergodia", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate check suites and write a JSON report")
    _common(run)
    run.add_argument("--suite", help=f"'all' or comma-separated names from: {', '.join(SUITES)}")
    run.add_argument("--report", help="write the report here instead of stdout")
    run.add_argument("--csv", help="also export operator matrices to this directory")
    run.add_argument("--quiet", action="store_true", help="no summary on stderr")
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("gen", help="write a fixture or random configuration")
    gen.add_argument("name", help=", ".join(GEN_NAMES))
    gen.add_argument("--seed", type=int, help="seed for 'random'")
    gen.add_argument("--alphabet", type=int, default=2, help="alphabet size for 'random'")
    gen.add_argument("--depth", type=int)
    gen.add_argument("--out", help="output file (.toml or .json); stdout if omitted")
    gen.add_argument("--format", choices=("toml", "json"), default="toml", help="stdout format")
    gen.set_defaults(func=cmd_gen)

    exp = sub.add_parser("export", help="write operator matrices as CSV")
    _common(exp)
    exp.add_argument("--csv", required=True, help="output directory")
    exp.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps(exc.to_json(), ensure_ascii=False), file=sys.stderr)
        return EXIT_INPUT
    except MeasureError as exc:
        print(json.dumps(ConfigError("measure", str(exc)).to_json(), ensure_ascii=False), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
