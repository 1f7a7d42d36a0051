"""``dynaregret`` command line.

Settings are resolved lowest-precedence first: built-in defaults, the
``DYNAREGRET_SEED`` environment variable (seed only), the ``--config`` JSON
file, then explicit flags.

Exit codes: 0 success, 1 a ``verify`` check failed, 2 usage, configuration or
I/O error. ``run`` and ``compare`` exit 0 even when a measured regret exceeds
its bound; the per-cell flags are printed and stored in the JSON report.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from ..errors import ConfigError, DynaRegretError
from ..learners import KINDS
from .config import ETA_MODES, ExperimentConfig, default_seed
from .runner import compare, format_table, run_experiment, sweep
from .suites import SUITES, verify

DRIFT_KINDS = ("static", "constant", "decaying", "bursty")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _learners(text: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    for n in names:
        if n not in KINDS:
            raise argparse.ArgumentTypeError(f"unknown learner {n!r} (choose from {', '.join(KINDS)})")
    return names


def _floats(text: str) -> list[float]:
    return [float(s) for s in text.split(",") if s.strip()]


def _add_experiment_flags(p: argparse.ArgumentParser, many_kappas: bool = False) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON experiment configuration")
    p.add_argument("--env", choices=DRIFT_KINDS, help="drift model of the environment")
    p.add_argument("--learner", type=_learners, help="learner or comma-separated learners (ogd, omgd)")
    p.add_argument("--T", type=_positive_int, help="horizon")
    p.add_argument("--dim", type=_positive_int, help="dimension")
    if many_kappas:
        p.add_argument("--kappa", type=_floats, required=True, help="comma-separated condition numbers")
    else:
        p.add_argument("--kappa", type=float, help="condition number")
    p.add_argument("--drift", type=float, help="drift step (constant), initial step (decaying) or small step (bursty)")
    p.add_argument("--V", type=float, help="drift variation constant")
    p.add_argument("--rate", type=float, help="decay rate for the decaying drift")
    p.add_argument("--seed", type=int, help="base seed (default: $DYNAREGRET_SEED or 0)")
    p.add_argument("--eta-mode", choices=ETA_MODES, help="step-size rule")
    p.add_argument("--eta", type=float, help="step size when --eta-mode fixed")
    p.add_argument("--repetitions", type=_positive_int, help="independent repetitions (seed, seed+1, ...)")
    p.add_argument("--out", metavar="DIR", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynaregret", description="Dynamic-regret experiments for OGD and OMGD.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_experiment_flags(sub.add_parser("run", help="run one experiment and write trace, report and chart"))
    _add_experiment_flags(sub.add_parser("compare", help="compare learners on the same environment"))
    _add_experiment_flags(sub.add_parser("sweep", help="regret and queries across condition numbers"), many_kappas=True)
    v = sub.add_parser("verify", help="randomized inequality suites")
    v.add_argument("suite", nargs="?", default="all", choices=SUITES)
    v.add_argument("--trials", type=_positive_int, default=1000, help="trials per check (>= 1)")
    v.add_argument("--seed", type=int, help="base seed (default: $DYNAREGRET_SEED or 0)")
    return parser


def _drift_dict(kind: str, current: dict[str, Any], args: argparse.Namespace, T: int) -> dict[str, Any]:
    same = current.get("kind") == kind
    if kind == "static":
        return {"kind": "static"}
    if kind == "constant":
        step = args.drift if args.drift is not None else current.get("step", 0.1) if same else 0.1
        return {"kind": "constant", "step": step}
    if kind == "decaying":
        initial = args.drift if args.drift is not None else current.get("initial", 0.1) if same else 0.1
        if args.rate is not None:
            rate = args.rate
        elif args.V is not None:
            rate = args.V ** (-1.0 / (T - 1)) if T > 1 else 0.5
        else:
            rate = current.get("rate", 0.99) if same else 0.99
        return {"kind": "decaying", "initial": initial, "rate": rate}
    small = args.drift if args.drift is not None else current.get("small", 0.1) if same else 0.1
    V = args.V if args.V is not None else current.get("V", 2.0) if same else 2.0
    prob = current.get("prob", 0.1) if same else 0.1
    return {"kind": "bursty", "small": small, "big": V * small, "V": V, "prob": prob}


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config) if args.config else ExperimentConfig(seed=default_seed())
    if args.config and args.seed is None and "seed" not in _config_keys(args.config):
        base = base.with_overrides(seed=default_seed())
    kappa = None if isinstance(args.kappa, list) else args.kappa
    cfg = base.with_overrides(
        learners=args.learner,
        T=args.T,
        seed=args.seed,
        eta_mode=args.eta_mode,
        eta=args.eta,
        repetitions=args.repetitions,
        out=args.out,
        env_dim=args.dim,
        env_kappa=kappa,
    )
    if args.eta is not None and args.eta_mode is None:
        cfg = cfg.with_overrides(eta_mode="fixed")
    current = dict(cfg.environment.get("drift", {"kind": "static"}))
    kind = args.env or current.get("kind", "static")
    if args.env is not None or any(v is not None for v in (args.drift, args.V, args.rate)):
        try:
            cfg = cfg.with_overrides(env_drift=_drift_dict(kind, current, args, cfg.T))
        except (TypeError, ValueError) as exc:
            raise ConfigError("environment.drift", str(exc)) from None
    return cfg.validate()


def _config_keys(path: str) -> set[str]:
    return set(json.loads(Path(path).read_text(encoding="utf-8")))


def _report_cells(result) -> None:
    for cell in result.cells:
        rep = cell.report
        status = "ok" if cell.within_bound else "BOUND VIOLATED"
        print(
            f"{cell.learner} rep={cell.rep} T={rep.T} regret={rep.measured_regret:.6g} "
            f"bound={rep.applicable_bound:.6g} queries={rep.total_queries} [{status}]"
        )
        for path in cell.files:
            print(f"  wrote {path}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            seed = args.seed if args.seed is not None else default_seed()
            summary = verify(args.suite, args.trials, seed)
            print(f"verify {args.suite}: trials={args.trials} seed={seed}")
            print("\n".join(summary.lines()))
            return 0 if summary.ok else 1
        cfg = resolve_config(args)
        if args.command == "run":
            result = run_experiment(cfg)
            _report_cells(result)
            print(f"  wrote {result.out_dir / 'summary.json'}")
            return 0
        if args.command == "compare":
            result, rows = compare(cfg)
            print(format_table(rows), end="")
            print(f"wrote {result.out_dir / 'comparison.csv'} and comparison.txt")
            return 0
        records = sweep(cfg, args.kappa)
        for r in records:
            print(
                f"kappa={r['kappa']:g} {r['learner']} regret_mean={r['regret_mean']:.6g} "
                f"bound_mean={r['bound_mean']:.6g} avg_queries={r['avg_queries']:g}"
            )
        print(f"wrote {cfg.out}/sweep.csv")
        return 0
    except ConfigError as exc:
        print(f"dynaregret: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"dynaregret: I/O error: {exc}", file=sys.stderr)
        return 2
    except (DynaRegretError, ValueError) as exc:
        print(f"dynaregret: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
