"""Command-line entry point.

Subcommands: gen-data, solve, train, eval, report. System constants
default to the evaluation setup and may be overridden by a JSON file
given with --config or via the UNDERLAY_SECRECY_CONFIG environment
variable. Exit codes: 0 success, 2 validation error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import harness, nn
from .model import ChannelInstance, ScenarioParams, SystemParams, effective_gains
from .solver_perfect import golden_search
from .solver_robust import solve_robust

CONFIG_ENV = "UNDERLAY_SECRECY_CONFIG"
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3

log = logging.getLogger("underlay_secrecy")


def load_params(config_path: str | None) -> SystemParams:
    path = config_path or os.environ.get(CONFIG_ENV)
    if not path:
        return SystemParams()
    doc = json.loads(Path(path).read_text())
    return SystemParams(**doc.get("params", doc))


def _cmd_gen_data(args) -> int:
    params = load_params(args.config)
    sc = ScenarioParams(args.pt, args.q)
    profile = (args.eps_s, args.eps_e, args.eps_p)
    if args.mixed:
        ds = harness.gen_mixed_dataset(args.n, params, sc, profile, args.seed)
    else:
        ds = harness.gen_dataset(args.n, params, sc, profile, args.seed, robust=args.robust)
    harness.save_dataset(ds, args.out)
    log.info("wrote %d rows to %s", len(ds), args.out)
    return 0


def _read_instance(text_or_path: str) -> dict:
    path = Path(text_or_path)
    text = path.read_text() if path.exists() else text_or_path
    return json.loads(text)


def _cmd_solve(args) -> int:
    params = load_params(args.config)
    doc = _read_instance(args.instance)
    sc = ScenarioParams(float(doc.get("pt", args.pt)), float(doc.get("q", args.q)))
    ch = ChannelInstance(**{k: float(doc[k]) for k in doc if k in ChannelInstance.__dataclass_fields__})
    if args.robust:
        res = solve_robust(ch, params, sc)
    else:
        if not ch.is_perfect:
            log.warning("instance has nonzero radii; solving at the nominal channel")
        res = golden_search(effective_gains(ch, params), sc)
    print(json.dumps(res.to_dict(), indent=1))
    return 0


def _cmd_train(args) -> int:
    ds = harness.load_dataset(args.data)
    cfg = nn.TrainConfig(
        learning_rate=args.lr,
        reg_lambda=args.reg_lambda,
        batch_size=args.batch,
        regularization=args.reg,
        optimizer=args.optimizer,
        epochs=args.epochs,
        seed=args.seed,
        hidden=tuple(int(h) for h in args.hidden.split(",")),
        standardize=args.standardize,
        early_stopping_patience=args.patience,
    )
    result = harness.train_on_dataset(ds, cfg, val_fraction=args.val_fraction)
    nn.save_model(result.model, args.out_model)
    if args.history:
        lines = ["step,train_mse,val_mse"] + ["%d,%.17g,%.17g" % h for h in result.history]
        Path(args.history).write_text("\n".join(lines) + "\n")
    log.info("train mse %.6g, val mse %.6g", result.final_train_mse, result.final_val_mse)
    return 0


def _cmd_eval(args) -> int:
    models: dict[str, nn.Mlp] = {}
    for i, path in enumerate(args.models):
        m = nn.load_model(path)
        name = m.info.get("regularization", harness.SCHEMES[i] if i < len(harness.SCHEMES) else path)
        if name in models:
            name = f"{name}:{i}"
        models[name] = m
    test = harness.load_dataset(args.test)
    er = harness.evaluate(models, test)
    text = harness.report(er, args.format, args.out_report)
    if not args.out_report:
        sys.stdout.write(text)
    return 0


def _cmd_report(args) -> int:
    er = harness.load_report(getattr(args, "in"))
    text = harness.report(er, args.format, args.out)
    if not args.out:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="underlay-secrecy", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help=f"JSON file of SystemParams overrides (default: ${CONFIG_ENV})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a labeled dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pt", type=float, default=100.0, help="max SU transmit power, mW")
    p.add_argument("--q", type=float, default=6.0, help="leakage cap at the PU receiver, mW")
    p.add_argument("--eps-s", type=float, default=0.0)
    p.add_argument("--eps-e", type=float, default=0.0)
    p.add_argument("--eps-p", type=float, default=0.0)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--robust", action="store_true", help="imperfect CSI, robust solver labels")
    mode.add_argument("--mixed", action="store_true", help="half perfect, half imperfect rows")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("solve", help="solve one instance and print the result as JSON")
    p.add_argument("--instance", required=True, help="JSON text or path to a JSON file")
    p.add_argument("--robust", action="store_true")
    p.add_argument("--pt", type=float, default=100.0)
    p.add_argument("--q", type=float, default=6.0)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("train", help="train one network on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--val-fraction", type=float, default=1.0 - harness.DEFAULT_TRAIN_FRACTION)
    p.add_argument("--reg", choices=nn.REGULARIZATIONS, default="none")
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--lambda", dest="reg_lambda", type=float, default=5e-4)
    p.add_argument("--batch", type=int, default=10)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--optimizer", choices=nn.OPTIMIZERS, default="adam")
    p.add_argument("--hidden", default="100,100", help="comma-separated hidden layer widths")
    p.add_argument("--standardize", action="store_true", help="z-score input features")
    p.add_argument("--patience", type=int, default=None, help="early-stopping patience (evaluations)")
    p.add_argument("--history", help="optional CSV path for the loss history")
    p.add_argument("--out-model", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate trained models against the conventional solvers")
    p.add_argument("--models", nargs="+", required=True, help="model files (none, l1, l2)")
    p.add_argument("--test", required=True)
    p.add_argument("--out-report")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="re-render a JSON report")
    p.add_argument("--in", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except nn.DivergenceError as exc:
        print(f"error: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
