"""Command-line interface.

    delayfw run --config cfg.json [--out DIR]
    delayfw sweep --config cfg.json --vary {dmax,topology,f} --values a,b,c [--out DIR]
    delayfw validate --config cfg.json
    delayfw selftest

Exit codes: 0 success, 1 configuration error, 2 runtime failure.  The
default output directory is --out, then the config's "output" key, then
$DELAYFW_OUT, then ./runs.
"""

import argparse
import sys

from . import runner


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delayfw",
        description="Deterministic simulator for projection-free online "
                    "convex optimization under delayed feedback.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config over its seeds")
    run_p.add_argument("--config", required=True, help="path to a JSON config")
    run_p.add_argument("--out", default=None, help="output directory")

    sweep_p = sub.add_parser("sweep", help="iterate one config knob")
    sweep_p.add_argument("--config", required=True, help="path to a JSON config")
    sweep_p.add_argument("--vary", required=True, choices=runner.SWEEP_KEYS)
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated values for the varied knob")
    sweep_p.add_argument("--out", default=None, help="output directory")

    val_p = sub.add_parser("validate", help="parse and validate a config, run nothing")
    val_p.add_argument("--config", required=True, help="path to a JSON config")

    sub.add_parser("selftest", help="run the built-in identity and invariant checks")
    return parser


def _parse_values(vary: str, text: str):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise runner.ConfigError("--values: need at least one value")
    if vary == "topology":
        return parts
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise runner.ConfigError(f"--values: expected integers, got '{text}'") from None


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "validate":
            cfg = runner.parse_config(args.config)
            print(f"ok: {cfg.mode} T={cfg.T} seeds={len(cfg.seeds)}")
            return 0
        if args.command == "run":
            cfg = runner.parse_config(args.config)
            res = runner.run_experiment(cfg, args.out)
            for seed, total, regret, wall in res["rows"]:
                print(f"seed {seed}: total_loss={total:.9g} "
                      f"final_regret={regret:.9g} wall={wall:.2f}s")
            print(f"summary: {res['summary']}")
            return 0
        if args.command == "sweep":
            cfg = runner.parse_config(args.config)
            values = _parse_values(args.vary, args.values)
            res = runner.run_sweep(cfg, args.vary, values, args.out)
            print(f"summary: {res['summary']}")
            return 0
        ok = runner.selftest(print_fn=print)
        return 0 if ok else 2
    except runner.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - CLI boundary maps failures to exit 2
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
