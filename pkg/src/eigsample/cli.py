"""Command-line driver: ``eigsample {gen,estimate,eigvec,check,sweep}``.

Exit codes: 0 on success, 2 on a configuration error, 3 when a matrix is too
large for a dense code path, 1 for any other library error.
"""
from __future__ import annotations

import argparse
import sys

from .errors import CapacityError, ConfigError, EigSampleError
from .experiment import ExperimentConfig, parse_config_text, run_experiment, run_sweep, sweep_csv
from .generators import KINDS, generate
from .matrix import save_binary, save_text


def _matrix_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--n", type=int)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="generator parameter, repeatable")
    p.add_argument("--matrix-seed", type=int)
    p.add_argument("--matrix", dest="matrix_path", help="load a matrix file instead of generating one")
    p.add_argument("--backend", choices=("implicit", "dense"))


def _run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", dest="epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--s", type=int)
    p.add_argument("--seed", dest="base_seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--c-sample", type=float)
    p.add_argument("--c-log", type=float)
    p.add_argument("--c-rownorm", type=float)
    p.add_argument("--id", dest="experiment_id")
    p.add_argument("--timing", action="store_true", default=None, help="fill runtime_ms (output is then not reproducible)")
    p.add_argument("--out", help="CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eigsample", description="Sublinear eigenvalue estimation by sampling.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a synthetic matrix file")
    gen.add_argument("--kind", choices=KINDS, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    gen.add_argument("--matrix-seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="'.bin' writes binary, anything else text")

    est = sub.add_parser("estimate", help="estimate the spectrum")
    _matrix_args(est)
    _run_args(est)
    est.add_argument("--method", choices=("uniform", "rownorm", "sketch"))
    est.add_argument("--mode", choices=("exact_norms", "jl_norms"))

    eig = sub.add_parser("eigvec", help="approximate top eigenvector of a PSD matrix")
    _matrix_args(eig)
    _run_args(eig)
    eig.add_argument("--c-col", type=float)

    chk = sub.add_parser("check", help="check the subspace-embedding condition")
    _matrix_args(chk)
    _run_args(chk)
    chk.add_argument("--level", type=float, help="threshold L as a fraction of n")

    sw = sub.add_parser("sweep", help="grid over epsilon and s")
    _matrix_args(sw)
    _run_args(sw)
    sw.add_argument("--method", choices=("uniform", "rownorm", "sketch", "eigvec", "check"))
    sw.add_argument("--mode", choices=("exact_norms", "jl_norms"))
    sw.add_argument("--eps-list", required=True, help="comma-separated epsilons")
    sw.add_argument("--s-list", help="comma-separated sample sizes")
    return parser


_SKIP = {"command", "config", "param", "eps_list", "s_list"}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            values.update(parse_config_text(fh.read()))
    if args.command in ("eigvec", "check"):
        values["method"] = args.command
    for key, val in vars(args).items():
        if key in _SKIP or val is None:
            continue
        values[key] = val
    for pair in getattr(args, "param", []):
        if "=" not in pair:
            raise ConfigError(f"expected KEY=VALUE, got {pair!r}", field="param")
        k, v = pair.split("=", 1)
        values[f"param.{k.strip()}"] = v.strip()
    return ExperimentConfig.from_mapping(values)


def _parse_list(text: str, conv, name: str) -> list:
    try:
        return [conv(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse {name} {text!r}", field=name) from None


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            params = {f"param.{k}": v for k, v in (p.split("=", 1) for p in args.param if "=" in p)}
            params = ExperimentConfig.from_mapping(params).params
            oracle = generate(args.kind, args.n, params, args.matrix_seed, backend="implicit")
            a = oracle.materialize()
            (save_binary if args.out.endswith(".bin") else save_text)(args.out, a)
            return 0
        cfg = config_from_args(args)
        if args.command == "sweep":
            eps_list = _parse_list(args.eps_list, float, "eps-list")
            s_list = _parse_list(args.s_list, int, "s-list") if args.s_list else None
            _emit(sweep_csv(run_sweep(cfg, eps_list, s_list)), cfg.out)
            return 0
        _emit(run_experiment(cfg).to_csv(), cfg.out)
        return 0
    except ConfigError as exc:
        where = f" [{exc.field}]" if getattr(exc, "field", None) else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except EigSampleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
