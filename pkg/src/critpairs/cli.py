"""Command line entry point: ``critpairs <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .errors import CritPairsError
from .fluctuations import FLUCTUATION_COLUMNS, angular_test, hill_index, ks_critical, scaled_fluctuations
from .harness import ExperimentConfig, format_table, read_table, run_experiment, write_table
from .measures import RadialMeasure, sample_roots, tail_law
from .pairing import CERTIFICATE_COLUMNS, PAIRING_COLUMNS, build_pairing, certificate_row, certify, edge_annulus
from .poly_core import RootSample, critical_points

ROOT_COLUMNS = ("trial", "index", "re", "im")
CP_COLUMNS = ("index", "re", "im", "residual")
TAIL_COLUMNS = ("alpha", "draws", "k", "hill", "threshold", "constant_hat", "constant",
                "exceedances", "ks", "ks_critical")


def _global_flags(default=None) -> argparse.ArgumentParser:
    # the subcommand copy uses SUPPRESS so it cannot overwrite flags given
    # before the subcommand name
    p = argparse.ArgumentParser(add_help=False, argument_default=default)
    g = p.add_argument_group("global options")
    g.add_argument("--alpha", type=float, help="edge exponent of the root law (default 1)")
    g.add_argument("--n", type=int, help="degree, or number of draws for 'tails' (default 64)")
    g.add_argument("--trials", type=int, help="number of trials (default 1)")
    g.add_argument("--seed", type=int, help="master seed (default 0)")
    g.add_argument("--out", help="output file, or directory for 'experiment' (default stdout)")
    g.add_argument("--format", choices=("csv", "jsonl"), help="table format (default csv)")
    g.add_argument("--config", help="JSON experiment config supplying defaults")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="critpairs", parents=[_global_flags()],
                                     description="Random polynomials, their critical points and limit laws.")
    common = _global_flags(argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    sub.add_parser("sample", parents=[common], help="emit sampled roots")
    p = sub.add_parser("cps", parents=[common], help="emit critical points for a roots file")
    p.add_argument("--roots", required=True, help="CSV with columns re,im")
    sub.add_parser("pair", parents=[common], help="emit pairing rows on the edge annulus")
    p = sub.add_parser("fluct", parents=[common], help="emit scaled fluctuation rows")
    p.add_argument("--top", type=int, default=1, help="number of ranks per trial (default 1)")
    sub.add_parser("tails", parents=[common], help="tail index and angular law from direct draws")
    p = sub.add_parser("certify", parents=[common], help="isolated-root certificate for one root")
    p.add_argument("--roots", required=True, help="CSV with columns re,im")
    p.add_argument("--xi-index", type=int, required=True, help="0-based row of the root to certify")
    p.add_argument("--C1", type=float, default=0.5)
    p.add_argument("--C2", type=float, default=2.0)
    p = sub.add_parser("experiment", parents=[common], help="full pipeline from a config file")
    p.add_argument("--threads", type=int, default=None, help="pool size (overrides CRITPAIRS_THREADS)")
    return parser


def _resolve(args) -> None:
    cfg = ExperimentConfig.load(args.config) if args.config else None
    defaults = {"alpha": 1.0, "n": 64, "trials": 1, "seed": 0, "format": "csv"}
    if cfg is not None:
        defaults.update(alpha=cfg.alpha, n=cfg.n_values[0], trials=cfg.trials,
                        seed=cfg.master_seed, format=cfg.format)
    for k, v in defaults.items():
        if getattr(args, k) is None:
            setattr(args, k, v)
    args.cfg = cfg


def _emit(args, columns, rows) -> None:
    if args.out:
        write_table(Path(args.out), columns, rows, args.format)
        return
    sys.stdout.write(format_table(columns, rows, args.format))


def _read_roots(path) -> np.ndarray:
    rows = read_table(Path(path), "jsonl" if str(path).endswith(".jsonl") else "csv")
    if not rows or "re" not in rows[0] or "im" not in rows[0]:
        raise CritPairsError(f"{path}: expected columns re,im")
    return np.array([complex(r["re"], r["im"]) for r in rows])


def _trials(args):
    mu = RadialMeasure(args.alpha)
    for t in range(args.trials):
        seed, gen = rngmod.trial_stream(args.seed, args.n, t)
        yield t, sample_roots(mu, args.n, gen, seed=seed)


def cmd_sample(args) -> int:
    rows = [(t, j, float(z.real), float(z.imag)) for t, s in _trials(args) for j, z in enumerate(s.roots)]
    _emit(args, ROOT_COLUMNS, rows)
    return 0


def cmd_cps(args) -> int:
    sample = RootSample(roots=_read_roots(args.roots), seed=0, alpha=math.nan)
    cps = critical_points(sample)
    rows = [(j, float(w.real), float(w.imag), float(r)) for j, (w, r) in enumerate(zip(cps.points, cps.residuals))]
    _emit(args, CP_COLUMNS, rows)
    return 0


def cmd_pair(args) -> int:
    rows = []
    for t, s in _trials(args):
        rep = build_pairing(s, critical_points(s), annulus=edge_annulus(args.alpha, args.n))
        rows.extend(rep.rows(t))
    _emit(args, PAIRING_COLUMNS, rows)
    return 0


def cmd_fluct(args) -> int:
    rows = []
    for t, s in _trials(args):
        rows.extend(f.row() for f in scaled_fluctuations(s, critical_points(s), L=args.top, trial=t,
                                                         alpha=args.alpha))
    _emit(args, FLUCTUATION_COLUMNS, rows)
    return 0


def cmd_tails(args) -> int:
    mu = RadialMeasure(args.alpha)
    law = tail_law(mu)
    gen = rngmod.stream(args.seed, args.n)
    x = sample_roots(mu, args.n, gen).roots
    y = x / (1.0 - x)
    mod = np.abs(y)
    k = max(1, int(math.sqrt(args.n)))
    thr = float(np.quantile(mod, 1.0 - 1e-3)) if args.n >= 200_000 else float(np.sort(mod)[-200])
    exceed = int(np.count_nonzero(mod >= thr))
    chat = thr ** law.index * exceed / args.n
    ks = angular_test(y, thr, law)
    _emit(args, TAIL_COLUMNS, [(args.alpha, args.n, k, hill_index(mod, k), thr, chat, law.constant,
                                exceed, ks, ks_critical(exceed, 0.01))])
    return 0


def cmd_certify(args) -> int:
    roots = _read_roots(args.roots)
    i = args.xi_index
    if not 0 <= i < roots.size:
        raise CritPairsError(f"--xi-index {i} out of range for {roots.size} roots")
    cert = certify(roots[i], np.delete(roots, i), C1=args.C1, C2=args.C2)
    _emit(args, CERTIFICATE_COLUMNS, [certificate_row(cert, i)])
    return 0


def cmd_experiment(args) -> int:
    if args.cfg is None:
        raise CritPairsError("experiment needs --config")
    cfg = args.cfg
    if args.out:
        cfg.outputs = args.out
    rep = run_experiment(cfg, threads=args.threads)
    for f in rep.files:
        print(Path(cfg.outputs) / f)
    return 0


COMMANDS = {"sample": cmd_sample, "cps": cmd_cps, "pair": cmd_pair, "fluct": cmd_fluct,
            "tails": cmd_tails, "certify": cmd_certify, "experiment": cmd_experiment}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _resolve(args)
        return COMMANDS[args.command](args)
    except (CritPairsError, OSError) as exc:
        print(f"critpairs: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
