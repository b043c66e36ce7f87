"""Experiment orchestration: configuration, seeded parallel trials, raw output and summaries.

A run writes one raw table per (stream, n) plus ``summary.json``,
``summary_long.csv`` and a gnuplot script.  Every summary figure is a
function of the raw tables alone; :func:`recompute_summary` rebuilds it
from disk.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .diagnostics import EVENT_COLUMNS, EventParameters, default_parameters, event_flags
from .errors import ConfigError, CritPairsError, DomainError
from .fluctuations import (FLUCTUATION_COLUMNS, gauss_target, hill_index, regime,
                           scaled_fluctuations)
from .measures import RadialMeasure, sample_roots
from .pairing import (CERTIFICATE_COLUMNS, PAIRING_COLUMNS, build_pairing, certificate_row,
                      certify, descending_indices, edge_annulus)
from .poly_core import critical_points

STREAMS = ("pairing", "fluctuations", "events", "tails", "certificates")
FORMATS = ("csv", "jsonl")
THREADS_ENV = "CRITPAIRS_THREADS"

TRIAL_COLUMNS = ("trial", "seed", "status", "reason", "iterations", "worst_residual",
                 "max_abs_cp", "max_abs_root", "top_error", "injective", "order_preserved")
STREAM_COLUMNS = {
    "pairing": PAIRING_COLUMNS,
    "fluctuations": FLUCTUATION_COLUMNS,
    "tails": ("trial", "rank", "modulus", "angle"),
    "certificates": ("trial",) + CERTIFICATE_COLUMNS + ("oracle_count", "within_bound"),
}
LONG_COLUMNS = ("alpha", "n", "statistic", "value")


def trial_columns(emit) -> tuple:
    """Header of the per-trial table; event flags ride along when requested."""
    return TRIAL_COLUMNS + (EVENT_COLUMNS if "events" in emit else ())


def _raw_streams(emit) -> tuple:
    # streams that get a file of their own
    return tuple(s for s in STREAMS if s in emit and s in STREAM_COLUMNS)


@dataclass
class ExperimentConfig:
    alpha: float
    n_values: list[int]
    trials: int
    master_seed: int = 0
    top_L: int = 8
    parameters: dict = field(default_factory=dict)
    outputs: str = "out"
    emit: list[str] = field(default_factory=lambda: ["pairing", "fluctuations"])
    format: str = "csv"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha) and self.alpha > -1):
            raise ConfigError(f"alpha must be a finite number above -1, got {self.alpha!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be an integer >= 1, got {self.trials!r}")
        if not self.n_values:
            raise ConfigError("n_values must be non-empty")
        for n in self.n_values:
            if not isinstance(n, int) or n < 4:
                raise ConfigError(f"every n must be an integer >= 4, got {n!r}")
        if len(set(self.n_values)) != len(self.n_values):
            raise ConfigError("n_values contains duplicates")
        if not isinstance(self.master_seed, int) or not (0 <= self.master_seed < 2 ** 64):
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if not isinstance(self.top_L, int) or self.top_L < 1:
            raise ConfigError("top_L must be an integer >= 1")
        bad = set(self.emit) - set(STREAMS)
        if bad:
            raise ConfigError(f"unknown emit entries {sorted(bad)}; choose from {STREAMS}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        known = {f.name for f in fields(EventParameters)} - {"name", "alpha", "n"}
        unknown = set(self.parameters) - known
        if unknown:
            raise ConfigError(f"unknown diagnostics parameters {sorted(unknown)}")

    def to_json(self) -> str:
        d = asdict(self)
        d["emit"] = sorted(set(self.emit))
        return json.dumps(d, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())


@dataclass
class TrialResult:
    n: int
    trial: int
    rows: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    summary: dict
    files: list[str]
    runtime: dict


def thread_count(threads: int | None = None) -> int:
    """Explicit argument, else ``CRITPAIRS_THREADS``, else the CPU count."""
    if threads is not None:
        if threads < 1:
            raise ConfigError("thread count must be >= 1")
        return int(threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            val = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if val < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1")
        return val
    return os.cpu_count() or 1


def _params_for(cfg: ExperimentConfig, n: int) -> EventParameters:
    return default_parameters(cfg.alpha, n).with_overrides(**cfg.parameters)


def run_trial(cfg: ExperimentConfig, n: int, trial: int, mu: RadialMeasure | None = None) -> TrialResult:
    """One trial: sample, solve, pair and evaluate the requested streams."""
    mu = RadialMeasure(cfg.alpha) if mu is None else mu
    seed, gen = rngmod.trial_stream(cfg.master_seed, n, trial)
    out = TrialResult(n=n, trial=trial)
    sample = sample_roots(mu, n, gen, seed=seed)
    try:
        cps = critical_points(sample)
    except CritPairsError as exc:
        it = getattr(exc, "iterations", 0)
        worst = getattr(exc, "worst_residual", math.nan)
        row = (trial, seed, "failed", f"{type(exc).__name__}: {exc}", it, worst,
               math.nan, math.nan, math.nan, False, False)
        if "events" in cfg.emit:
            row += (None,) * len(EVENT_COLUMNS)
        out.rows["trials"] = [row]
        return out

    pts = cps.points
    L = min(cfg.top_L, n - 1)
    W = pts[descending_indices(pts)[:L]]
    X = sample.roots[descending_indices(sample.roots)[:L]]
    top_error = float(np.max(np.abs(W - X * (1.0 - 1.0 / n))))
    annulus = edge_annulus(cfg.alpha, n)
    rep = build_pairing(sample, cps, annulus=annulus, depth=L)
    row = (trial, seed, "ok", "", cps.iterations, cps.worst_residual, float(np.max(np.abs(pts))),
           float(abs(X[0])), top_error, rep.injective, rep.order_preserved)
    emit = set(cfg.emit)
    if "events" in emit:
        flags = event_flags(sample, _params_for(cfg, n), mu).as_row()
        row += tuple(flags[c] for c in EVENT_COLUMNS)
    out.rows["trials"] = [row]
    if "pairing" in emit:
        out.rows["pairing"] = rep.rows(trial)
    if "fluctuations" in emit or "tails" in emit:
        fl = scaled_fluctuations(sample, cps, L=L, trial=trial, alpha=cfg.alpha)
        if "fluctuations" in emit:
            out.rows["fluctuations"] = [f.row() for f in fl]
        if "tails" in emit:
            out.rows["tails"] = [(trial, f.rank, abs(f.value), math.atan2(f.value.imag, f.value.real))
                                 for f in fl]
    if "certificates" in emit:
        i = int(descending_indices(sample.roots)[0])
        others = np.delete(sample.roots, i)
        cert = certify(sample.roots[i], others)
        d = np.abs(pts - cert.xi)
        inside = int(np.count_nonzero(d <= cert.disk_radius))
        err = float(np.min(np.abs(pts - cert.predicted_center)))
        out.rows["certificates"] = [(trial,) + certificate_row(cert, i)
                                    + (inside, bool(err <= cert.error_bound))]
    return out


# ---------------------------------------------------------------- serialization


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def format_table(columns, rows, fmt: str = "csv") -> str:
    """Render ``rows`` with header ``columns`` as CSV or JSON lines."""
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(v) for v in r])
    else:
        for r in rows:
            buf.write(json.dumps({c: _jsonable(v) for c, v in zip(columns, r)}) + "\n")
    return buf.getvalue()


def write_table(path: Path, columns, rows, fmt: str = "csv") -> None:
    Path(path).write_text(format_table(columns, rows, fmt))


def _parse(v: str):
    if v == "true":
        return True
    if v == "false":
        return False
    if v == "":
        return None
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def read_table(path: Path, fmt: str = "csv") -> list[dict]:
    """Inverse of :func:`write_table`; values come back typed."""
    text = Path(path).read_text()
    if fmt == "csv":
        return [{k: _parse(v) for k, v in r.items()} for r in csv.DictReader(io.StringIO(text))]
    out = []
    for line in text.splitlines():
        d = json.loads(line)
        out.append({k: (float(v) if v in ("nan", "inf", "-inf") else v) for k, v in d.items()})
    return out


def table_name(stream: str, n: int, fmt: str) -> str:
    return f"{stream}_n{n}.{'csv' if fmt == 'csv' else 'jsonl'}"


# ---------------------------------------------------------------- summaries


def _quantiles(x) -> dict:
    x = np.asarray([v for v in x if v is not None and math.isfinite(v)], dtype=float)
    if x.size == 0:
        return {}
    q = np.quantile(x, [0.1, 0.5, 0.9])
    return {"q10": float(q[0]), "median": float(q[1]), "q90": float(q[2]), "max": float(x.max())}


def _fluct_summary(rows, alpha: float) -> dict:
    r1 = [r for r in rows if r["rank"] == 1]
    if len(r1) < 2:
        return {}
    re = np.array([r["re_value"] for r in r1])
    im = np.array([r["im_value"] for r in r1])
    out = {"count": len(r1), "order_ok_fraction": float(np.mean([r["order_ok"] for r in r1])),
           "mean_re": float(re.mean()), "mean_im": float(im.mean()),
           "var_re": float(re.var(ddof=1)), "var_im": float(im.var(ddof=1)),
           "cov_re_im": float(np.cov(re, im)[0, 1])}
    by_trial = {r["trial"]: r for r in rows if r["rank"] == 2}
    pairs = [(r["re_value"], by_trial[r["trial"]]["re_value"]) for r in r1 if r["trial"] in by_trial]
    if len(pairs) > 2:
        a = np.array(pairs)
        out["corr_rank1_rank2_re"] = float(np.corrcoef(a[:, 0], a[:, 1])[0, 1])
    return out


def _hill_default(x) -> dict:
    x = np.asarray([v for v in x if v > 0 and math.isfinite(v)], dtype=float)
    k = int(math.ceil(math.sqrt(x.size)))
    if x.size < 8 or k >= x.size / 2:
        return {}
    try:
        return {"k": k, "hill": hill_index(x, k), "count": int(x.size)}
    except DomainError:
        return {}


def summarize_rows(alpha: float, n: int, tables: dict) -> dict:
    """Summary for one ``(alpha, n)`` computed from raw rows only."""
    trials = tables["trials"]
    ok = [r for r in trials if r["status"] == "ok"]
    out = {"alpha": alpha, "n": n, "trials": len(trials), "failures": len(trials) - len(ok),
           "top_error": _quantiles(r["top_error"] for r in ok)}
    if ok:
        out["injective_fraction"] = float(np.mean([r["injective"] for r in ok]))
        out["order_preserved_fraction"] = float(np.mean([r["order_preserved"] for r in ok]))
        out["refined_fraction"] = float(np.mean(
            [r["max_abs_cp"] <= r["max_abs_root"] * (1.0 - 1.0 / n) + 10.0 / n for r in ok]))
    if "pairing" in tables:
        p = tables["pairing"]
        out["pairing"] = {"rows": len(p), "dist_first": _quantiles(r["dist_first"] for r in p),
                          "dist_second": _quantiles(r["dist_second"] for r in p)}
    if "fluctuations" in tables:
        out["fluctuations"] = _fluct_summary(tables["fluctuations"], alpha)
    if trials and "params" in trials[0]:
        freq = {}
        for c in EVENT_COLUMNS[:-1]:
            vals = [r[c] for r in ok if r[c] is not None]
            freq[c] = float(np.mean(vals)) if vals else None
        out["events"] = freq
    if "tails" in tables:
        out["tails"] = _hill_default(r["modulus"] for r in tables["tails"] if r["rank"] == 1)
    if "certificates" in tables:
        c = tables["certificates"]
        cert = [r for r in c if r["certified"]]
        out["certificates"] = {"rows": len(c), "certified": len(cert),
                               "sound": sum(1 for r in cert if r["oracle_count"] == 1 and r["within_bound"])}
    return out


def _target(alpha: float) -> dict | None:
    if alpha < 0:
        return None
    t = gauss_target(RadialMeasure(alpha))
    return {"var_re": t.var_re, "var_im": t.var_im, "cov_re_im": t.cov_re_im}


def _flatten(prefix: str, d: dict, out: list) -> None:
    for k in sorted(d):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            _flatten(key + ".", v, out)
        elif isinstance(v, (int, float)) and not isinstance(v, bool) and v is not None:
            out.append((key, float(v)))


def long_rows(summary: dict) -> list[tuple]:
    """``summary.json`` flattened to ``(alpha, n, statistic, value)`` rows."""
    rows = []
    for block in summary["by_n"]:
        flat = []
        _flatten("", {k: v for k, v in block.items() if k not in ("alpha", "n")}, flat)
        rows.extend((summary["alpha"], block["n"], k, v) for k, v in flat)
    return rows


GNUPLOT_SCRIPT = """\
# Median top-rank pairing error against n on log-log axes.
set datafile separator ","
set logscale xy
set xlabel "n"
set ylabel "median top error"
set key off
plot "summary_long.csv" using 2:(strcol(3) eq "top_error.median" ? $4 : 1/0) with linespoints
"""


def summarize_dir(out: Path, cfg: ExperimentConfig) -> dict:
    by_n = []
    for n in cfg.n_values:
        tables = {}
        for s in ("trials",) + _raw_streams(cfg.emit):
            tables[s] = read_table(out / table_name(s, n, cfg.format), cfg.format)
        by_n.append(summarize_rows(cfg.alpha, n, tables))
    summary = {"alpha": cfg.alpha, "regime": regime(cfg.alpha), "by_n": by_n}
    if "fluctuations" in cfg.emit:
        summary["gauss_target"] = _target(cfg.alpha)
    return summary


def recompute_summary(out_dir) -> dict:
    """Rebuild the summary of a finished run from its raw tables and ``config.json``."""
    out = Path(out_dir)
    cfg = ExperimentConfig.load(out / "config.json")
    return summarize_dir(out, cfg)


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """Run every ``(n, trial)`` task on a thread pool and write the results.

    Tasks finish in any order; rows are merged by ``(n, trial)`` so the
    output does not depend on the thread count.
    """
    cfg.validate()
    nthreads = thread_count(threads)
    out = Path(cfg.outputs)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    mu = RadialMeasure(cfg.alpha)
    tasks = [(n, t) for n in cfg.n_values for t in range(cfg.trials)]
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=nthreads) as pool:
        results = list(pool.map(lambda nt: run_trial(cfg, nt[0], nt[1], mu), tasks))
    elapsed = time.perf_counter() - t0

    files = []
    (out / "config.json").write_text(cfg.to_json() + "\n")
    files.append("config.json")
    for n in cfg.n_values:
        mine = sorted((r for r in results if r.n == n), key=lambda r: r.trial)
        for s in ("trials",) + _raw_streams(cfg.emit):
            rows = [row for r in mine for row in r.rows.get(s, [])]
            name = table_name(s, n, cfg.format)
            cols = trial_columns(cfg.emit) if s == "trials" else STREAM_COLUMNS[s]
            write_table(out / name, cols, rows, cfg.format)
            files.append(name)
    summary = summarize_dir(out, cfg)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    write_table(out / "summary_long.csv", LONG_COLUMNS, long_rows(summary))
    (out / "plot.gp").write_text(GNUPLOT_SCRIPT)
    files += ["summary.json", "summary_long.csv", "plot.gp"]
    runtime = {"threads": nthreads, "seconds": elapsed, "tasks": len(tasks)}
    # wall-clock data stays out of the deterministic outputs
    (out / "runtime.json").write_text(json.dumps(runtime, indent=2) + "\n")
    files.append("runtime.json")
    return ExperimentReport(config=cfg, summary=summary, files=files, runtime=runtime)
