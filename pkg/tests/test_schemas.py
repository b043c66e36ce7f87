import csv
import io
import json
import re
from pathlib import Path

import pytest

from critpairs.cli import CP_COLUMNS, ROOT_COLUMNS, TAIL_COLUMNS, main
from critpairs.harness import (LONG_COLUMNS, STREAM_COLUMNS, TRIAL_COLUMNS, ExperimentConfig,
                               run_experiment, trial_columns)
from critpairs.pairing import CERTIFICATE_COLUMNS

DOC = (Path(__file__).resolve().parents[1] / "docs" / "schemas.md").read_text()

# golden headers; a change here is a schema change and must be mirrored in the docs
GOLDEN = {
    "trials": "trial,seed,status,reason,iterations,worst_residual,max_abs_cp,max_abs_root,"
              "top_error,injective,order_preserved",
    "trials+events": "trial,seed,status,reason,iterations,worst_residual,max_abs_cp,max_abs_root,"
                     "top_error,injective,order_preserved,e_n,f_n,f_star_n,f_parallel_n,g_n,h_n,params",
    "pairing": "trial,rank,re_root,im_root,re_cp,im_cp,dist_first,dist_second,iota_ok,order_ok",
    "fluctuations": "trial,rank,re_value,im_value,regime,order_ok",
    "tails": "trial,rank,modulus,angle",
    "certificates": "trial,xi_index,re_xi,im_xi,n_other,C1,C2,C,k_lip,disk_radius,re_center,"
                    "im_center,error_bound,cond_i,cond_ii,cond_iii,cond_C,cond_n,certified,"
                    "oracle_count,within_bound",
    "summary_long": "alpha,n,statistic,value",
    "sample": "trial,index,re,im",
    "cps": "index,re,im,residual",
    "tails-cli": "alpha,draws,k,hill,threshold,constant_hat,constant,exceedances,ks,ks_critical",
    "certify": "xi_index,re_xi,im_xi,n_other,C1,C2,C,k_lip,disk_radius,re_center,im_center,"
               "error_bound,cond_i,cond_ii,cond_iii,cond_C,cond_n,certified",
}

CONSTANTS = {
    "trials": TRIAL_COLUMNS,
    "trials+events": trial_columns(["events"]),
    "pairing": STREAM_COLUMNS["pairing"],
    "fluctuations": STREAM_COLUMNS["fluctuations"],
    "tails": STREAM_COLUMNS["tails"],
    "certificates": STREAM_COLUMNS["certificates"],
    "summary_long": LONG_COLUMNS,
    "sample": ROOT_COLUMNS,
    "cps": CP_COLUMNS,
    "tails-cli": TAIL_COLUMNS,
    "certify": CERTIFICATE_COLUMNS,
}


def documented_headers():
    blocks = set(re.findall(r"```\n([^\n`]+)\n```", DOC))
    blocks |= set(re.findall(r"\| `[a-z]+` \| `([^`]+)` \|", DOC))
    return blocks


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_header_constant_matches_golden(name):
    assert ",".join(CONSTANTS[name]) == GOLDEN[name]


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_header_is_documented(name):
    assert GOLDEN[name] in documented_headers()


def first_line(path):
    return path.read_text().splitlines()[0]


def test_emitted_experiment_headers(tmp_path):
    cfg = ExperimentConfig(alpha=-0.05, n_values=[24], trials=2, outputs=str(tmp_path),
                           emit=["pairing", "fluctuations", "events", "tails", "certificates"])
    run_experiment(cfg, threads=1)
    assert first_line(tmp_path / "trials_n24.csv") == GOLDEN["trials+events"]
    for s in ("pairing", "fluctuations", "tails", "certificates"):
        assert first_line(tmp_path / f"{s}_n24.csv") == GOLDEN[s]
    assert first_line(tmp_path / "summary_long.csv") == GOLDEN["summary_long"]


def test_emitted_trials_header_without_events(tmp_path):
    run_experiment(ExperimentConfig(alpha=1.0, n_values=[16], trials=1, outputs=str(tmp_path)))
    assert first_line(tmp_path / "trials_n16.csv") == GOLDEN["trials"]


def test_jsonl_keys_match_csv_header(tmp_path):
    cfg = ExperimentConfig(alpha=1.0, n_values=[16], trials=2, outputs=str(tmp_path),
                           emit=["pairing", "fluctuations", "certificates"], format="jsonl")
    run_experiment(cfg, threads=1)
    for s in ("pairing", "fluctuations", "certificates"):
        line = (tmp_path / f"{s}_n16.jsonl").read_text().splitlines()[0]
        assert ",".join(json.loads(line)) == GOLDEN[s]


def test_documented_config_example_is_valid():
    text = re.search(r"```json\n(.*?)```", DOC, re.S).group(1)
    cfg = ExperimentConfig.from_json(text)
    assert cfg.n_values == [256, 1024]


@pytest.mark.parametrize("argv,name", [
    (["sample", "--n", "8"], "sample"),
    (["pair", "--n", "32"], "pairing"),
    (["fluct", "--n", "32"], "fluctuations"),
])
def test_emitted_cli_headers(capsys, argv, name):
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert ",".join(next(csv.reader(io.StringIO(out)))) == GOLDEN[name]
