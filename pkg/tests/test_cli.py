import json
import os
import subprocess
import sys

import numpy as np

from ptfprg.cli import main
from ptfprg.hermite import HermitePoly, random_poly

RUN = [sys.executable, "-m", "ptfprg.cli"]


def run_cli(args, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(RUN + args, capture_output=True, text=True, env=env)


class TestGen:
    def test_reproducible_bytes(self, tmp_path):
        args = ["gen", "--n", "2", "--d", "1", "--trials", "3", "--seed", "9"]
        a = run_cli(args)
        b = run_cli(args)
        assert a.returncode == 0
        assert a.stdout == b.stdout
        assert len(a.stdout.strip().split("\n")) == 2 + 3  # header+cols+rows

    def test_json_document(self):
        r = run_cli(["gen", "--n", "2", "--d", "1", "--trials", "2",
                     "--seed", "1", "--format", "json"])
        doc = json.loads(r.stdout)
        assert set(doc) == {"params", "samples"}
        assert len(doc["samples"]) == 2

    def test_header_seed_bits_match_accounting(self):
        from ptfprg.prg import choose_params, generate
        r = run_cli(["gen", "--n", "2", "--d", "1", "--trials", "1",
                     "--seed", "4"])
        header = json.loads(r.stdout.split("\n")[0][2:])
        params = choose_params(2, 1, 0.2)
        assert header["seed_bits_per_sample"] == \
            generate(params, 4).seed_bits_used


class TestFool:
    def test_file_polys_and_gate(self, tmp_path):
        rng = np.random.default_rng(2)
        polys = [random_poly(2, 1, rng).to_json_dict() for _ in range(2)]
        path = tmp_path / "polys.json"
        path.write_text(json.dumps(polys))
        r = run_cli(["fool", "--polys", str(path), "--n", "2", "--d", "1",
                     "--samples", "4000", "--seed", "3", "--format", "json"])
        assert r.returncode == 0, r.stderr
        doc = json.loads(r.stdout)
        assert len(doc["rows"]) == 2
        assert all(row["diff"] == abs(row["est_prg"] - row["est_true"])
                   for row in doc["rows"])

    def test_degree_violation_names_polynomial(self, tmp_path):
        poly = HermitePoly(1, {(3,): 1.0}).to_json_dict()
        path = tmp_path / "p.json"
        path.write_text(json.dumps([poly]))
        r = run_cli(["fool", "--polys", str(path), "--d", "1"])
        assert r.returncode != 0
        assert "00-file" in r.stderr

    def test_parse_error_names_entry(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps([{"n": 1, "basis": "weird", "terms": []}]))
        r = run_cli(["fool", "--polys", str(path)])
        assert r.returncode != 0
        assert "#0" in r.stderr


class TestMollifierCmd:
    def test_row_schema(self):
        r = run_cli(["mollifier", "--n", "2", "--d", "1", "--x-trials", "3",
                     "--trials", "100", "--seed", "5"])
        doc = json.loads(r.stdout)
        assert len(doc["rows"]) == 3
        row = doc["rows"][0]
        assert set(row) == {"poly_id", "x_id", "mollifier", "sign",
                            "first_analysis_failure"}


class TestStatsCmd:
    def test_csv_header(self):
        r = run_cli(["stats", "--n", "2", "--d", "1", "--x-trials", "2",
                     "--cols", "2", "--trials", "100", "--seed", "5"])
        lines = r.stdout.strip().split("\n")
        assert lines[0] == "i,j,x_id,value,stderr,exact"
        assert len(lines) == 1 + 2 * 3 * 2


class TestBattery:
    def test_only_single_check(self):
        r = run_cli(["battery", "--only", "clean_fraction", "--seed", "1"])
        assert r.returncode == 0
        doc = json.loads(r.stdout)
        assert [c["name"] for c in doc["checks"]] == ["clean_fraction"]

    def test_unknown_only_errors(self):
        r = run_cli(["battery", "--only", "nope"])
        assert r.returncode != 0

    def test_injected_fault_fails(self):
        r = run_cli(["battery", "--only", "jigsaw_grid", "--inject-fault",
                     "jigsaw", "--seed", "1"])
        assert r.returncode == 1
        doc = json.loads(r.stdout)
        assert doc["checks"][0]["pass"] is False

    def test_verify_subcommand_exact_only(self):
        r = run_cli(["verify", "--seed", "2", "--trials", "300"])
        assert r.returncode == 0, r.stdout[-2000:]
        doc = json.loads(r.stdout)
        assert all(c["kind"] == "exact" for c in doc["checks"])
        assert len(doc["checks"]) >= 12


class TestPrintParams:
    def test_dumps_resolved_set(self):
        r = run_cli(["gen", "--n", "2", "--d", "1", "--trials", "1",
                     "--seed", "0", "--print-params"])
        dumped = json.loads(r.stderr)
        assert dumped["n"] == 2 and dumped["d"] == 1
        assert dumped["lambda_exp"] == 4.0


class TestMainEntry:
    def test_in_process_invocation(self, tmp_path, capsys):
        out = tmp_path / "o.json"
        rc = main(["battery", "--only", "clean_fraction", "--seed", "0",
                   "--out", str(out)])
        assert rc == 0
        assert json.loads(out.read_text())["pass"] is True
