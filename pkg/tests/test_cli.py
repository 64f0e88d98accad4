import json
import subprocess
import sys

from finslerhardy import cli
from finslerhardy.report import mask_timestamp


def run_main(argv):
    return cli.main(argv)


def test_usage_error_exit_code():
    assert run_main(["no-such-command"]) == 2
    assert run_main(["verify-norms", "--family", "lq:s=4"]) == 2


def test_verify_norms_report(tmp_path):
    out = tmp_path / "report.json"
    code = run_main(["verify-norms", "--family", "lp:s=4", "--p", "3", "--n", "2",
                     "--samples", "2000", "--seed", "5", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["schema"] == 1
    assert rep["summary"]["fail"] == 0
    names = {c["name"] for c in rep["checks"]}
    assert {"operator_identity", "homogeneity", "monotonicity",
            "dual_identity", "biduality"} <= names


def test_verify_bregman_payload(tmp_path):
    out = tmp_path / "breg.json"
    code = run_main(["verify-bregman", "--family", "mix:s=4;A=[[4,0],[0,9]]",
                     "--p", "3", "--n", "2", "--samples", "20000",
                     "--seed", "5", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    pay = rep["payload"]
    assert pay["c_lower"] > 0 and pay["c_upper"] < float("inf")
    assert "witness_upper" in pay and "skipped" in pay


def test_scientific_notation_flags(tmp_path):
    out = tmp_path / "r.json"
    code = run_main(["verify-harmonic", "--family", "euclidean", "--p", "2",
                     "--n", "3", "--field", "dualpow", "--tests", "5",
                     "--seed", "3", "--rmin", "1e-1", "--rmax", "1e1",
                     "--tol", "1e-5", "--out", str(out)])
    assert code == 0


def test_build_weight_classical_record(tmp_path):
    out = tmp_path / "w.json"
    code = run_main(["build-weight", "--family", "euclidean", "--p", "2",
                     "--n", "3", "--field", "dualpow", "--seed", "3",
                     "--tests", "10", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    byname = {c["name"]: c for c in rep["checks"]}
    assert byname["classical_reduction"]["status"] == "pass"
    assert rep["payload"]["branch"] == "standard"


def test_null_seq_csv(tmp_path):
    out = tmp_path / "seq.csv"
    code = run_main(["null-seq", "--family", "euclidean", "--p", "2", "--n", "3",
                     "--kmin", "16", "--kmax", "256", "--seed", "3",
                     "--format", "csv", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "k,energy,mass,ratio"
    assert len(lines) == 1 + 5          # k in {16, 32, 64, 128, 256}
    k, e, m, r = lines[1].split(",")
    assert int(k) == 16 and float(r) > 1.0


def test_green_subcommand(tmp_path):
    spec = {"p": 2.0, "n": 3, "phi": {"r_a": 0.5, "r_b": 1.0, "mass": 1.0},
            "R_out": 60.0, "mesh": 1024}
    pf = tmp_path / "prob.json"
    pf.write_text(json.dumps(spec))
    out = tmp_path / "g.json"
    prof = tmp_path / "profile.csv"
    code = run_main(["green", "--problem", str(pf), "--out", str(out),
                     "--profile-out", str(prof)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert abs(rep["payload"]["beta"] + 1.0) < 0.02
    header = prof.read_text().splitlines()[0]
    assert header == "r,u,du"


def test_eigen_subcommand(tmp_path):
    out = tmp_path / "e.json"
    code = run_main(["eigen", "--p", "2", "--L", "1", "--potential", "const:1.0",
                     "--grid", "256", "--seed", "3", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    lam1 = rep["payload"]["lambda1"]
    import math
    assert abs(lam1 - (math.pi ** 2 + 1.0)) < 0.05
    assert rep["payload"]["gap"] > 0


def test_suite_only_filter(tmp_path):
    out = tmp_path / "s.json"
    code = run_main(["suite", "--quick", "--only", r"norms\.operator_identity",
                     "--seed", "7", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert len(rep["checks"]) == 5
    assert all(c["name"].startswith("norms.operator_identity") for c in rep["checks"])


def test_suite_exit_code_on_failing_record(tmp_path):
    out = tmp_path / "s.json"
    code = run_main(["suite", "--quick", "--only",
                     r"hardy\.nullseq_energy_slope\.p3", "--seed", "7",
                     "--out", str(out)])
    assert code == 1
    rep = json.loads(out.read_text())
    assert rep["summary"]["fail"] == 1


def test_report_determinism_same_process(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify-norms", "--family", "quad:[[4,0],[0,9]]", "--p", "2",
            "--n", "2", "--samples", "3000", "--seed", "9"]
    assert run_main(args + ["--out", str(a)]) == 0
    assert run_main(args + ["--out", str(b)]) == 0
    assert mask_timestamp(a.read_text()) == mask_timestamp(b.read_text())


def test_hardy_threads_env_cap(tmp_path, monkeypatch):
    import os

    out_env = tmp_path / "env.json"
    out_flag = tmp_path / "flag.json"
    args = ["suite", "--quick", "--only", r"norms\.operator_identity",
            "--seed", "7"]
    monkeypatch.setenv("HARDY_THREADS", "2")
    assert run_main(args + ["--out", str(out_env)]) == 0
    monkeypatch.delenv("HARDY_THREADS")
    assert run_main(args + ["--threads", "2", "--out", str(out_flag)]) == 0
    assert mask_timestamp(out_env.read_text()) == mask_timestamp(out_flag.read_text())


def test_console_entry_point_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "finslerhardy.cli", "verify-norms",
         "--family", "euclidean", "--p", "2", "--n", "2", "--samples", "500",
         "--seed", "1"],
        capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0
    rep = json.loads(proc.stdout)
    assert rep["summary"]["fail"] == 0
