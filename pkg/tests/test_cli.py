"""Command line front end: contracts, determinism, exit codes."""

import json

import pytest

from backflow.cli import run


def read(path):
    return path.read_text()


def test_current_row_count_and_determinism(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["current", "--state", "guess1", "--a", "0.4",
            "--t-min", "-2", "--t-max", "2", "--samples", "50"]
    assert run(argv + ["--out", str(out1)]) == 0
    assert run(argv + ["--out", str(out2)]) == 0
    text = read(out1)
    assert text == read(out2)  # byte identical
    lines = text.split("\n")
    assert lines[0] == "t,J,excluded"
    assert len(lines) == 52  # header + 50 rows + trailing newline
    assert "\r" not in text


def test_current_phi_dump(tmp_path):
    out = tmp_path / "phi.csv"
    assert run(["current", "--state", "guess2", "--phi", "--umax", "10",
                "--samples", "20", "--out", str(out)]) == 0
    lines = read(out).strip().split("\n")
    assert lines[0] == "u,phi"
    assert len(lines) == 21


def test_eigen_json(tmp_path):
    out = tmp_path / "eig.json"
    spec = tmp_path / "spec.csv"
    state = tmp_path / "state.csv"
    assert run(["eigen", "--n", "400", "--umax", "15", "--out", str(out),
                "--spectrum-out", str(spec), "--state-out", str(state)]) == 0
    payload = json.loads(read(out))
    assert "meta" in payload and "config_hash" in payload["meta"]
    assert abs(payload["most_negative"] - (-0.036226)) < 1e-4
    assert abs(payload["max_eigenvalue"] - 1.0) < 0.02
    assert read(spec).startswith("index,eigenvalue\n")
    assert read(state).startswith("u,phi\n")


def test_flux_csv(tmp_path):
    out = tmp_path / "flux.csv"
    assert run(["flux", "--state", "guess2", "--a", "0.6", "--b", "2.8",
                "--out", str(out)]) == 0
    lines = read(out).strip().split("\n")
    assert lines[0] == "t1,t2,F,fraction,method,tolerance"
    fields = lines[1].split(",")
    assert abs(float(fields[2]) - (-0.02756)) < 5e-4


def test_bound_scan(tmp_path):
    out = tmp_path / "scan.csv"
    assert run(["bound-scan", "--a-values", "0,1", "--n", "100", "--umax", "8",
                "--out", str(out)]) == 0
    lines = read(out).strip().split("\n")
    assert lines[0] == "a,lambda"
    lam0 = float(lines[1].split(",")[1])
    lam1 = float(lines[2].split(",")[1])
    assert lam0 < lam1 < 0.0


def test_prob_and_smear_smoke(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["prob", "--preset", "paper-gauss-B", "--t-min", "2.6",
                "--t-max", "3.4", "--samples", "3", "--out", str(out)]) == 0
    assert read(out).startswith("t,P\n")
    out2 = tmp_path / "pi.csv"
    assert run(["smear", "--state", "guess2", "--v0", "0.5", "--t-min", "0",
                "--t-max", "0.4", "--samples", "3", "--out", str(out2)]) == 0
    lines = read(out2).strip().split("\n")
    assert lines[0] == "tau,J,Pi"
    assert len(lines) == 4


def test_propagate_smoke(tmp_path):
    out = tmp_path / "run.csv"
    assert run(["propagate", "--x-min", "-30", "--x-max", "30", "--dx", "0.1",
                "--x0", "-10", "--p", "1.5", "--packet-sigma", "2",
                "--dt", "0.02", "--steps", "50", "--v0", "0.5",
                "--out", str(out)]) == 0
    lines = read(out).strip().split("\n")
    assert lines[0] == "tau,norm,Pi"
    assert len(lines) == 52
    norms = [float(l.split(",")[1]) for l in lines[1:]]
    assert norms[-1] <= norms[0]


def test_seq_json(tmp_path):
    out = tmp_path / "seq.json"
    assert run(["seq", "--state", "guess2", "--t1", "0.2", "--t2", "0.2",
                "--out", str(out)]) == 0
    payload = json.loads(read(out))
    assert payload["p"] == 0.0


def test_gauss_scan(tmp_path):
    out = tmp_path / "scan.csv"
    assert run(["gauss-scan", "--p1-list", "0.3", "--p2-list", "1.4",
                "--A1-list", "1.8", "--A2-list", "1.0", "--out", str(out)]) == 0
    lines = read(out).strip().split("\n")
    assert lines[0] == "p1,p2,sigma,A1,A2,F,t1,t2"
    f_val = float(lines[1].split(",")[5])
    assert abs(f_val - (-0.0061)) < 5e-4


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": 7}))
    out = tmp_path / "c.csv"
    assert run(["--config", str(cfg), "current", "--state", "guess1",
                "--samples", "50", "--t-min", "-2", "--t-max", "2",
                "--out", str(out)]) == 0
    assert len(read(out).strip().split("\n")) == 8  # config wins over the flag


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus_key": 1}))
    code = run(["--config", str(cfg), "current", "--state", "guess1"])
    assert code == 2


def test_usage_errors():
    assert run(["no-such-command"]) == 2
    assert run([]) == 2


def test_numeric_failure_exit_code(tmp_path):
    # unresolvable propagation step -> diagnostic and exit 1
    code = run(["propagate", "--dt", "5.0", "--steps", "5", "--out",
                str(tmp_path / "x.csv")])
    assert code == 1


def test_verify_single_criterion(capsys):
    assert run(["verify", "--only", "9"]) == 0
    out = capsys.readouterr().out
    assert "PASS criterion 9" in out
