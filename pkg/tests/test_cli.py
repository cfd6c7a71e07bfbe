import json
import subprocess
import sys

import numpy as np
import pytest

from ghzkit import __version__, basis, cli, experiment

from oracles import reference_ket


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- basis -------------------------------------------------------------------------------


def test_basis_ket(capsys):
    code, out, _ = run(capsys, "basis", "0000", "--format", "ket")
    assert code == 0
    assert out == "(|RrRr⟩+|LlLl⟩)/√2\n"


def test_basis_all(capsys):
    code, out, _ = run(capsys, "basis", "--all")
    assert code == 0
    lines = out.splitlines()
    assert sum("⟩" in line for line in lines) == 16
    assert sum("<->" in line for line in lines) == 8
    assert "0000 <-> 0011" in lines


def test_basis_json_round_trip(capsys, tmp_path):
    out = tmp_path / "basis.json"
    code, _, _ = run(capsys, "basis", "--all", "--format", "json", "--out", str(out))
    assert code == 0
    states = cli.load_states(out.read_text())
    assert sorted(states) == sorted(basis.LABELS)
    m = np.array([states[b].amps for b in basis.LABELS])
    assert np.max(np.abs(m.conj() @ m.T - np.eye(16))) < 1e-12
    for b in basis.LABELS:
        assert np.allclose(states[b].amps, reference_ket(b), atol=1e-15)
    man = json.loads((tmp_path / "basis.json.manifest.json").read_text())
    assert man["command"] == "basis"
    assert man["version"] == __version__
    assert set(man["outputs"]) == {"basis.json"}


@pytest.mark.parametrize("argv", [
    ["basis", "2222"],
    ["basis"],
    ["basis", "0000", "--all"],
    ["basis", "0000", "--format", "png"],
    ["frobnicate"],
    [],
])
def test_basis_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


# -- witness -------------------------------------------------------------------------------


def test_witness_label(capsys):
    code, out, _ = run(capsys, "witness", "--label", "0000")
    assert code == 0
    rep = json.loads(out)
    assert rep["i2"] == pytest.approx(1, abs=1e-12)
    assert rep["adapted_to"] == "0000"


def test_witness_fixed_adaptation(capsys):
    _, out, _ = run(capsys, "witness", "--label", "0011", "--adapt", "0000")
    assert json.loads(out)["lin_i2"] < 0
    code, _, _ = run(capsys, "witness", "--label", "0011", "--adapt", "00x0")
    assert code == 2


def test_witness_state_file(capsys, tmp_path):
    f = tmp_path / "state.json"
    f.write_text(json.dumps(basis.basis_state("1010").to_json()))
    code, out, _ = run(capsys, "witness", str(f), "--variant", "as-printed")
    assert code == 0
    rep = json.loads(out)
    assert rep["adapted_to"] == "1010" and rep["variant"] == "as-printed"


def test_witness_malformed_file(capsys, tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{"dim": 16,\n "amps": [1, 2,}')
    code, _, err = run(capsys, "witness", str(f))
    assert code == 2
    assert "bad.json:2:" in err
    f.write_text(json.dumps({"dim": 2, "amps": [[1, 0], [0, 0]]}))
    code, _, _ = run(capsys, "witness", str(f))
    assert code == 2
    code, _, _ = run(capsys, "witness", str(tmp_path / "missing.json"))
    assert code == 2
    code, _, _ = run(capsys, "witness")
    assert code == 2


def test_witness_unnormalized_state_is_parse_error(capsys, tmp_path):
    f = tmp_path / "unnorm.json"
    amps = [[0.0, 0.0]] * 16
    amps[0] = [2.0, 0.0]
    f.write_text(json.dumps({"dim": 16, "amps": amps}))
    code, _, err = run(capsys, "witness", str(f))
    assert code == 2
    assert "unnorm.json" in err


def test_numeric_failure_exit_code(capsys, tmp_path):
    # well-formed records that hold no counts at all
    empty = [experiment.CountRecord(s, (0,) * 16, 0) for s in experiment.witness_settings()]
    for b in ("0000", "0011"):
        (tmp_path / f"counts_{b}.jsonl").write_text(experiment.dumps_records(empty))
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"0000": 0.5, "0011": 0.5}))
    code, _, err = run(capsys, "mix-counts", "--weights", str(w), "--inputs", str(tmp_path))
    assert code == 3
    assert "numeric error" in err


# -- phase diagram --------------------------------------------------------------------------


def test_phase_diagram_outputs(capsys, tmp_path):
    prefix = tmp_path / "twin"
    code, _, _ = run(capsys, "phase-diagram", "--pair", "0000", "0011", "--resolution", "10",
                     "--out", str(prefix))
    assert code == 0
    csv = (tmp_path / "twin.csv").read_text()
    svg = (tmp_path / "twin.svg").read_text()
    assert csv.startswith("alpha,beta,gamma,noise,class,i2,i3,i4,min_pt_eig\n")
    assert "0.5,0.5,0,0,UNDETECTED," in csv
    assert svg.startswith("<?xml")
    man = json.loads((tmp_path / "twin.manifest.json").read_text())
    assert set(man["outputs"]) == {"twin.csv", "twin.svg"}


def test_phase_diagram_untwin_and_triple(capsys, tmp_path):
    run(capsys, "phase-diagram", "--pair", "0000", "1110", "--resolution", "4", "--out", str(tmp_path / "u"))
    assert "0.5,0.5,0,0,NOT3SEP," in (tmp_path / "u.csv").read_text()
    code, _, _ = run(capsys, "phase-diagram", "--triple", "0000", "0011", "1110", "--resolution", "3",
                     "--out", str(tmp_path / "t"))
    assert code == 0
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 1 + 4 * 5 * 6 // 6


@pytest.mark.parametrize("argv", [
    ["phase-diagram", "--pair", "0000", "0012"],
    ["phase-diagram", "--pair", "0000", "0011", "--resolution", "1"],
    ["phase-diagram"],
    ["phase-diagram", "--pair", "0000", "0011", "--triple", "0000", "0011", "1110"],
])
def test_phase_diagram_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_phase_diagram_rerun_identical(capsys, tmp_path):
    for name in ("a", "b"):
        run(capsys, "phase-diagram", "--pair", "0000", "0011", "--resolution", "12", "--out", str(tmp_path / name))
    for ext in ("csv", "svg"):
        assert (tmp_path / f"a.{ext}").read_bytes() == (tmp_path / f"b.{ext}").read_bytes()


# -- simulate ------------------------------------------------------------------------------


def test_simulate_analytic_witness(capsys, caplog, tmp_path):
    caplog.set_level("INFO", logger="ghzkit")
    code, out, _ = run(capsys, "simulate", "--label", "0101", "--noise", "0", "--task", "witness",
                         "--out", str(tmp_path))
    assert code == 0
    rep = json.loads(out)
    assert rep["raw"]["lin_i2"] == pytest.approx(1, abs=1e-12)
    assert rep["budget"] == 144
    assert "budget=144" in caplog.text
    assert "seed=0" in caplog.text
    recs = experiment.loads_records((tmp_path / "counts_0101.jsonl").read_text())
    assert len(recs) == 9
    assert (tmp_path / "simulate_0101.manifest.json").exists()


def test_simulate_fqst(capsys, tmp_path):
    code, out, err = run(capsys, "simulate", "--label", "1110", "--task", "fqst", "--shots", "inf",
                         "--out", str(tmp_path), "--quiet")
    assert code == 0
    assert out == ""
    rep = json.loads((tmp_path / "report_1110.json").read_text())
    assert rep["budget"] == 1296
    assert rep["fidelity"] == pytest.approx(1, abs=1e-12)
    assert rep["class"] == "GME"
    assert (tmp_path / "rho_1110.json").exists()


def test_simulate_dark_correction_reported(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--label", "0000", "--shots", "5000", "--dark", "20",
                       "--seed", "3", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads(out)
    assert rep["dark_corrected"]["lin_i2"] > rep["raw"]["lin_i2"]


def test_simulate_rerun_identical(capsys, tmp_path):
    args = ["simulate", "--label", "0110", "--noise", "0.1", "--shots", "1000", "--dark", "1", "--seed", "42",
            "--out", str(tmp_path)]
    run(capsys, *args)
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    run(capsys, *args)
    second = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert len(first) == 3
    assert first == second


@pytest.mark.parametrize("argv", [
    ["simulate", "--label", "0000", "--noise", "1.5"],
    ["simulate", "--label", "0000", "--shots", "-3"],
    ["simulate", "--label", "0000", "--dark", "-1"],
    ["simulate", "--label", "0000", "--task", "ml"],
    ["simulate"],
])
def test_simulate_usage_errors(capsys, tmp_path, argv):
    code, _, _ = run(capsys, *argv, "--out", str(tmp_path))
    assert code == 2


# -- mix-counts ------------------------------------------------------------------------------


@pytest.fixture
def count_dir(capsys, tmp_path):
    for b in ("0000", "0011", "1110"):
        run(capsys, "simulate", "--label", b, "--task", "fqst", "--out", str(tmp_path), "--quiet")
    return tmp_path


def write_weights(path, weights):
    path.write_text(json.dumps(weights))
    return str(path)


def test_mix_twin_undetected(capsys, count_dir):
    w = write_weights(count_dir / "w.json", {"0000": 0.5, "0011": 0.5})
    code, out, _ = run(capsys, "mix-counts", "--weights", w, "--inputs", str(count_dir), "--task", "fqst")
    assert code == 0
    rep = json.loads(out)
    assert rep["class"] == "UNDETECTED"
    assert max(rep["report"][k] for k in ("i2", "i3", "i4", "lin_i2")) <= 1e-10
    code, out, _ = run(capsys, "mix-counts", "--weights", w, "--inputs", str(count_dir))
    assert json.loads(out)["lin_i2"] <= 1e-12


def test_mix_untwin(capsys, count_dir):
    w = write_weights(count_dir / "w.json", {"0000": 0.5, "1110": 0.5})
    _, out, _ = run(capsys, "mix-counts", "--weights", w, "--inputs", str(count_dir), "--task", "fqst")
    rep = json.loads(out)
    assert rep["report"]["i3"] == pytest.approx(0.5, abs=1e-9)
    assert rep["class"] == "NOT3SEP"


def test_mix_single(capsys, count_dir):
    w = write_weights(count_dir / "w.json", {"0011": 1.0, "0000": 0.0})
    _, out, _ = run(capsys, "mix-counts", "--weights", w, "--inputs", str(count_dir))
    rep = json.loads(out)
    assert rep["adapted_to"] == "0011"
    assert rep["lin_i2"] == pytest.approx(1, abs=1e-12)


def test_mix_errors(capsys, count_dir):
    w = write_weights(count_dir / "w.json", {"0000": 0.6, "0011": 0.6})
    assert run(capsys, "mix-counts", "--weights", w, "--inputs", str(count_dir))[0] == 2
    w = write_weights(count_dir / "w.json", {"0000": 0.5, "0101": 0.5})
    assert run(capsys, "mix-counts", "--weights", w, "--inputs", str(count_dir))[0] == 2
    (count_dir / "w.json").write_text("[1, 2")
    assert run(capsys, "mix-counts", "--weights", w, "--inputs", str(count_dir))[0] == 2
    (count_dir / "counts_0101.jsonl").write_text("not json\n")
    w = write_weights(count_dir / "w.json", {"0000": 0.5, "0101": 0.5})
    assert run(capsys, "mix-counts", "--weights", w, "--inputs", str(count_dir))[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ghzkit", "basis", "1110"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "(|RlLl⟩+|LrRr⟩)/√2"
    proc = subprocess.run([sys.executable, "-m", "ghzkit", "--version"], capture_output=True, text=True)
    assert __version__ in proc.stdout
