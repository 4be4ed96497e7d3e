import json

import numpy as np
import pytest

from qbcsim.attack import optimal_cheat_unitary, random_concealing_pair
from qbcsim.cli import main
from qbcsim.linalg import StateVector, random_state


def _write_state(path, amps):
    path.write_text("".join(f"{float(a.real)!r} {float(a.imag)!r}\n" for a in np.asarray(amps, dtype=complex)))
    return str(path)


def _strip_timestamp(text):
    d = json.loads(text)
    d.pop("timestamp")
    return d


class TestRun:
    def test_honest_accepts_and_writes_report(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code = main(["run", "--builtin", "vaa", "--n", "200", "--mode", "honest", "--commit", "0",
                     "--seed", "42", "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())
        assert rep["schema"] == "qbcsim.report/1"
        assert rep["verdict"] == "accept" and rep["seed"] == 42
        assert rep["metrics"]["per_particle_trace_distance"] <= 1e-10
        assert rep["version"] == "0.1.0"

    def test_cheating_bob_metrics(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["run", "--builtin", "vaa", "--mode", "cheat:bob", "--seed", "1", "--out", str(out)]) == 0
        m = json.loads(out.read_text())["metrics"]
        assert m["per_particle_trace_distance"] == pytest.approx(2 / 3, abs=1e-10)
        assert m["bob_guess_probability"] == pytest.approx(5 / 6, abs=1e-10)

    def test_default_seed_is_recorded_and_replayable(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["run", "--builtin", "vaa", "--n", "5", "--out", str(a)]) == 0
        assert main(["run", "--replay", str(a), "--out", str(b)]) == 0
        assert _strip_timestamp(a.read_text()) == _strip_timestamp(b.read_text())

    def test_reject_exit_status(self, tmp_path):
        codes = {main(["run", "--builtin", "vaa", "--n", "12", "--reveal", "1", "--seed", str(s),
                       "--out", str(tmp_path / f"{s}.json")]) for s in range(30)}
        assert 1 in codes

    def test_malformed_script(self, tmp_path, capsys):
        bad = tmp_path / "bad.qbc"
        bad.write_text("prepare A q |0>\nmeasure A nope q -> m\n")
        assert main(["run", "--script", str(bad), "--seed", "1"]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_script_file(self, tmp_path):
        from qbcsim.protocol import vaa_source

        src = tmp_path / "v.qbc"
        src.write_text(vaa_source(4))
        out = tmp_path / "r.json"
        assert main(["run", "--script", str(src), "--seed", "3", "--n", "6", "--out", str(out)]) == 0
        assert len(json.loads(out.read_text())["transcript"]["rounds"]) == 6

    def test_output_dir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("QBCSIM_OUTPUT_DIR", str(tmp_path))
        assert main(["run", "--builtin", "vaa", "--seed", "77"]) == 0
        assert (tmp_path / "run-77.json").exists()

    def test_trials(self, tmp_path):
        out = tmp_path / "t.json"
        assert main(["run", "--builtin", "vaa", "--n", "2", "--trials", "50", "--seed", "4",
                     "--reveal", "1", "--out", str(out)]) == 0
        t = json.loads(out.read_text())["trials"]
        assert t["accepted"] + t["rejected"] == 50

    def test_usage_error(self, capsys):
        assert main(["run", "--seed", "1"]) == 2
        assert main(["run", "--builtin", "nope"]) == 2


class TestAttack:
    def test_concealing_pair(self, tmp_path, capsys, rng):
        psi0, psi1 = random_concealing_pair(2, 3, rng, degenerate=True)
        f0 = _write_state(tmp_path / "a.txt", psi0.amplitudes)
        f1 = _write_state(tmp_path / "b.txt", psi1.amplitudes)
        assert main(["attack", f0, f1, "--dim-a", "2", "--dim-b", "3"]) == 0
        out = capsys.readouterr().out
        assert "cheat fidelity (schmidt): 1" in out

    def test_nonideal_matches_library(self, tmp_path, rng):
        psi0, psi1 = random_state((2, 2), rng), random_state((2, 2), rng)
        f0 = _write_state(tmp_path / "a.txt", psi0.amplitudes)
        f1 = _write_state(tmp_path / "b.txt", psi1.amplitudes)
        out = tmp_path / "r.json"
        assert main(["attack", f0, f1, "--dim-a", "2", "--dim-b", "2", "--format", "json", "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        expected = optimal_cheat_unitary(StateVector((2, 2), np.array([complex(x) for x in psi0.amplitudes])),
                                         psi1, 2, 2).cheat_fidelity
        assert 0 < rep["cheat_fidelity"] < 1
        assert rep["cheat_fidelity"] == pytest.approx(expected, abs=1e-12)

    def test_identical_files_identity(self, tmp_path, rng):
        psi = random_state((3, 2), rng)
        f = _write_state(tmp_path / "a.txt", psi.amplitudes)
        out = tmp_path / "r.json"
        assert main(["attack", f, f, "--dim-a", "3", "--dim-b", "2", "--format", "json", "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        u = np.array(rep["cheat_unitary"]["real"]) + 1j * np.array(rep["cheat_unitary"]["imag"])
        assert np.allclose(u, u[0, 0] * np.eye(3), atol=1e-8)

    def test_dimension_mismatch(self, tmp_path, rng, capsys):
        f = _write_state(tmp_path / "a.txt", random_state(4, rng).amplitudes)
        assert main(["attack", f, f, "--dim-a", "3", "--dim-b", "2"]) == 2

    def test_bad_file(self, tmp_path):
        p = tmp_path / "a.txt"
        p.write_text("1 0 0\n")
        assert main(["attack", str(p), str(p), "--dim-a", "1", "--dim-b", "1"]) == 2


class TestAblTable:
    def test_default_all_pass(self, capsys):
        assert main(["abl-table"]) == 0
        assert "12/12 PASS" in capsys.readouterr().out

    def test_single_query(self, tmp_path):
        out = tmp_path / "t.json"
        assert main(["abl-table", "--post", "r2", "--obs", "sy", "--format", "json", "--out", str(out)]) == 0
        cell, = json.loads(out.read_text())["cells"]
        assert cell["outcome"] == "down" and cell["probabilities"]["down"] == pytest.approx(1.0, abs=1e-10)

    def test_product_pre_state_has_no_verdict(self, tmp_path, capsys):
        pre = _write_state(tmp_path / "pre.txt", np.kron([1, 0], [np.cos(0.3), np.sin(0.3)]))
        out = tmp_path / "t.json"
        assert main(["abl-table", "--pre", pre, "--format", "json", "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert all("pass" not in c for c in rep["cells"])
        assert any(0.01 < max(c["probabilities"].values()) < 0.99 for c in rep["cells"])

    def test_bad_label(self):
        assert main(["abl-table", "--post", "r9"]) == 2
