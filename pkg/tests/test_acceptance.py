"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the summary lines
interleaved with the test names; they are also printed without ``-s``.
"""

import json
import re
import time
from contextlib import contextmanager

import numpy as np
import pytest

from qbcsim.abl import R_LABELS, SPIN_AXES
from qbcsim.attack import (
    cheat_fidelity,
    random_concealing_pair,
    synthesize_cheat_unitary,
    verify_binding_failure,
)
from qbcsim.cli import main
from qbcsim.engine import (
    ObservableSpec,
    Party,
    Register,
    measure_projective,
    measurement_unitary,
    purify_choice,
    reduced_on,
)
from qbcsim.linalg import StateVector, random_state, random_unitary, schmidt_decompose
from qbcsim.protocol import (
    audit_no_signalling,
    commitment_states,
    execute,
    flip_rejection_probability,
    parse,
    random_script_source,
    vaa_script,
)

# Certain outcomes under each post-selection, columns sx, sy, sz.
PUBLISHED = {
    "r1": ("up", "up", "up"),
    "r2": ("down", "down", "up"),
    "r3": ("up", "down", "down"),
    "r4": ("down", "up", "down"),
}
U = np.ones(3) / np.sqrt(3)


@contextmanager
def criterion(capsys, number, title):
    """Print ``criterion N: PASS|FAIL title`` whatever the outcome of the body."""
    ok = False
    start = time.perf_counter()
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.2f} s)")


def _within_3_sigma(hits, n, p):
    return abs(hits / n - p) <= 3 * np.sqrt(p * (1 - p) / n)


def _char_poly_trace_distance(w0, w1):
    roots = np.roots(np.poly(w0 - w1))
    return 0.5 * np.abs(roots.real).sum()


def _random_qubit_observable(rng, label):
    return ObservableSpec(label, random_unitary(2, rng), ("up", "down"))


def test_criterion_1_table(tmp_path, capsys):
    with criterion(capsys, 1, "pre/post-selected outcome table"):
        out = tmp_path / "table.json"
        start = time.perf_counter()
        code = main(["abl-table", "--format", "json", "--out", str(out)])
        elapsed = time.perf_counter() - start
        cells = json.loads(out.read_text())["cells"]
        assert code == 0
        assert len(cells) == 12
        seen = set()
        for cell in cells:
            r, s = cell["post"], cell["observable"]
            expected = PUBLISHED[r][SPIN_AXES.index(s)]
            assert cell["outcome"] == expected
            assert cell["probabilities"][expected] == pytest.approx(1.0, abs=1e-10)
            seen.add((r, s))
        assert seen == {(r, s) for r in R_LABELS for s in SPIN_AXES}
        assert elapsed < 1.0


def test_criterion_2_purification_equivalence(capsys):
    with criterion(capsys, 2, "choose-and-measure channel state equals purified partial trace"):
        rng = np.random.default_rng(2)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(100):
            rho_in = random_state(2, rng)
            obs = [_random_qubit_observable(rng, "X"), _random_qubit_observable(rng, "Y")]
            w = float(rng.uniform(0.05, 0.95))
            weights = [w, 1 - w]

            rho = np.outer(rho_in.amplitudes, rho_in.amplitudes.conj())
            analytic = sum(
                wk * sum(p @ rho @ p for _, p in o.projectors()) for wk, o in zip(weights, obs)
            )

            reg = Register.empty().add("c", rho_in, Party.BOB)
            reg = reg.add("m", StateVector.basis(2, 0), Party.BOB)
            reg = purify_choice(reg, [measurement_unitary(o) for o in obs], weights, "k", ["c", "m"])
            purified = reduced_on(reg, ["c"]).matrix
            worst = max(worst, float(np.abs(purified - analytic).max()))
        elapsed = time.perf_counter() - start
        assert worst <= 1e-12
        assert elapsed < 5.0


@pytest.mark.parametrize("dims", [(2, 2), (2, 4), (3, 3), (4, 4)])
def test_criterion_3_concealing_implies_not_binding(dims, capsys):
    dim_a, dim_b = dims
    with criterion(capsys, 3, f"concealing pairs {dim_a}x{dim_b} admit a cheat unitary"):
        rng = np.random.default_rng(300 + 10 * dim_a + dim_b)
        start = time.perf_counter()
        for i in range(200):
            psi0, psi1 = random_concealing_pair(dim_a, dim_b, rng, degenerate=i % 2 == 1)
            c0 = schmidt_decompose(psi0, dim_a, dim_b).coefficients
            c1 = schmidt_decompose(psi1, dim_a, dim_b).coefficients
            assert np.abs(c0 - c1).max() <= 1e-10
            rep = synthesize_cheat_unitary(psi0, psi1, dim_a, dim_b)
            moved = np.kron(rep.cheat_unitary, np.eye(dim_b)) @ psi0.amplitudes
            fid = abs(np.vdot(psi1.amplitudes, moved))
            assert fid >= 1 - 1e-8
            assert cheat_fidelity(rep.cheat_unitary, psi0, psi1) >= 1 - 1e-8
            assert verify_binding_failure(rep, psi0, psi1)[0]
        elapsed = time.perf_counter() - start
        # the whole criterion runs four of these
        assert elapsed < 30.0 / 4


def test_criterion_4_cheating_bob(capsys):
    with criterion(capsys, 4, "cheating Bob distinguishes the commitments"):
        cs = commitment_states(vaa_script(1), "cheat:bob")
        assert cs.bob_labels == ("k",)
        assert np.abs(cs.w0.matrix - np.eye(3) / 3).max() <= 1e-10
        assert np.abs(cs.w1.matrix - np.outer(U, U)).max() <= 1e-10
        assert abs(_char_poly_trace_distance(cs.w0.matrix, cs.w1.matrix) - 2 / 3) <= 1e-10
        assert abs(cs.trace_distance - 2 / 3) <= 1e-10

        obs = _helstrom_for_cheating_bob()
        rng = np.random.default_rng(4)
        n, hits = 10_000, 0
        for _ in range(n):
            b = int(rng.integers(2))
            _, rec = measure_projective(cs.registers[b], obs, "k", rng)
            hits += rec.outcome == str(b)
        assert _within_3_sigma(hits, n, 5 / 6), hits / n


def _helstrom_for_cheating_bob():
    from qbcsim.protocol import helstrom_observable

    cs = commitment_states(vaa_script(1), "cheat:bob")
    return helstrom_observable(cs.w0, cs.w1)


def test_criterion_5_honest_bob(capsys):
    with criterion(capsys, 5, "honest Bob learns nothing and a blind flip is caught"):
        start = time.perf_counter()
        cs = commitment_states(vaa_script(1), "honest")
        assert cs.trace_distance <= 1e-10

        # Bob applies the measurement that is optimal against the coherent die
        obs = _helstrom_for_cheating_bob()
        rng = np.random.default_rng(5)
        n, hits = 10_000, 0
        for _ in range(n):
            b = int(rng.integers(2))
            _, rec = measure_projective(cs.registers[b], obs, "k", rng)
            hits += rec.outcome == str(b)
        assert _within_3_sigma(hits, n, 0.5), hits / n

        # Alice commits to 0 and reveals 1 knowing only her own outcomes
        script = vaa_script(2)
        expected = flip_rejection_probability(2)
        rejected = sum(
            execute(script, seed=i, commit_bit=0, reveal_bit=1).verdict == "reject" for i in range(n)
        )
        assert _within_3_sigma(rejected, n, expected), (rejected / n, expected)
        assert time.perf_counter() - start < 60.0


def test_criterion_6_no_signalling(capsys):
    with criterion(capsys, 6, "no-signalling audit on VAA and 50 random scripts"):
        start = time.perf_counter()
        rep = audit_no_signalling(vaa_script(1))
        assert rep.distance <= 1e-10
        rng = np.random.default_rng(6)
        for _ in range(50):
            script = parse(random_script_source(rng, max_dim=64))
            rep = audit_no_signalling(script)
            assert rep.distance <= 1e-10
        assert time.perf_counter() - start < 30.0


TIMESTAMP = re.compile(r'"timestamp":\s*"[^"]*"')


@pytest.mark.parametrize(
    "args",
    [
        ["--n", "20", "--mode", "honest", "--seed", "7"],
        ["--n", "20", "--mode", "cheat:bob", "--seed", "8"],
        ["--n", "20", "--mode", "cheat:alice", "--commit", "1", "--seed", "9"],
        ["--n", "6", "--reveal", "1", "--seed", "10"],
        ["--n", "2", "--reveal", "1", "--trials", "40", "--seed", "11"],
        ["--n", "4"],
    ],
)
def test_criterion_7_replay_determinism(args, tmp_path, capsys):
    with criterion(capsys, 7, f"byte-identical replay of run {' '.join(args)}"):
        first, again, replay = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
        main(["run", "--builtin", "vaa", *args, "--out", str(first)])
        seed = json.loads(first.read_text())["seed"]
        rest = [a for i, a in enumerate(args) if a != "--seed" and (i == 0 or args[i - 1] != "--seed")]
        main(["run", "--builtin", "vaa", *rest, "--seed", str(seed), "--out", str(again)])
        main(["run", "--replay", str(first), "--out", str(replay)])
        a, b, c = (TIMESTAMP.sub("", p.read_text()) for p in (first, again, replay))
        assert a == b
        assert a == c
