import numpy as np
import pytest

from qbcsim.engine import Party, conditional_unitary, measurement_unitary
from qbcsim.linalg import embed_operator, partial_trace
from qbcsim.protocol import compare_distributions, enumerate_round, observation_distribution, parse, purify
from qbcsim.protocol.nodes import CopyRecord, PurifiedCase, PurifiedChoose, PurifiedMeasure
from qbcsim.spin import SIGMA_X, SIGMA_Y, SIGMA_Z

STATE = "state psi = [cos(0.4), exp(0.7*i)*sin(0.4)]\n"
X_OR_Y = STATE + (
    "prepare A q psi\nsend q A B\n"
    "choose B k = x@0.3: measure sx q -> m | y: measure sy q -> m\n"
)
SEQUENTIAL = (
    "state pair = [0.5, 0.5*i, -0.5, 0.5]\n"
    "prepare A q1, q2 pair\nsend q1 A B\nsend q2 A B\n"
    "measure B sz q1 -> m1\n"
    "case B m1 = up: measure sx q2 -> m2 | down: measure sy q2 -> m2\n"
    "announce B m2 == up\n"
)


def _final_state(script):
    (p, st), = enumerate_round(script)
    return st.reg


def test_no_choices_is_identity_transform():
    s = parse("prepare A q |0>\nsend q A B\napply B H q")
    assert purify(s, Party.BOB) is s
    assert purify(s, Party.ALICE) is s


def test_random_measurement_becomes_quantum_die():
    s = purify(parse(X_OR_Y), Party.BOB)
    assert s.step_kinds()[-1] == "PurifiedChoose"
    reg = _final_state(s)
    assert reg.labels == ("q", "m", "k")
    psi = np.array([np.cos(0.4), np.exp(0.7j) * np.sin(0.4)])
    start = np.kron(psi, [1, 0])
    w = [0.3, 0.7]
    expected = sum(
        np.sqrt(wk) * np.kron(measurement_unitary(obs) @ start, np.eye(2)[k])
        for k, (wk, obs) in enumerate(zip(w, (SIGMA_X, SIGMA_Y)))
    )
    assert np.allclose(reg.state.amplitudes, expected, atol=1e-12)
    assert reg.ancilla("k").kind == "die" and reg.ancilla("k").outcomes == ("x", "y")


def test_channel_state_unchanged_by_purification():
    honest = enumerate_round(parse(X_OR_Y))
    rho_honest = sum(p * np.outer(st.reg.state.amplitudes, st.reg.state.amplitudes.conj()) for p, st in honest)
    reg = _final_state(purify(parse(X_OR_Y), Party.BOB))
    rho_pur = partial_trace(np.outer(reg.state.amplitudes, reg.state.amplitudes.conj()), reg.dims, [0]).matrix
    assert np.allclose(rho_honest, rho_pur, atol=1e-12)


def test_sequential_measurements_emit_case_table():
    s = purify(parse(SEQUENTIAL), Party.BOB)
    assert s.step_kinds()[3:5] == ["PurifiedMeasure", "PurifiedCase"]
    stop_before_announce = [st for st in s.steps if not type(st).__name__ == "Announce"]
    reg = _final_state(s.__class__(**{**s.__dict__, "steps": tuple(stop_before_announce)}))
    assert reg.labels == ("q1", "q2", "m1", "m2")
    pair = np.array([0.5, 0.5j, -0.5, 0.5])
    dims = [2, 2, 2, 2]
    v = np.kron(pair, [1, 0, 0, 0])
    v = embed_operator(measurement_unitary(SIGMA_Z), dims, [0, 2]) @ v
    table = {(0,): measurement_unitary(SIGMA_X), (1,): measurement_unitary(SIGMA_Y)}
    # control m1, target (q2, m2)
    cu = conditional_unitary([2], table, 4)
    v = embed_operator(cu, dims, [2, 1, 3]) @ v
    assert np.allclose(reg.state.amplitudes, v, atol=1e-12)


def test_notes_at_deferred_measurements():
    s = purify(parse(SEQUENTIAL), Party.BOB)
    assert len(s.notes) == 1 and "announce" in s.notes[0] and "m2" in s.notes[0]


def test_decohere_inserts_copies():
    s = purify(parse(X_OR_Y), Party.BOB, decohere=True)
    copies = [st for st in s.steps if isinstance(st, CopyRecord)]
    assert [c.record for c in copies] == ["k", "m"]


def test_only_that_party_is_rewritten():
    s = purify(parse(SEQUENTIAL + "measure B sz q1 -> z"), Party.ALICE)
    assert not any(isinstance(st, (PurifiedMeasure, PurifiedCase, PurifiedChoose)) for st in s.steps)


@pytest.mark.parametrize("src", [X_OR_Y + "send q B A\nmeasure A sz q -> r\nannounce B m == up\n", SEQUENTIAL])
def test_undetectable_for_other_party(src):
    s = parse(src)
    for party in (Party.ALICE, Party.BOB):
        other = party.other()
        assert compare_distributions(observation_distribution(s, other),
                                     observation_distribution(purify(s, party), other)) < 1e-10
