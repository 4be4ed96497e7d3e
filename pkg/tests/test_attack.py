import numpy as np
import pytest

from qbcsim.attack import (
    cheat_fidelity,
    cheat_overlap_matrix,
    concealment,
    optimal_cheat_unitary,
    random_concealing_pair,
    synthesize_cheat_unitary,
    verify_binding_failure,
)
from qbcsim.errors import DomainError, ShapeError
from qbcsim.linalg import StateVector, random_state, schmidt_decompose


def _su2_grid(n):
    # exhaustive grid over SU(2) = cos(t) I + i sin(t) (n . sigma)
    for t in np.linspace(0, np.pi, n):
        for th in np.linspace(0, np.pi, n):
            for ph in np.linspace(0, 2 * np.pi, 2 * n, endpoint=False):
                nx, ny, nz = np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)
                yield np.array([[np.cos(t) + 1j * np.sin(t) * nz, 1j * np.sin(t) * (nx - 1j * ny)],
                                [1j * np.sin(t) * (nx + 1j * ny), np.cos(t) - 1j * np.sin(t) * nz]])


class TestSynthesis:
    @pytest.mark.parametrize("dims", [(2, 2), (2, 4), (3, 3), (4, 2)])
    def test_concealing_pairs_are_not_binding(self, rng, dims):
        for degenerate in (False, True):
            psi0, psi1 = random_concealing_pair(*dims, rng, degenerate)
            rep = synthesize_cheat_unitary(psi0, psi1, *dims)
            assert rep.cheat_fidelity >= 1 - 1e-10
            ok, residual = verify_binding_failure(rep, psi0, psi1)
            assert ok and residual < 1e-8

    def test_maximally_entangled_fully_degenerate(self, rng):
        bell = StateVector((2, 2), np.array([1, 0, 0, 1]) / np.sqrt(2))
        other = StateVector((2, 2), np.array([0, 1, -1, 0]) / np.sqrt(2))
        rep = synthesize_cheat_unitary(bell, other, 2, 2)
        assert rep.degenerate_blocks == 1
        assert verify_binding_failure(rep, bell, other)[0]

    def test_identical_states_give_identity_up_to_phase(self, rng):
        psi = random_state((3, 3), rng)
        u = synthesize_cheat_unitary(psi, psi, 3, 3).cheat_unitary
        # on the support of psi the map must be the identity up to phase
        sd = schmidt_decompose(psi, 3, 3)
        m = sd.basis_a.conj().T @ u @ sd.basis_a
        assert np.isclose(abs(m[0, 0]), 1.0, atol=1e-8)
        assert np.allclose(m, m[0, 0] * np.eye(3), atol=1e-8)

    def test_nonconcealing_rejected(self, rng):
        psi0, psi1 = random_state((2, 2), rng), random_state((2, 2), rng)
        with pytest.raises(DomainError, match="optimal_cheat_unitary"):
            synthesize_cheat_unitary(psi0, psi1, 2, 2)

    def test_shape_checks(self, rng):
        psi0, psi1 = random_state(4, rng), random_state(6, rng)
        with pytest.raises(ShapeError):
            concealment(psi0, psi1, 2, 2)


class TestOptimal:
    def test_grid_oracle_qubit(self, rng):
        for _ in range(3):
            psi0, psi1 = random_state((2, 2), rng), random_state((2, 2), rng)
            rep = optimal_cheat_unitary(psi0, psi1, 2, 2)
            best = max(cheat_fidelity(u, psi0, psi1) for u in _su2_grid(14))
            assert best <= rep.cheat_fidelity + 1e-12
            assert rep.cheat_fidelity - best < 0.02

    def test_fidelity_is_trace_norm(self, rng):
        psi0, psi1 = random_state((3, 2), rng), random_state((3, 2), rng)
        rep = optimal_cheat_unitary(psi0, psi1, 3, 2)
        s = np.linalg.svd(cheat_overlap_matrix(psi0, psi1, 3, 2), compute_uv=False)
        assert np.isclose(rep.cheat_fidelity, s.sum(), atol=1e-12)
        assert 0 < rep.cheat_fidelity < 1

    def test_agrees_with_synthesis_when_concealing(self, rng):
        psi0, psi1 = random_concealing_pair(3, 3, rng, degenerate=True)
        assert np.isclose(optimal_cheat_unitary(psi0, psi1, 3, 3).cheat_fidelity, 1.0, atol=1e-10)

    def test_local_random_unitary_never_beats_optimum(self, rng):
        from qbcsim.linalg import random_unitary

        psi0, psi1 = random_state((2, 3), rng), random_state((2, 3), rng)
        f = optimal_cheat_unitary(psi0, psi1, 2, 3).cheat_fidelity
        assert all(cheat_fidelity(random_unitary(2, rng), psi0, psi1) <= f + 1e-12 for _ in range(200))


def test_concealment_zero_for_local_moves(rng):
    psi0, psi1 = random_concealing_pair(2, 3, rng)
    assert concealment(psi0, psi1, 2, 3) < 1e-12
