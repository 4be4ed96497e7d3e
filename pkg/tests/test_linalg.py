import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbcsim.errors import CapacityError, DomainError, ShapeError
from qbcsim.linalg import (
    DensityOperator,
    StateVector,
    equal_up_to_phase,
    group_degenerate,
    partial_trace,
    phase_invariant_distance,
    random_state,
    random_unitary,
    reduced_density,
    schmidt_decompose,
    spectral_decompose,
    tensor_product,
    trace_distance,
)


def _loop_partial_trace(rho, dims, keep):
    # index-by-index oracle
    n = len(dims)
    kd = [dims[i] for i in keep]
    td = [dims[i] for i in range(n) if i not in keep]
    out = np.zeros((int(np.prod(kd)),) * 2, dtype=complex)
    for ki in itertools.product(*(range(d) for d in kd)):
        for kj in itertools.product(*(range(d) for d in kd)):
            acc = 0
            for t in itertools.product(*(range(d) for d in td)):
                full_i, full_j, it, ik, jk = [], [], iter(t), iter(ki), iter(kj)
                for s in range(n):
                    if s in keep:
                        full_i.append(next(ik))
                        full_j.append(next(jk))
                    else:
                        v = next(it)
                        full_i.append(v)
                        full_j.append(v)
                acc += rho[np.ravel_multi_index(full_i, dims), np.ravel_multi_index(full_j, dims)]
            out[np.ravel_multi_index(ki, kd), np.ravel_multi_index(kj, kd)] = acc
    return out


class TestStateVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(DomainError):
            StateVector((2,), np.array([1, 1]))

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            StateVector((2, 2), np.array([1, 0, 0]))

    def test_amplitudes_read_only(self):
        psi = StateVector.basis((2, 3), (1, 2))
        assert psi.amplitudes[5] == 1
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 1

    def test_normalize(self):
        psi = StateVector.from_amplitudes([3, 4j], normalize=True)
        assert np.allclose(psi.amplitudes, [0.6, 0.8j])


class TestTensorProduct:
    def test_left_factor_is_slowest(self):
        a = StateVector.basis(2, 1)
        b = StateVector.basis(3, 0)
        ab = tensor_product(a, b)
        assert ab.dims == (2, 3)
        assert np.argmax(np.abs(ab.amplitudes)) == 3

    def test_capacity(self):
        a = StateVector.basis(8, 0)
        with pytest.raises(CapacityError):
            tensor_product(a, a, max_dim=32)

    def test_mixed_kinds_rejected(self):
        with pytest.raises(ShapeError):
            tensor_product(StateVector.basis(2, 0), DensityOperator(np.eye(2) / 2))


class TestPartialTrace:
    @pytest.mark.parametrize("dims,keep", [((2, 3), [0]), ((2, 3), [1]), ((2, 2, 3), [0, 2]), ((3, 2, 2), [1])])
    def test_matches_loop_oracle(self, rng, dims, keep):
        psi = random_state(dims, rng)
        rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
        got = partial_trace(rho, dims, keep).matrix
        assert np.allclose(got, _loop_partial_trace(rho, list(dims), keep), atol=1e-12)
        assert np.allclose(reduced_density(psi, keep).matrix, got, atol=1e-12)

    def test_product_state_factorizes(self, rng):
        a, b = random_state(2, rng), random_state(3, rng)
        red = reduced_density(tensor_product(a, b), [1]).matrix
        assert np.allclose(red, np.outer(b.amplitudes, b.amplitudes.conj()), atol=1e-12)

    def test_bad_keep(self):
        with pytest.raises(ShapeError):
            partial_trace(np.eye(4) / 4, (2, 2), [2])


class TestSchmidt:
    def test_reconstructs(self, rng):
        psi = random_state((3, 4), rng)
        sd = schmidt_decompose(psi, 3, 4)
        assert np.allclose(sd.reconstruct(), psi.amplitudes, atol=1e-12)
        assert np.isclose(sd.weights.sum(), 1.0, atol=1e-12)

    def test_weights_are_reduced_eigenvalues(self, rng):
        psi = random_state((2, 4), rng)
        sd = schmidt_decompose(psi, 2, 4)
        eig = np.sort(np.linalg.eigvalsh(reduced_density(psi, [0]).matrix))[::-1]
        assert np.allclose(sd.weights, eig, atol=1e-12)

    def test_maximally_entangled_is_one_block(self):
        bell = StateVector((2, 2), np.array([1, 0, 0, 1]) / np.sqrt(2))
        sd = schmidt_decompose(bell, 2, 2)
        assert sd.rank() == 2
        assert len(sd.blocks()) == 1

    def test_product_rank_one(self):
        sd = schmidt_decompose(StateVector.basis((3, 3), (1, 2)), 3, 3)
        assert sd.rank() == 1

    def test_bad_factorization(self, rng):
        with pytest.raises(ShapeError):
            schmidt_decompose(random_state(6, rng), 4, 2)


class TestDistances:
    def test_pure_state_closed_form(self, rng):
        for _ in range(20):
            a, b = random_state(3, rng), random_state(3, rng)
            expected = np.sqrt(1 - abs(a.inner(b)) ** 2)
            assert np.isclose(trace_distance(a.density(), b.density()), expected, atol=1e-12)

    def test_qubit_bloch_formula(self, rng):
        pauli = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
        for _ in range(20):
            r1 = rng.uniform(-1, 1, 3)
            r1 /= max(1, np.linalg.norm(r1))
            r2 = rng.uniform(-1, 1, 3)
            r2 /= max(1, np.linalg.norm(r2))
            m1 = (np.eye(2) + sum(c * p for c, p in zip(r1, pauli))) / 2
            m2 = (np.eye(2) + sum(c * p for c, p in zip(r2, pauli))) / 2
            assert np.isclose(trace_distance(DensityOperator(m1), DensityOperator(m2)),
                              np.linalg.norm(r1 - r2) / 2, atol=1e-12)

    def test_phase_invariance(self, rng):
        a = random_state(4, rng)
        b = a.amplitudes * np.exp(1.234j)
        assert phase_invariant_distance(a, b) < 1e-12
        assert equal_up_to_phase(a, b)
        assert not equal_up_to_phase(a, random_state(4, rng))


class TestDensityOperator:
    def test_rejects_non_hermitian(self):
        with pytest.raises(DomainError):
            DensityOperator(np.array([[0.5, 0.1], [0.2, 0.5]]))

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            DensityOperator(np.diag([1.5, -0.5]))

    def test_mixture(self):
        m = DensityOperator.mixture([0.5, 0.5], [np.diag([1, 0]), np.diag([0, 1])])
        assert np.allclose(m.matrix, np.eye(2) / 2)


class TestSpectral:
    def test_groups_degenerate_eigenvalues(self):
        sd = spectral_decompose(np.diag([0.25, 0.5, 0.25]))
        assert np.allclose(sd.eigenvalues, [0.5, 0.25, 0.25])
        assert [b.tolist() for b in sd.blocks] == [[0], [1, 2]]
        assert np.allclose(sd.projector(1), np.diag([1, 0, 1]))

    def test_group_degenerate(self):
        assert [g.tolist() for g in group_degenerate([1.0, 1.0 - 1e-12, 0.5])] == [[0, 1], [2]]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_random_unitary_is_unitary(seed, d):
    u = random_unitary(d, np.random.default_rng(seed))
    assert np.allclose(u.conj().T @ u, np.eye(d), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trace_distance_is_metric_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_state((2, 2), rng).density() for _ in range(3))
    dab, dbc, dac = trace_distance(a, b), trace_distance(b, c), trace_distance(a, c)
    assert 0 <= dab <= 1
    assert dac <= dab + dbc + 1e-12
    assert np.isclose(dab, trace_distance(b, a), atol=1e-14)
