"""Concealing implies not binding: constructing Alice's cheating unitary.

Given the two commitment states ``|0>`` and ``|1>`` on ``H_A (x) H_B``, Bob's
information is the pair of reduced operators ``Tr_A |b><b|``. When they are
equal, the Schmidt decompositions of both states share coefficients and (up to
a unitary mixing within degenerate blocks) the B-side vectors, so a unitary on
``H_A`` alone maps one commitment to the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .linalg import (
    DEGENERACY_TOL,
    StateVector,
    is_unitary,
    phase_invariant_distance,
    random_unitary,
    reduced_density,
    schmidt_decompose,
    trace_distance,
)

CONCEALMENT_THRESHOLD = 1e-8
BINDING_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class CheatReport:
    concealment: float
    cheat_unitary: np.ndarray
    cheat_fidelity: float
    degenerate_blocks: int
    method: str = "schmidt"

    def __post_init__(self):
        if not is_unitary(self.cheat_unitary, 1e-10):
            raise DomainError("cheat unitary is not unitary")


def _check_pair(psi0: StateVector, psi1: StateVector, dim_a: int, dim_b: int) -> None:
    if psi0.dim != psi1.dim:
        raise ShapeError(f"states have dimensions {psi0.dim} and {psi1.dim}")
    if dim_a * dim_b != psi0.dim:
        raise ShapeError(f"{dim_a}x{dim_b} does not factor dimension {psi0.dim}")


def _flat(psi: StateVector, dim_a: int, dim_b: int) -> StateVector:
    return StateVector((dim_a, dim_b), psi.amplitudes)


def concealment(psi0: StateVector, psi1: StateVector, dim_a: int, dim_b: int) -> float:
    """Trace distance between Bob's reduced operators for the two commitments."""
    _check_pair(psi0, psi1, dim_a, dim_b)
    w0 = reduced_density(_flat(psi0, dim_a, dim_b), [1])
    w1 = reduced_density(_flat(psi1, dim_a, dim_b), [1])
    return trace_distance(w0, w1)


def _complete_basis(columns: np.ndarray, dim: int, tol: float = 1e-8) -> np.ndarray:
    """Extend orthonormal ``columns`` to a unitary by Gram-Schmidt over the standard basis."""
    cols = [columns[:, k] for k in range(columns.shape[1])]
    for j in range(dim):
        if len(cols) == dim:
            break
        v = np.zeros(dim, dtype=complex)
        v[j] = 1.0
        for _ in range(2):
            for c in cols:
                v = v - np.vdot(c, v) * c
        n = np.linalg.norm(v)
        if n > tol:
            cols.append(v / n)
    return np.column_stack(cols)


def _polar_unitary(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def _apply_local_a(u: np.ndarray, psi: StateVector, dim_a: int, dim_b: int) -> np.ndarray:
    return (u @ psi.amplitudes.reshape(dim_a, dim_b)).reshape(-1)


def _fix_phase(u: np.ndarray, psi0: StateVector, psi1: StateVector, dim_a: int, dim_b: int):
    ov = np.vdot(psi1.amplitudes, _apply_local_a(u, psi0, dim_a, dim_b))
    if abs(ov) > 0:
        u = u * (np.conj(ov) / abs(ov))
    return u, float(min(1.0, abs(ov)))


def synthesize_cheat_unitary(
    psi0: StateVector,
    psi1: StateVector,
    dim_a: int,
    dim_b: int,
    threshold: float = CONCEALMENT_THRESHOLD,
    tol: float = DEGENERACY_TOL,
) -> CheatReport:
    """Unitary on ``H_A`` mapping ``psi0`` to ``psi1`` for a concealing pair.

    Schmidt vectors of ``psi0`` are mapped onto those of ``psi1``. Within a
    degenerate block the target vectors are first rotated by the unitary
    (polar) factor of the B-side overlap matrix ``<b_k|b'_l>``, so both states
    are expanded against the same B-side vectors. Off the support of ``psi0``
    the map is completed by Gram-Schmidt over the standard basis.

    Raises DomainError when the pair is not concealing within ``threshold``;
    use :func:`optimal_cheat_unitary` for that case.
    """
    conceal = concealment(psi0, psi1, dim_a, dim_b)
    if conceal > threshold:
        raise DomainError(
            f"states are not concealing (trace distance {conceal:.3g} > {threshold:g}); "
            "use optimal_cheat_unitary for the nonideal case"
        )
    s0 = schmidt_decompose(_flat(psi0, dim_a, dim_b), dim_a, dim_b)
    s1 = schmidt_decompose(_flat(psi1, dim_a, dim_b), dim_a, dim_b)
    src, dst, degenerate = [], [], 0
    for block in s0.blocks(tol):
        if s0.coefficients[block[0]] <= tol:
            continue
        if block.size > 1:
            degenerate += 1
        overlap = s0.basis_b[:, block].conj().T @ s1.basis_b[:, block]
        w = _polar_unitary(overlap)
        src.append(s0.basis_a[:, block])
        dst.append(s1.basis_a[:, block] @ w.T)
    src_full = _complete_basis(np.hstack(src), dim_a)
    dst_full = _complete_basis(np.hstack(dst), dim_a)
    u, fid = _fix_phase(dst_full @ src_full.conj().T, psi0, psi1, dim_a, dim_b)
    return CheatReport(conceal, u, fid, degenerate, "schmidt")


def cheat_overlap_matrix(psi0: StateVector, psi1: StateVector, dim_a: int, dim_b: int) -> np.ndarray:
    """``X`` with ``<1|(U (x) I)|0> = Tr(U X)``, i.e. ``Tr_B |0><1|``."""
    m0 = psi0.amplitudes.reshape(dim_a, dim_b)
    m1 = psi1.amplitudes.reshape(dim_a, dim_b)
    return m0 @ m1.conj().T


def optimal_cheat_unitary(psi0: StateVector, psi1: StateVector, dim_a: int, dim_b: int) -> CheatReport:
    """Unitary on ``H_A`` maximizing ``|<1|(U (x) I)|0>|`` for any pair.

    With ``X = W S V^dagger`` the maximum of ``|Tr(U X)|`` is the sum of the
    singular values, attained at ``U = V W^dagger``.
    """
    _check_pair(psi0, psi1, dim_a, dim_b)
    conceal = concealment(psi0, psi1, dim_a, dim_b)
    w, s, vh = np.linalg.svd(cheat_overlap_matrix(psi0, psi1, dim_a, dim_b))
    u, fid = _fix_phase(vh.conj().T @ w.conj().T, psi0, psi1, dim_a, dim_b)
    degenerate = sum(
        1
        for b in schmidt_decompose(_flat(psi0, dim_a, dim_b), dim_a, dim_b).blocks()
        if b.size > 1
    )
    return CheatReport(conceal, u, fid, degenerate, "polar")


def cheat_fidelity(u: np.ndarray, psi0: StateVector, psi1: StateVector) -> float:
    """``|<1|(U (x) I)|0>|`` for a unitary on the first factor."""
    dim_a = u.shape[0]
    dim_b = psi0.dim // dim_a
    return float(abs(np.vdot(psi1.amplitudes, _apply_local_a(u, psi0, dim_a, dim_b))))


def verify_binding_failure(
    report: CheatReport, psi0: StateVector, psi1: StateVector, tol: float = BINDING_TOL
) -> tuple[bool, float]:
    """Recompute ``(U (x) I)|0>``; True when it equals ``|1>`` up to phase within ``tol``."""
    u = np.asarray(report.cheat_unitary)
    dim_a = u.shape[0]
    if psi0.dim % dim_a or psi0.dim != psi1.dim:
        raise ShapeError("report does not match the state dimensions")
    moved = _apply_local_a(u, psi0, dim_a, psi0.dim // dim_a)
    residual = phase_invariant_distance(moved, psi1.amplitudes)
    return residual <= tol, residual


def random_concealing_pair(
    dim_a: int, dim_b: int, rng: np.random.Generator, degenerate: bool = False
) -> tuple[StateVector, StateVector]:
    """Two states with identical reduced operators on ``H_B``.

    ``psi1`` is ``psi0`` moved by a random unitary on ``H_A``. With
    ``degenerate=True`` the Schmidt spectrum of ``psi0`` has a repeated value.
    """
    r = min(dim_a, dim_b)
    coeffs = rng.uniform(0.1, 1.0, r)
    if degenerate and r >= 2:
        k = int(rng.integers(2, r + 1))
        coeffs[:k] = coeffs[0]
    coeffs /= np.linalg.norm(coeffs)
    ua, ub = random_unitary(dim_a, rng), random_unitary(dim_b, rng)
    m = ua[:, :r] @ np.diag(coeffs) @ ub[:, :r].T
    psi0 = StateVector((dim_a, dim_b), m.reshape(-1))
    moved = (random_unitary(dim_a, rng) @ m).reshape(-1)
    return psi0, StateVector((dim_a, dim_b), moved)
