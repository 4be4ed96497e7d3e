"""Dense complex linear algebra for small tensor-product Hilbert spaces.

Subsystem index 0 is always the leftmost, slowest-varying tensor factor.
Everything here is exact double-precision dense arithmetic on numpy arrays;
states and density operators are immutable once built.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import CapacityError, DomainError, ShapeError

ATOL = 1e-12
UNITARY_ATOL = 1e-10
DEGENERACY_TOL = 1e-8
MAX_TOTAL_DIM = 2**20

_LETTERS = string.ascii_letters


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-d complex array."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def is_unitary(u, atol: float = UNITARY_ATOL) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), rtol=0, atol=atol))


def is_hermitian(m, atol: float = ATOL) -> bool:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.allclose(m, m.conj().T, rtol=0, atol=atol))


def is_positive(m, atol: float = ATOL) -> bool:
    if not is_hermitian(m, atol):
        return False
    return bool(np.linalg.eigvalsh(np.asarray(m, dtype=complex)).min() >= -atol)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitude vector over an ordered list of subsystem dimensions."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise ShapeError(f"subsystem dimensions must be positive, got {dims}")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        total = int(np.prod(dims)) if dims else 1
        if amps.size != total:
            raise ShapeError(f"{amps.size} amplitudes do not match dims {dims} (product {total})")
        if not np.all(np.isfinite(amps)):
            raise DomainError("state has non-finite amplitudes")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL:
            raise DomainError(f"state is not normalized (norm {norm!r})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @classmethod
    def from_amplitudes(cls, amplitudes, dims: Sequence[int] | None = None, normalize: bool = False):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise DomainError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(tuple(dims) if dims is not None else (amps.size,), amps)

    @classmethod
    def basis(cls, dims: Sequence[int] | int, index: int | Sequence[int] = 0):
        dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
        flat = index if isinstance(index, (int, np.integer)) else np.ravel_multi_index(tuple(index), dims)
        amps = np.zeros(int(np.prod(dims)), dtype=complex)
        amps[flat] = 1.0
        return cls(dims, amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    matrix: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = as_matrix(self.matrix, "density operator")
        if m.shape[0] != m.shape[1]:
            raise ShapeError(f"density operator must be square, got {m.shape}")
        if self.check:
            if not is_hermitian(m):
                raise DomainError("density operator is not Hermitian")
            if abs(np.trace(m).real - 1.0) > ATOL:
                raise DomainError(f"density operator trace is {np.trace(m).real!r}, expected 1")
            if np.linalg.eigvalsh(m).min() < -ATOL:
                raise DomainError("density operator has a negative eigenvalue")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def mixture(cls, weights: Iterable[float], operators: Iterable[Union["DensityOperator", np.ndarray]]):
        acc = None
        for w, op in zip(weights, operators):
            m = op.matrix if isinstance(op, DensityOperator) else np.asarray(op, dtype=complex)
            acc = w * m if acc is None else acc + w * m
        if acc is None:
            raise DomainError("empty mixture")
        return cls(acc)


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``psi = sum_i coefficients[i] * basis_a[:, i] (x) basis_b[:, i]``.

    ``coefficients`` holds the square roots of the Schmidt weights, sorted
    nonincreasing; all ``min(dim_a, dim_b)`` of them are kept, zeros included.
    """

    coefficients: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return self.coefficients**2

    def rank(self, tol: float = DEGENERACY_TOL) -> int:
        return int(np.count_nonzero(self.coefficients > tol))

    def blocks(self, tol: float = DEGENERACY_TOL) -> list[np.ndarray]:
        """Index groups of (numerically) equal coefficients."""
        return group_degenerate(self.coefficients, tol)

    def reconstruct(self) -> np.ndarray:
        return np.einsum("i,ai,bi->ab", self.coefficients, self.basis_a, self.basis_b).reshape(-1)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    blocks: tuple[np.ndarray, ...]

    def projector(self, block: int) -> np.ndarray:
        v = self.eigenvectors[:, self.blocks[block]]
        return v @ v.conj().T


def group_degenerate(values: Sequence[float], tol: float = DEGENERACY_TOL) -> list[np.ndarray]:
    """Split sorted ``values`` into runs whose neighbours differ by at most ``tol``."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    groups, start = [], 0
    for i in range(1, values.size):
        if abs(values[i] - values[i - 1]) > tol:
            groups.append(np.arange(start, i))
            start = i
    groups.append(np.arange(start, values.size))
    return groups


def _check_capacity(total: int, max_dim: int) -> None:
    if total > max_dim:
        raise CapacityError(f"composite dimension {total} exceeds the maximum {max_dim}")


def tensor_product(a, b, max_dim: int = MAX_TOTAL_DIM):
    """Kronecker product with ``a`` as the slower-varying factor.

    Works on two :class:`StateVector` (dims are concatenated), two
    :class:`DensityOperator`, or two plain matrices.
    """
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        _check_capacity(a.dim * b.dim, max_dim)
        return StateVector(a.dims + b.dims, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        _check_capacity(a.dim * b.dim, max_dim)
        return DensityOperator(np.kron(a.matrix, b.matrix), check=False)
    if isinstance(a, (StateVector, DensityOperator)) or isinstance(b, (StateVector, DensityOperator)):
        raise ShapeError("tensor_product operands must be of the same kind")
    ma, mb = as_matrix(a, "left operand"), as_matrix(b, "right operand")
    _check_capacity(max(ma.shape[0] * mb.shape[0], ma.shape[1] * mb.shape[1]), max_dim)
    return np.kron(ma, mb)


def _normalize_keep(dims: Sequence[int], keep: Iterable[int]) -> list[int]:
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ShapeError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= n:
        raise ShapeError(f"keep indices {keep} out of range for {n} subsystems")
    return keep


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]) -> DensityOperator:
    """Trace out every subsystem not listed in ``keep``.

    Kept factors stay in their original relative order.
    """
    m = rho.matrix if isinstance(rho, DensityOperator) else as_matrix(rho, "rho")
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise ShapeError(f"dims {dims} do not match operator of shape {m.shape}")
    keep = _normalize_keep(dims, keep)
    n = len(dims)
    if 2 * n > len(_LETTERS):
        raise ShapeError("too many subsystems for partial_trace")
    rows = list(_LETTERS[:n])
    cols = [(_LETTERS[n + i] if i in keep else rows[i]) for i in range(n)]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, m.reshape(dims + dims))
    d = int(np.prod([dims[i] for i in keep]))
    return DensityOperator(reduced.reshape(d, d), check=not isinstance(rho, np.ndarray))


def reduced_density(psi: StateVector, keep: Iterable[int]) -> DensityOperator:
    """Reduced operator of a pure state without forming the full projector."""
    keep = _normalize_keep(psi.dims, keep)
    rest = [i for i in range(len(psi.dims)) if i not in keep]
    t = np.transpose(psi.tensor(), keep + rest)
    d = int(np.prod([psi.dims[i] for i in keep]))
    mat = t.reshape(d, -1)
    return DensityOperator(mat @ mat.conj().T)


def schmidt_decompose(psi: StateVector, dim_a: int, dim_b: int) -> SchmidtDecomposition:
    """Biorthogonal decomposition of ``psi`` across an A|B cut, via SVD."""
    if dim_a * dim_b != psi.dim:
        raise ShapeError(f"{dim_a}x{dim_b} does not factor a state of dimension {psi.dim}")
    norm = np.linalg.norm(psi.amplitudes)
    if abs(norm - 1.0) > ATOL:
        raise DomainError(f"state is not normalized (norm {norm!r})")
    u, s, vh = np.linalg.svd(psi.amplitudes.reshape(dim_a, dim_b), full_matrices=False)
    coefficients = np.array(s, dtype=float)
    coefficients.setflags(write=False)
    return SchmidtDecomposition(coefficients, _readonly(u), _readonly(vh.T))


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """``(1/2) * sum |eig(rho - sigma)|``, clipped to [0, 1]."""
    a = rho.matrix if isinstance(rho, DensityOperator) else as_matrix(rho)
    b = sigma.matrix if isinstance(sigma, DensityOperator) else as_matrix(sigma)
    if a.shape != b.shape:
        raise ShapeError(f"cannot compare operators of shapes {a.shape} and {b.shape}")
    diff = a - b
    diff = (diff + diff.conj().T) / 2
    return float(min(1.0, max(0.0, 0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())))


def spectral_decompose(rho, tol: float = DEGENERACY_TOL) -> SpectralDecomposition:
    """Eigenvalues sorted nonincreasing, with degenerate eigenspaces grouped."""
    m = rho.matrix if isinstance(rho, DensityOperator) else as_matrix(rho)
    if not is_hermitian(m):
        raise DomainError("spectral_decompose needs a Hermitian operator")
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    return SpectralDecomposition(vals, vecs, tuple(group_degenerate(vals, tol)))


def phase_invariant_distance(a, b) -> float:
    """``min_phi || e^{i phi} a - b ||`` for two vectors."""
    va = a.amplitudes if isinstance(a, StateVector) else np.asarray(a, dtype=complex)
    vb = b.amplitudes if isinstance(b, StateVector) else np.asarray(b, dtype=complex)
    if va.shape != vb.shape:
        raise ShapeError(f"vectors of shapes {va.shape} and {vb.shape}")
    ov = np.vdot(va, vb)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(phase * va - vb))


def equal_up_to_phase(a, b, eps: float = 1e-10) -> bool:
    va = a.amplitudes if isinstance(a, StateVector) else np.asarray(a, dtype=complex)
    vb = b.amplitudes if isinstance(b, StateVector) else np.asarray(b, dtype=complex)
    return abs(np.vdot(va, vb)) >= 1 - eps


def apply_local(amplitudes: np.ndarray, dims: Sequence[int], op: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``op`` to the listed subsystems (in that order), identity elsewhere."""
    dims = list(dims)
    targets = list(targets)
    tdims = [dims[t] for t in targets]
    k = len(targets)
    t = np.asarray(amplitudes, dtype=complex).reshape(dims)
    t = np.moveaxis(t, targets, list(range(k)))
    front = t.shape
    t = op @ t.reshape(int(np.prod(tdims)), -1)
    t = np.moveaxis(t.reshape(front), list(range(k)), targets)
    return t.reshape(-1)


def embed_operator(op: np.ndarray, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Full matrix of ``op`` acting on ``targets`` within the space ``dims``."""
    total = int(np.prod(dims))
    eye = np.eye(total, dtype=complex)
    cols = [apply_local(eye[:, j], dims, op, targets) for j in range(total)]
    return np.stack(cols, axis=1)


def random_state(dims: Sequence[int] | int, rng: np.random.Generator) -> StateVector:
    dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
    d = int(np.prod(dims))
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return StateVector(dims, v / np.linalg.norm(v))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary (QR of a Ginibre matrix with phase fix)."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
