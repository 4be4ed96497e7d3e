"""Quantum registers with party ownership, measurement, and purification.

The three purification constructions replace a party's classical steps by
unitaries on an enlarged space:

* :func:`purify_measurement` entangles the measured subsystem with a pointer
  ancilla instead of collapsing it;
* :func:`purify_choice` replaces a random choice between operations by a die
  ancilla in superposition controlling all branches at once;
* :func:`purify_conditional` replaces an operation chosen from earlier
  (now unmeasured) outcomes by a block-diagonal controlled unitary.

Ancillas are appended at the right end of the register and recorded in the
register ledger so later steps can address them by label.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, ShapeError, UnknownLabelError
from .linalg import (
    ATOL,
    UNITARY_ATOL,
    DensityOperator,
    StateVector,
    apply_local,
    as_matrix,
    embed_operator,
    is_unitary,
    reduced_density,
)


class Party(str, enum.Enum):
    ALICE = "A"
    BOB = "B"
    CHANNEL = "C"

    @classmethod
    def parse(cls, value) -> "Party":
        if isinstance(value, Party):
            return value
        key = str(value).strip().lower()
        for p in cls:
            if key in (p.value.lower(), p.name.lower()):
                return p
        raise UnknownLabelError(f"unknown party {value!r}")

    def other(self) -> "Party":
        if self is Party.ALICE:
            return Party.BOB
        if self is Party.BOB:
            return Party.ALICE
        raise DomainError("the channel has no opposite party")


@dataclass(frozen=True)
class Subsystem:
    label: str
    dim: int
    owner: Party


@dataclass(frozen=True)
class Ancilla:
    """Ledger entry for a purification ancilla.

    ``outcomes`` names the computational basis states in order: the recorded
    outcome labels for a pointer, the branch labels for a die.
    """

    label: str
    kind: str
    outcomes: tuple[str, ...]
    source: str = ""


@dataclass(frozen=True, eq=False)
class Register:
    state: StateVector
    subsystems: tuple[Subsystem, ...]
    ledger: tuple[Ancilla, ...] = ()

    def __post_init__(self):
        subs = tuple(self.subsystems)
        if tuple(s.dim for s in subs) != self.state.dims:
            raise ShapeError(f"subsystem dims {[s.dim for s in subs]} do not match state dims {self.state.dims}")
        labels = [s.label for s in subs]
        if len(set(labels)) != len(labels):
            raise UnknownLabelError(f"duplicate subsystem labels in {labels}")
        object.__setattr__(self, "subsystems", subs)
        object.__setattr__(self, "ledger", tuple(self.ledger))

    @classmethod
    def empty(cls) -> "Register":
        return cls(StateVector((), np.ones(1)), ())

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.state.dims

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def index(self, label: str) -> int:
        for i, s in enumerate(self.subsystems):
            if s.label == label:
                return i
        raise UnknownLabelError(f"no subsystem labelled {label!r}")

    def indices(self, labels: Sequence[str] | str) -> list[int]:
        if isinstance(labels, str):
            labels = [labels]
        idx = [self.index(lab) for lab in labels]
        if len(set(idx)) != len(idx):
            raise UnknownLabelError(f"repeated target in {list(labels)}")
        return idx

    def subsystem(self, label: str) -> Subsystem:
        return self.subsystems[self.index(label)]

    def owner(self, label: str) -> Party:
        return self.subsystem(label).owner

    def owned_by(self, party: Party) -> list[str]:
        party = Party.parse(party)
        return [s.label for s in self.subsystems if s.owner is party]

    def ancilla(self, label: str) -> Ancilla:
        for a in self.ledger:
            if a.label == label:
                return a
        raise UnknownLabelError(f"{label!r} is not a purification ancilla")

    def with_amplitudes(self, amplitudes: np.ndarray) -> "Register":
        return replace(self, state=StateVector(self.state.dims, amplitudes))

    def add(self, label: str, state, owner: Party, ancilla: Ancilla | None = None) -> "Register":
        """Append a fresh subsystem in ``state`` at the right end."""
        if label in self.labels:
            raise UnknownLabelError(f"label {label!r} already in use")
        if not isinstance(state, StateVector):
            state = StateVector.from_amplitudes(state)
        if len(state.dims) != 1:
            raise ShapeError("add() takes a single-subsystem state; call it once per factor")
        sub = Subsystem(label, state.dim, Party.parse(owner))
        new_state = StateVector(self.state.dims + state.dims, np.kron(self.state.amplitudes, state.amplitudes))
        ledger = self.ledger + ((ancilla,) if ancilla is not None else ())
        return Register(new_state, self.subsystems + (sub,), ledger)

    def add_joint(self, labels: Sequence[str], dims: Sequence[int], state, owner: Party) -> "Register":
        """Append several subsystems prepared jointly in ``state``."""
        amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
        if int(np.prod(dims)) != amps.size:
            raise ShapeError(f"state of dimension {amps.size} does not fit dims {list(dims)}")
        for lab in labels:
            if lab in self.labels:
                raise UnknownLabelError(f"label {lab!r} already in use")
        owner = Party.parse(owner)
        subs = tuple(Subsystem(lab, int(d), owner) for lab, d in zip(labels, dims))
        new_state = StateVector(self.state.dims + tuple(int(d) for d in dims), np.kron(self.state.amplitudes, amps))
        return Register(new_state, self.subsystems + subs, self.ledger)

    def transfer(self, label: str, owner: Party) -> "Register":
        i = self.index(label)
        subs = list(self.subsystems)
        subs[i] = replace(subs[i], owner=Party.parse(owner))
        return replace(self, subsystems=tuple(subs))

    def permuted(self, labels: Sequence[str]) -> "Register":
        """Same state with subsystems reordered to ``labels``."""
        order = self.indices(labels)
        if len(order) != len(self.subsystems):
            raise ShapeError("permuted() needs every label exactly once")
        amps = np.transpose(self.state.tensor(), order).reshape(-1)
        subs = tuple(self.subsystems[i] for i in order)
        return Register(StateVector(tuple(s.dim for s in subs), amps), subs, self.ledger)

    def drop(self, label: str, atol: float = 1e-10) -> "Register":
        """Remove a subsystem that is in a product state with the rest."""
        i = self.index(label)
        rest = [j for j in range(len(self.subsystems)) if j != i]
        mat = np.moveaxis(self.state.tensor(), i, 0).reshape(self.subsystems[i].dim, -1)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        if s.size > 1 and s[1] > atol:
            raise DomainError(f"subsystem {label!r} is entangled with the rest (second Schmidt value {s[1]:.3g})")
        # phase fixed so that dropping a basis state |k> returns the k-th slice exactly
        k0 = int(np.argmax(np.abs(u[:, 0])))
        vec = vh[0] * (u[k0, 0] / abs(u[k0, 0]))
        vec = vec / np.linalg.norm(vec)
        subs = tuple(self.subsystems[j] for j in rest)
        ledger = tuple(a for a in self.ledger if a.label != label)
        return Register(StateVector(tuple(s_.dim for s_ in subs), vec), subs, ledger)


@dataclass(frozen=True, eq=False)
class ObservableSpec:
    """Observable given by an orthonormal eigenbasis (columns) and outcome labels.

    Repeated labels denote a degenerate eigenvalue; measurement then uses the
    projector onto the whole eigenspace.
    """

    label: str
    eigenbasis: np.ndarray
    eigenvalue_labels: tuple[str, ...]
    _outcomes: tuple[str, ...] = field(init=False, repr=False)

    def __post_init__(self):
        basis = as_matrix(self.eigenbasis, f"eigenbasis of {self.label}")
        if basis.shape[0] != basis.shape[1]:
            raise ShapeError(f"eigenbasis of {self.label} must be square")
        if not np.allclose(basis.conj().T @ basis, np.eye(basis.shape[0]), rtol=0, atol=ATOL):
            raise DomainError(f"eigenbasis of {self.label} is not orthonormal")
        labels = tuple(str(x) for x in self.eigenvalue_labels)
        if len(labels) != basis.shape[1]:
            raise ShapeError(f"{self.label}: {len(labels)} labels for {basis.shape[1]} eigenvectors")
        basis = basis.copy()
        basis.setflags(write=False)
        object.__setattr__(self, "eigenbasis", basis)
        object.__setattr__(self, "eigenvalue_labels", labels)
        object.__setattr__(self, "_outcomes", tuple(dict.fromkeys(labels)))

    @property
    def dim(self) -> int:
        return self.eigenbasis.shape[0]

    @property
    def outcomes(self) -> tuple[str, ...]:
        """Distinct outcome labels in first-appearance order."""
        return self._outcomes

    def projector(self, outcome: str) -> np.ndarray:
        cols = [i for i, lab in enumerate(self.eigenvalue_labels) if lab == outcome]
        if not cols:
            raise UnknownLabelError(f"{self.label} has no outcome {outcome!r}")
        v = self.eigenbasis[:, cols]
        return v @ v.conj().T

    def projectors(self) -> list[tuple[str, np.ndarray]]:
        return [(o, self.projector(o)) for o in self.outcomes]

    def eigenvector(self, outcome: str) -> np.ndarray:
        """The eigenvector for a nondegenerate outcome."""
        cols = [i for i, lab in enumerate(self.eigenvalue_labels) if lab == outcome]
        if len(cols) != 1:
            raise DomainError(f"outcome {outcome!r} of {self.label} is not a single eigenvector")
        return self.eigenbasis[:, cols[0]].copy()


@dataclass(frozen=True)
class MeasurementRecord:
    subsystem: str
    observable: str
    outcome: str
    probability: float


def _target_list(target) -> list[str]:
    return [target] if isinstance(target, str) else list(target)


def _check_unitary(u, dim: int) -> np.ndarray:
    u = as_matrix(u, "unitary")
    if u.shape != (dim, dim):
        raise ShapeError(f"unitary of shape {u.shape} does not act on dimension {dim}")
    if not is_unitary(u, UNITARY_ATOL):
        raise DomainError("operator is not unitary")
    return u


def apply_unitary(reg: Register, u, targets: Sequence[str] | str) -> Register:
    """Apply ``u`` to ``targets`` (in listed order), identity elsewhere."""
    idx = reg.indices(_target_list(targets))
    dim = int(np.prod([reg.dims[i] for i in idx]))
    u = _check_unitary(u, dim)
    return reg.with_amplitudes(apply_local(reg.state.amplitudes, reg.dims, u, idx))


def apply_operator(reg: Register, op, targets: Sequence[str] | str) -> np.ndarray:
    """Unnormalized amplitudes of ``op`` applied to ``targets``; ``op`` need not be unitary."""
    idx = reg.indices(_target_list(targets))
    return apply_local(reg.state.amplitudes, reg.dims, np.asarray(op, dtype=complex), idx)


def _check_obs(reg: Register, obs: ObservableSpec, targets: list[str]) -> list[int]:
    idx = reg.indices(targets)
    dim = int(np.prod([reg.dims[i] for i in idx]))
    if dim != obs.dim:
        raise ShapeError(f"observable {obs.label} has dimension {obs.dim}, targets {targets} have {dim}")
    return idx


def outcome_probabilities(reg: Register, obs: ObservableSpec, target: Sequence[str] | str) -> dict[str, float]:
    """Born-rule probability of every outcome of ``obs`` on ``target``."""
    targets = _target_list(target)
    idx = _check_obs(reg, obs, targets)
    probs = {}
    for outcome, proj in obs.projectors():
        v = apply_local(reg.state.amplitudes, reg.dims, proj, idx)
        probs[outcome] = float(np.vdot(v, v).real)
    return probs


def project(reg: Register, projector, targets: Sequence[str] | str) -> tuple[Register | None, float]:
    """Post-select on ``projector``: the renormalized state and its probability.

    Returns ``(None, 0.0)`` when the branch has zero probability.
    """
    v = apply_operator(reg, projector, targets)
    p = float(np.vdot(v, v).real)
    if p <= 0.0:
        return None, 0.0
    return reg.with_amplitudes(v / np.linalg.norm(v)), p


def measure_projective(
    reg: Register, obs: ObservableSpec, target: Sequence[str] | str, rng: np.random.Generator
) -> tuple[Register, MeasurementRecord]:
    """Sample an outcome of ``obs`` by the Born rule and collapse the state."""
    targets = _target_list(target)
    idx = _check_obs(reg, obs, targets)
    branches = []
    for outcome, proj in obs.projectors():
        v = apply_local(reg.state.amplitudes, reg.dims, proj, idx)
        branches.append((outcome, v, float(np.vdot(v, v).real)))
    probs = np.array([b[2] for b in branches])
    cum = np.cumsum(probs / probs.sum())
    k = int(np.searchsorted(cum, rng.random(), side="right"))
    k = min(k, len(branches) - 1)
    while branches[k][2] <= 0.0:
        k -= 1
    outcome, v, p = branches[k]
    record = MeasurementRecord(",".join(targets), obs.label, outcome, min(1.0, p))
    return reg.with_amplitudes(v / np.linalg.norm(v)), record


def shift_matrix(dim: int, k: int) -> np.ndarray:
    """``|j> -> |j + k mod dim>``."""
    return np.roll(np.eye(dim, dtype=complex), k, axis=0)


def measurement_unitary(obs: ObservableSpec) -> np.ndarray:
    """Controlled-copy unitary on (measured system) (x) (pointer).

    Outcome ``k`` (k-th distinct label) moves the pointer from ``|p_0>`` to
    ``|p_k>``; the pointer has one basis state per distinct outcome and
    ``|p_0>`` coincides with the record of the first outcome.
    """
    m = len(obs.outcomes)
    u = np.zeros((obs.dim * m, obs.dim * m), dtype=complex)
    for k, (_, proj) in enumerate(obs.projectors()):
        u += np.kron(proj, shift_matrix(m, k))
    return u


def purify_measurement(
    reg: Register,
    obs: ObservableSpec,
    target: Sequence[str] | str,
    pointer_label: str,
    owner: Party | None = None,
) -> Register:
    """Hold a measurement of ``obs`` at the quantum level with a pointer ancilla."""
    targets = _target_list(target)
    _check_obs(reg, obs, targets)
    owner = reg.owner(targets[0]) if owner is None else Party.parse(owner)
    m = len(obs.outcomes)
    entry = Ancilla(pointer_label, "pointer", obs.outcomes, obs.label)
    reg = reg.add(pointer_label, StateVector.basis(m, 0), owner, entry)
    return apply_unitary(reg, measurement_unitary(obs), targets + [pointer_label])


def purify_choice(
    reg: Register,
    branches: Sequence[np.ndarray],
    weights: Sequence[float],
    die_label: str,
    targets: Sequence[str] | str,
    owner: Party | None = None,
    branch_labels: Sequence[str] | None = None,
) -> Register:
    """Replace a random choice among ``branches`` with a quantum die.

    The die starts in ``sum_k sqrt(w_k) |d_k>`` and controls
    ``V = sum_k |d_k><d_k| (x) U_k`` on ``targets``.
    """
    targets = _target_list(targets)
    weights = np.asarray(weights, dtype=float)
    if len(branches) == 0 or len(branches) != weights.size:
        raise DomainError("need one weight per branch and at least one branch")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > ATOL:
        raise DomainError(f"branch weights must be nonnegative and sum to 1, got {weights.tolist()}")
    idx = reg.indices(targets)
    dim = int(np.prod([reg.dims[i] for i in idx]))
    mats = [_check_unitary(b, dim) for b in branches]
    owner = reg.owner(targets[0]) if owner is None else Party.parse(owner)
    labels = tuple(branch_labels) if branch_labels is not None else tuple(f"d{k}" for k in range(len(mats)))
    entry = Ancilla(die_label, "die", labels, "choice")
    reg = reg.add(die_label, StateVector((len(mats),), np.sqrt(weights)), owner, entry)
    return purify_conditional(reg, [die_label], {(k,): u for k, u in enumerate(mats)}, targets)


def _case_key(key, n_controls: int) -> tuple:
    if isinstance(key, (int, np.integer, str)):
        key = (key,)
    key = tuple(key)
    if len(key) != n_controls:
        raise DomainError(f"case key {key} does not name all {n_controls} controls")
    return key


def purify_conditional(
    reg: Register,
    control_labels: Sequence[str],
    case_table: Mapping,
    targets: Sequence[str] | str,
) -> Register:
    """Apply ``U_C = sum_s |s><s| (x) U_s`` with ``s`` ranging over control basis strings.

    Case keys are tuples with one entry per control, each either a basis index
    or (for ledger ancillas) an outcome label. Every basis string must have a
    case; there is no implicit identity.
    """
    controls = list(control_labels)
    targets = _target_list(targets)
    cidx = reg.indices(controls)
    tidx = reg.indices(targets)
    if set(cidx) & set(tidx):
        raise DomainError("controls and targets overlap")
    cdims = [reg.dims[i] for i in cidx]
    tdim = int(np.prod([reg.dims[i] for i in tidx]))
    table = {}
    for key, u in case_table.items():
        key = _case_key(key, len(controls))
        resolved = []
        for lab, entry, d in zip(controls, key, cdims):
            if isinstance(entry, str):
                try:
                    entry = reg.ancilla(lab).outcomes.index(entry)
                except ValueError:
                    raise UnknownLabelError(f"{lab!r} has no outcome {entry!r}") from None
            if not 0 <= int(entry) < d:
                raise DomainError(f"case index {entry} out of range for control {lab!r}")
            resolved.append(int(entry))
        table[tuple(resolved)] = _check_unitary(u, tdim)
    missing = [s for s in itertools.product(*(range(d) for d in cdims)) if s not in table]
    if missing:
        raise DomainError(f"case table has no entry for control strings {missing}")
    amps = np.moveaxis(reg.state.tensor(), cidx + tidx, list(range(len(cidx) + len(tidx))))
    shape = amps.shape
    block = amps.reshape(int(np.prod(cdims)), tdim, -1).copy()
    for flat, s in enumerate(itertools.product(*(range(d) for d in cdims))):
        block[flat] = table[s] @ block[flat]
    out = np.moveaxis(block.reshape(shape), list(range(len(cidx) + len(tidx))), cidx + tidx)
    return reg.with_amplitudes(out.reshape(-1))


def conditional_unitary(control_dims: Sequence[int], case_table: Mapping, target_dim: int) -> np.ndarray:
    """Explicit block-diagonal matrix of a conditional operation (for inspection and tests)."""
    strings = list(itertools.product(*(range(d) for d in control_dims)))
    blocks = [np.asarray(case_table[_case_key(s, len(control_dims))], dtype=complex) for s in strings]
    out = np.zeros((len(strings) * target_dim,) * 2, dtype=complex)
    for k, b in enumerate(blocks):
        out[k * target_dim:(k + 1) * target_dim, k * target_dim:(k + 1) * target_dim] = b
    return out


def reduced_on(reg: Register, labels: Sequence[str]) -> DensityOperator:
    return reduced_density(reg.state, reg.indices(labels))


def reduced_state(reg: Register, owner: Party) -> DensityOperator:
    """Partial trace over every subsystem not held by ``owner``."""
    owner = Party.parse(owner)
    keep = [i for i, s in enumerate(reg.subsystems) if s.owner is owner]
    if not keep:
        raise DomainError(f"party {owner.name} holds no subsystem")
    return reduced_density(reg.state, keep)


def embed(op, reg: Register, op_targets: Sequence[str], all_targets: Sequence[str]) -> np.ndarray:
    """Matrix of ``op`` on ``op_targets`` as an operator on ``all_targets``."""
    all_targets = list(all_targets)
    dims = [reg.subsystem(t).dim for t in all_targets]
    pos = [all_targets.index(t) for t in op_targets]
    return embed_operator(np.asarray(op, dtype=complex), dims, pos)
