"""Pre- and post-selected probabilities and the three-spin-component fixture.

For a system prepared in ``pre``, subjected to an intermediate measurement
with eigenprojectors ``P_i`` and finally found in ``post``::

    prob(k) = |<pre|P_k|post>|^2 / sum_i |<pre|P_i|post>|^2

The fixture prepares a Bell pair on (ancilla, channel), measures one of
sigma_x, sigma_y, sigma_z on the channel, and post-selects on an eigenstate
``r_k`` of a two-particle observable R. For every ``r_k`` all three spin
outcomes are then certain, although the spin components do not commute.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .engine import ObservableSpec
from .errors import ConsistencyError, DomainError, ShapeError, UnknownLabelError
from .linalg import ATOL, StateVector, embed_operator
from .spin import BELL, DOWN, DOWN_X, DOWN_Z, UP, UP_X, UP_Z, spin_observable, y_eigenstates

SPIN_AXES = ("sx", "sy", "sz")
R_LABELS = ("r1", "r2", "r3", "r4")

# Expected outcome of each spin measurement given the post-selected R eigenstate.
REFERENCE_TABLE: dict[str, dict[str, str]] = {
    "r1": {"sx": UP, "sy": UP, "sz": UP},
    "r2": {"sx": DOWN, "sy": DOWN, "sz": UP},
    "r3": {"sx": UP, "sy": DOWN, "sz": DOWN},
    "r4": {"sx": DOWN, "sy": UP, "sz": DOWN},
}

DETERMINISTIC_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PrePostContext:
    pre: StateVector
    post: StateVector
    projectors: tuple[tuple[str, np.ndarray], ...]

    def __post_init__(self):
        if self.pre.dim != self.post.dim:
            raise ShapeError(f"pre has dimension {self.pre.dim}, post {self.post.dim}")
        projs = tuple((str(lab), np.asarray(p, dtype=complex)) for lab, p in self.projectors)
        d = self.pre.dim
        total = np.zeros((d, d), dtype=complex)
        for lab, p in projs:
            if p.shape != (d, d):
                raise ShapeError(f"projector {lab!r} has shape {p.shape}, expected {(d, d)}")
            if not np.allclose(p, p.conj().T, rtol=0, atol=ATOL) or not np.allclose(p @ p, p, rtol=0, atol=ATOL):
                raise DomainError(f"{lab!r} is not an orthogonal projector")
            total += p
        if not np.allclose(total, np.eye(d), rtol=0, atol=ATOL):
            raise DomainError("projectors do not sum to the identity")
        object.__setattr__(self, "projectors", projs)

    @classmethod
    def for_observable(cls, pre: StateVector, post: StateVector, obs: ObservableSpec, targets: Sequence[int]):
        """Context for measuring ``obs`` on subsystems ``targets`` of ``pre.dims``."""
        projs = tuple((o, embed_operator(p, pre.dims, list(targets))) for o, p in obs.projectors())
        return cls(pre, post, projs)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.projectors)

    def swapped(self) -> "PrePostContext":
        return PrePostContext(self.post, self.pre, self.projectors)


def _amplitudes(ctx: PrePostContext) -> np.ndarray:
    return np.array([abs(np.vdot(ctx.pre.amplitudes, p @ ctx.post.amplitudes)) ** 2 for _, p in ctx.projectors])


def abl_distribution(ctx: PrePostContext) -> dict[str, float]:
    weights = _amplitudes(ctx)
    total = weights.sum()
    if total <= 0:
        raise DomainError("post-selection has zero probability under every outcome")
    return {lab: float(w / total) for lab, w in zip(ctx.labels, weights)}


def abl_probability(ctx: PrePostContext, outcome: str) -> float:
    dist = abl_distribution(ctx)
    if outcome not in dist:
        raise UnknownLabelError(f"no outcome {outcome!r} in context (have {list(dist)})")
    return dist[outcome]


def abl_time_symmetry_check(ctx: PrePostContext, atol: float = ATOL) -> bool:
    """Swapping pre and post leaves every outcome probability unchanged."""
    fwd, back = abl_distribution(ctx), abl_distribution(ctx.swapped())
    return all(abs(fwd[k] - back[k]) <= atol for k in fwd)


def r_eigenstates() -> tuple[np.ndarray, ...]:
    s = 1 / np.sqrt(2)
    e = np.exp(1j * np.pi / 4)
    uu, ud = np.kron(UP_Z, UP_Z), np.kron(UP_Z, DOWN_Z)
    du, dd = np.kron(DOWN_Z, UP_Z), np.kron(DOWN_Z, DOWN_Z)
    mix_a = 0.5 * (ud * e + du * np.conj(e))
    mix_b = 0.5 * (ud * np.conj(e) + du * e)
    return (s * uu + mix_a, s * uu - mix_a, s * dd + mix_b, s * dd - mix_b)


@dataclass(frozen=True, eq=False)
class VaaFixture:
    bell: StateVector
    r_states: tuple[StateVector, ...]
    spin_observables: dict[str, ObservableSpec]
    y_sign: int = 1
    r_observable: ObservableSpec = field(init=False)

    def __post_init__(self):
        gram = np.array([[a.inner(b) for b in self.r_states] for a in self.r_states])
        if not np.allclose(gram, np.eye(len(self.r_states)), rtol=0, atol=ATOL):
            raise ConsistencyError("R eigenstates are not orthonormal")
        total = 0.5 * sum(r.amplitudes for r in self.r_states)
        if not np.allclose(total, self.bell.amplitudes, rtol=0, atol=ATOL):
            raise ConsistencyError("Bell state is not the equal sum of the R eigenstates")
        cols = np.column_stack([r.amplitudes for r in self.r_states])
        object.__setattr__(self, "r_observable", ObservableSpec("R", cols, R_LABELS))

    def r_state(self, label: str) -> StateVector:
        return self.r_states[R_LABELS.index(label)]

    def context(self, post: str | StateVector, axis: str, pre: StateVector | None = None) -> PrePostContext:
        """Spin measurement ``axis`` on the channel (second particle)."""
        post_state = self.r_state(post) if isinstance(post, str) else post
        return PrePostContext.for_observable(pre or self.bell, post_state, self.spin_observables[axis], [1])


def vaa_fixture(y_sign: int = 1) -> VaaFixture:
    return VaaFixture(
        bell=StateVector((2, 2), BELL),
        r_states=tuple(StateVector((2, 2), r) for r in r_eigenstates()),
        spin_observables={f"s{a}": spin_observable(a, y_sign) for a in "xyz"},
        y_sign=y_sign,
    )


@dataclass(frozen=True)
class AblTable:
    outcomes: dict[str, dict[str, str]]
    probabilities: dict[str, dict[str, float]]
    y_sign: int

    def matches(self, reference: dict[str, dict[str, str]] = REFERENCE_TABLE) -> dict[tuple[str, str], bool]:
        return {(r, s): self.outcomes[r][s] == reference[r][s] for r in R_LABELS for s in SPIN_AXES}

    def candidates(self, r_label: str, outcome: str) -> list[str]:
        """Spin axes whose certain outcome under post-selection ``r_label`` is ``outcome``."""
        return [s for s in SPIN_AXES if self.outcomes[r_label][s] == outcome]


def _compute_table(fixture: VaaFixture) -> AblTable:
    outcomes: dict[str, dict[str, str]] = {}
    probs: dict[str, dict[str, float]] = {}
    for r in R_LABELS:
        outcomes[r], probs[r] = {}, {}
        for s in SPIN_AXES:
            dist = abl_distribution(fixture.context(r, s))
            best = max(dist, key=dist.get)
            if abs(dist[best] - 1.0) > DETERMINISTIC_TOL:
                raise ConsistencyError(f"cell ({r}, {s}) is not deterministic: {dist}")
            outcomes[r][s], probs[r][s] = best, dist[best]
    return AblTable(outcomes, probs, fixture.y_sign)


def vaa_table(fixture: VaaFixture | None = None) -> AblTable:
    """Certain spin outcome for every (R eigenstate, spin axis) pair.

    With no fixture given, the default sigma_y phase convention is used and
    the opposite sign is tried once if the table does not reproduce the
    reference; the convention used is stored in ``AblTable.y_sign``.
    """
    if fixture is not None:
        return _compute_table(fixture)
    table = _compute_table(vaa_fixture(1))
    if all(table.matches().values()):
        return table
    return _compute_table(vaa_fixture(-1))


@dataclass(frozen=True)
class RewriteCheck:
    ok: bool
    failed: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


def bell_rewrite_check(fixture: VaaFixture | None = None, y_pairing_sign: int = 1, atol: float = ATOL) -> RewriteCheck:
    """Check the Bell state against its x-basis, y-basis and R-basis expansions.

    ``y_pairing_sign=-1`` flips the relative sign of the two y-basis terms,
    which must then fail.
    """
    fx = fixture or vaa_fixture()
    bell = fx.bell.amplitudes
    up_y, down_y = y_eigenstates(fx.y_sign)
    s = 1 / np.sqrt(2)
    forms = {
        "z-basis": s * (np.kron(UP_Z, UP_Z) + np.kron(DOWN_Z, DOWN_Z)),
        "x-basis": s * (np.kron(UP_X, UP_X) + np.kron(DOWN_X, DOWN_X)),
        "y-basis": s * (np.kron(up_y, down_y) + y_pairing_sign * np.kron(down_y, up_y)),
        "R-basis": 0.5 * sum(r.amplitudes for r in fx.r_states),
    }
    failed = tuple(name for name, v in forms.items() if not np.allclose(v, bell, rtol=0, atol=atol))
    return RewriteCheck(not failed, failed)
