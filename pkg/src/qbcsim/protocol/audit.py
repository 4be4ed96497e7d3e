"""No-signalling audit and random protocol scripts for property checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..engine import Party, apply_operator, reduced_state
from ..linalg import DensityOperator, partial_trace, random_state, random_unitary, trace_distance
from .commitment import _pre_commit_state
from .compiler import purify
from .nodes import Announce, ProtocolScript

AUDIT_TOL = 1e-10


@dataclass(frozen=True)
class AuditReport:
    distance: float
    passed: bool
    observer: str
    ancillas: tuple[str, ...]
    branches: int
    tol: float = AUDIT_TOL


def _until_first_announce(script: ProtocolScript) -> ProtocolScript:
    steps = []
    for s in script.round_steps:
        if isinstance(s, Announce):
            break
        steps.append(s)
    return script.__class__(**{**script.__dict__, "steps": tuple(steps)})


def audit_no_signalling(
    script: ProtocolScript,
    party: Party | str = Party.BOB,
    drop_branch: int | None = None,
    tol: float = AUDIT_TOL,
) -> AuditReport:
    """Does measuring ``party``'s ancillas change the other party's reduced state?

    The round is run up to its first announcement with both parties purified. The other party's
    reduced operator is compared with the average over ``party`` measuring
    every ancilla it holds in its pointer, die or copy basis.
    ``drop_branch`` leaves one measurement branch out of the average.
    """
    party = Party.parse(party)
    observer = party.other()
    full = purify(purify(_until_first_announce(script), party), observer)
    reg = _pre_commit_state(full).reg
    ancillas = [a.label for a in reg.ledger if reg.owner(a.label) is party]
    keep = [i for i, s in enumerate(reg.subsystems) if s.owner is observer]
    unmeasured = reduced_state(reg, observer)
    dims = [reg.subsystem(a).dim for a in ancillas]
    avg = np.zeros_like(unmeasured.matrix)
    for k, string in enumerate(itertools.product(*(range(d) for d in dims))):
        if k == drop_branch:
            continue
        proj = np.zeros((int(np.prod(dims)),) * 2, dtype=complex)
        flat = int(np.ravel_multi_index(string, dims)) if dims else 0
        proj[flat, flat] = 1.0
        v = apply_operator(reg, proj, ancillas) if ancillas else reg.state.amplitudes
        avg += partial_trace(np.outer(v, v.conj()), reg.dims, keep).matrix
    n = int(np.prod(dims)) if dims else 1
    d = trace_distance(unmeasured, DensityOperator(avg, check=False))
    return AuditReport(d, d <= tol, observer.value, tuple(ancillas), n, tol)


def _fmt(z: complex) -> str:
    return f"({z.real:.17g}{z.imag:+.17g}*i)"


def _matrix_literal(m: np.ndarray) -> str:
    if m.ndim == 1:
        return "[" + ", ".join(_fmt(z) for z in m) + "]"
    return "[" + ", ".join(_matrix_literal(row) for row in m) + "]"


def random_script_source(rng: np.random.Generator, max_dim: int = 64) -> str:
    """Random two-party round in script syntax.

    Alice prepares a random state of her particle ``a`` and a channel particle
    ``c`` and sends ``c``; Bob makes a random weighted choice between a
    random-basis measurement and random unitaries, may follow it with a step
    conditioned on that choice, and returns ``c``; Alice then measures in a
    random basis or does nothing. Dimensions are drawn so that the fully
    purified register stays within ``max_dim``.
    """
    while True:
        da, dc, na = int(rng.choice([2, 3])), int(rng.choice([2, 3])), int(rng.integers(2, 4))
        alice_measures = bool(rng.random() < 0.5)
        total = da * dc * na * dc * (da * dc if alice_measures else 1)
        if total <= max_dim:
            break
    lines = ["protocol random", "rounds 1"]
    lines.append(f"state psi = {_matrix_literal(random_state([da * dc], rng).amplitudes)}")
    lines.append(f"observable Mc = {_matrix_literal(random_unitary(dc, rng))} : "
                 + ", ".join(f"o{k}" for k in range(dc)))
    for k in range(2):
        lines.append(f"unitary Uc{k} = {_matrix_literal(random_unitary(dc, rng))}")
    lines.append(f"prepare A a:{da}, c:{dc} psi")
    lines.append("send c A B")
    w = rng.dirichlet(np.ones(na))
    ops = ["measure Mc c -> m", "apply Uc0 c", "apply Uc1 c"][:na]
    lines.append("choose B k = " + " | ".join(f"b{j}@{w[j]:.17g}: {op}" for j, op in enumerate(ops)))
    if rng.random() < 0.5:
        lines.append("case B k = " + " | ".join(f"b{j}: apply Uc{int(rng.integers(2))} c" for j in range(na)))
    lines.append("send c B A")
    if alice_measures:
        lines.append(f"observable Ma = {_matrix_literal(random_unitary(da * dc, rng))} : "
                     + ", ".join(f"s{k}" for k in range(da * dc)))
        lines.append("measure A Ma a, c -> r")
    lines.append("announce B k == b0")
    return "\n".join(lines) + "\n"
