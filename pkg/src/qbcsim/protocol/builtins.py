"""Names every protocol script can use without declaring them."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..abl import AblTable, R_LABELS, SPIN_AXES, vaa_fixture, vaa_table
from ..engine import ObservableSpec
from ..spin import (
    BELL,
    DOWN_X,
    DOWN_Z,
    HADAMARD,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    UP_X,
    UP_Z,
    y_eigenstates,
)

_UP_Y, _DOWN_Y = y_eigenstates()

STATES: dict[str, np.ndarray] = {
    "|0>": UP_Z,
    "|1>": DOWN_Z,
    "|+>": UP_X,
    "|->": DOWN_X,
    "|+i>": _UP_Y,
    "|-i>": _DOWN_Y,
    "bell": BELL,
}

UNITARIES: dict[str, np.ndarray] = {
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
    "H": HADAMARD,
}

# "I" is the identity on whatever targets it is applied to.
IDENTITY = "I"


def observables() -> dict[str, ObservableSpec]:
    return dict(_observables())


@lru_cache(maxsize=None)
def _observables() -> dict[str, ObservableSpec]:
    return {
        "sx": SIGMA_X,
        "sy": SIGMA_Y,
        "sz": SIGMA_Z,
        "R": vaa_fixture().r_observable,
    }


@lru_cache(maxsize=None)
def _vaa() -> AblTable:
    return vaa_table()


class InferenceTable:
    """Which values of the other party's record are compatible with (own outcome, announced outcome)."""

    def __init__(self, name: str, table: AblTable):
        self.name = name
        self.table = table
        self.claim_outcomes = SPIN_AXES
        self.source_outcomes = R_LABELS

    def candidates(self, source_value: str, given_value: str) -> list[str]:
        return self.table.candidates(source_value, given_value)


def inference_table(name: str) -> InferenceTable:
    if name != "vaa":
        raise KeyError(name)
    return InferenceTable("vaa", _vaa())


INFERENCE_TABLES = ("vaa",)
