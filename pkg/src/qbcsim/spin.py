"""Standard single-qubit states, gates and spin observables.

Basis order is (up_z, down_z). The sigma_y eigenvectors use
``|up_y> = (|up_z> + i |down_z>) / sqrt(2)`` unless ``y_sign=-1`` is requested.
"""

from __future__ import annotations

import numpy as np

from .engine import ObservableSpec

SQRT1_2 = 1 / np.sqrt(2)

UP = "up"
DOWN = "down"

UP_Z = np.array([1, 0], dtype=complex)
DOWN_Z = np.array([0, 1], dtype=complex)
UP_X = SQRT1_2 * np.array([1, 1], dtype=complex)
DOWN_X = SQRT1_2 * np.array([1, -1], dtype=complex)

IDENTITY = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = SQRT1_2 * np.array([[1, 1], [1, -1]], dtype=complex)

BELL = SQRT1_2 * (np.kron(UP_Z, UP_Z) + np.kron(DOWN_Z, DOWN_Z))


def y_eigenstates(y_sign: int = 1) -> tuple[np.ndarray, np.ndarray]:
    s = 1 if y_sign >= 0 else -1
    return SQRT1_2 * np.array([1, s * 1j]), SQRT1_2 * np.array([1, -s * 1j])


def spin_observable(axis: str, y_sign: int = 1) -> ObservableSpec:
    """sigma_x, sigma_y or sigma_z with outcome labels ``up``/``down``."""
    if axis == "x":
        up, down = UP_X, DOWN_X
    elif axis == "y":
        up, down = y_eigenstates(y_sign)
    elif axis == "z":
        up, down = UP_Z, DOWN_Z
    else:
        raise ValueError(f"unknown spin axis {axis!r}")
    return ObservableSpec(f"s{axis}", np.column_stack([up, down]), (UP, DOWN))


SIGMA_X = spin_observable("x")
SIGMA_Y = spin_observable("y")
SIGMA_Z = spin_observable("z")
