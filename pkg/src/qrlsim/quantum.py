"""Statevector primitives for per-state action superpositions.

An :class:`ActionRegister` holds the ``2**n`` complex amplitudes of one
state's action superposition.  Registers are immutable values: every
operation returns a new register, which is how the simulator keeps a
persistent copy of the superposition while a measurement "collapses" it.

The numeric inner loops (:func:`grover_inplace`, :func:`collapse_index`) are
numba-compiled so the episode kernels in :mod:`qrlsim.kernels` share them
with the step-level API, which keeps both paths bit-for-bit identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import InvalidArgument, InvalidState

MAX_QUBITS = 20
NORM_TOL = 1e-9
# absorbs representation error in truncation, e.g. pi/(4*asin(1/2)) - 1/2 == 0.9999999999999998
INT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ActionRegister:
    """Unit-norm amplitudes over the ``2**n`` eigen actions of one state."""

    n: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] != 2**self.n:
            raise InvalidArgument(
                f"register of {self.n} qubits needs {2**self.n} amplitudes, got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise InvalidState("amplitudes must be finite")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps) -> ActionRegister:
        amps = np.asarray(amps, dtype=np.complex128)
        n = int(round(math.log2(amps.shape[0]))) if amps.shape[0] > 0 else 0
        if n < 1 or 2**n != amps.shape[0]:
            raise InvalidArgument(f"amplitude count {amps.shape[0]} is not a power of two >= 2")
        return cls(n, amps)

    @property
    def probabilities(self) -> np.ndarray:
        return self.amps.real**2 + self.amps.imag**2

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.probabilities)))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(float(np.sum(self.probabilities)) - 1.0) <= tol

    def __len__(self):
        return self.amps.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ActionRegister):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.amps, other.amps)

    def __repr__(self):
        return f"ActionRegister(n={self.n}, amps={np.array2string(self.amps, precision=4)})"


def grover_angle(n: int) -> float:
    """Half-rotation angle ``arcsin(2**(-n/2))`` of an n-qubit Grover iteration."""
    if n < 1:
        raise InvalidArgument(f"qubit count must be >= 1, got {n}")
    return math.asin(2.0 ** (-n / 2.0))


def uniform_superposition(n: int, max_qubits: int = MAX_QUBITS) -> ActionRegister:
    """Equal-weight superposition of all ``2**n`` eigen actions (``H^n |0...0>``)."""
    if not isinstance(n, (int, np.integer)) or n < 1 or n > max_qubits:
        raise InvalidArgument(f"qubit count must be in [1, {max_qubits}], got {n}")
    dim = 2**n
    return ActionRegister(int(n), np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128))


def _check_qubit_state(state) -> np.ndarray:
    v = np.asarray(state, dtype=np.complex128)
    if v.shape != (2,):
        raise InvalidArgument(f"single-qubit state must have 2 amplitudes, got shape {v.shape}")
    if abs(float(np.sum(np.abs(v) ** 2)) - 1.0) > NORM_TOL:
        raise InvalidState("single-qubit state is not normalized")
    return v


_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)


def hadamard(state) -> np.ndarray:
    v = _check_qubit_state(state)
    return _H @ v


def phase_gate(state, phi: float) -> np.ndarray:
    """Apply ``diag(1, e^{i phi})``."""
    v = _check_qubit_state(state)
    return np.array([v[0], v[1] * np.exp(1j * phi)], dtype=np.complex128)


@numba.njit(cache=True)
def grover_inplace(amps, target, L):
    """Apply ``(2|a0><a0| - I)(I - 2|a><a|)`` L times as two rank-1 updates.

    Renormalizes once after the batch; L == 0 leaves ``amps`` untouched.
    """
    if L <= 0:
        return
    dim = amps.shape[0]
    for _ in range(L):
        amps[target] = -amps[target]
        mean = amps.sum() / dim
        for i in range(dim):
            amps[i] = 2.0 * mean - amps[i]
    total = 0.0
    for i in range(dim):
        total += amps[i].real * amps[i].real + amps[i].imag * amps[i].imag
    scale = 1.0 / math.sqrt(total)
    for i in range(dim):
        amps[i] = amps[i] * scale


@numba.njit(cache=True)
def collapse_index(amps, u):
    """Inverse-CDF draw over ``|C_a|^2`` for a uniform variate ``u`` in [0, 1).

    Returns -1 for a degenerate register.  Cumulative sums run in index order;
    the lowest index wins on ties.
    """
    dim = amps.shape[0]
    total = 0.0
    for i in range(dim):
        total += amps[i].real * amps[i].real + amps[i].imag * amps[i].imag
    if total < NORM_TOL:
        return -1
    threshold = u * total
    cum = 0.0
    last = -1
    for i in range(dim):
        p = amps[i].real * amps[i].real + amps[i].imag * amps[i].imag
        if p > 0.0:
            last = i
        cum += p
        if threshold < cum:
            return i
    # u*total can round up to the final cumulative sum
    return last


def grover_iterate(reg: ActionRegister, target: int, L: int) -> ActionRegister:
    """Return ``U_Grov**L`` applied to ``reg`` with ``target`` as the marked action."""
    dim = len(reg)
    if not 0 <= target < dim:
        raise InvalidArgument(f"target {target} outside [0, {dim})")
    if L < 0:
        raise InvalidArgument(f"iteration count must be >= 0, got {L}")
    if not reg.is_normalized():
        raise InvalidState("register is not normalized")
    if L == 0:
        return reg
    amps = reg.amps.copy()
    grover_inplace(amps, int(target), int(L))
    return ActionRegister(reg.n, amps)


def measure_collapse(reg: ActionRegister, rng: np.random.Generator) -> int:
    """Sample an eigen action with probability ``|C_a|^2``.

    Consumes exactly one ``rng.random()`` draw.  ``reg`` is not modified.
    """
    if float(np.sum(reg.probabilities)) < NORM_TOL:
        raise InvalidState("cannot measure a degenerate (all-zero) register")
    if not reg.is_normalized():
        raise InvalidState("register is not normalized")
    return int(collapse_index(reg.amps, rng.random()))


@numba.njit(cache=True)
def _collapse_many(amps, rng, size):
    out = np.empty(size, dtype=np.int64)
    for i in range(size):
        out[i] = collapse_index(amps, rng.random())
    return out


def measure_many(reg: ActionRegister, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent collapses of copies of ``reg``.

    Same draws as calling :func:`measure_collapse` ``size`` times.
    """
    if float(np.sum(reg.probabilities)) < NORM_TOL:
        raise InvalidState("cannot measure a degenerate (all-zero) register")
    if not reg.is_normalized():
        raise InvalidState("register is not normalized")
    return _collapse_many(reg.amps, rng, int(size))


def int_part(x: float) -> int:
    """Truncate toward zero, tolerating float noise just below an integer."""
    if x >= 0:
        return int(x + INT_TOL)
    return -int(-x + INT_TOL)


def iteration_cap(theta: float) -> int:
    """Largest L that does not over-rotate a uniform register: ``int(pi/(4 theta) - 1/2)``."""
    return max(0, int_part(math.pi / (4.0 * theta) - 0.5))


def compute_L(r: float, v_next: float, k: float, theta: float) -> int:
    """Grover iteration count ``min(int(k (r + V(s'))), cap)`` clamped at 0."""
    if not k > 0:
        raise InvalidArgument(f"gain k must be > 0, got {k}")
    if not 0 < theta <= math.pi / 2:
        raise InvalidArgument(f"Grover angle must be in (0, pi/2], got {theta}")
    return max(0, min(int_part(k * (r + v_next)), iteration_cap(theta)))


def qubit_count(count: int) -> int:
    """Smallest m with ``count <= 2**m``; that m also satisfies ``2**m <= 2*count``."""
    if count < 1:
        raise InvalidArgument(f"set size must be >= 1, got {count}")
    return max(0, (int(count) - 1).bit_length())
