"""Weyl operators and the sixteen-element four-qubit GHZ basis.

Weyl operators use the standard convention ``W[k,l]|j> = w**(j*k) |j+l mod d>``
with ``w = exp(2 pi i / d)``; for qubits ``W[0,1] = X``, ``W[1,0] = Z`` and
``W[1,1] = -iY``.

Labels are 4-character bitstrings ``b1b2b3b4``.  The state with label ``b`` is

    (1 (x) X^b1 (x) X^b2 (x) Omega(b3, b4)) |GHZ_0000>

with ``Omega(0,0)=1, Omega(0,1)=Y, Omega(1,0)=X, Omega(1,1)=Z`` and the global
phase fixed so the first nonzero amplitude is real and positive.  This
reproduces the signs of the reference kets, with R/r -> 0 and
L/l -> 1 on the four subsystems (photon-a polarisation, photon-a OAM,
photon-b polarisation, photon-b OAM).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .qmath import StateVector, canonical_phase, kron

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

LABELS = tuple("".join(b) for b in itertools.product("01", repeat=4))

# letters of the fourth-subsystem operator for each value of (b3, b4)
_OMEGA = {"00": "I", "01": "Y", "10": "X", "11": "Z"}

_POL = "RL"
_OAM = "rl"


def check_label(label: str) -> str:
    if not isinstance(label, str) or len(label) != 4 or set(label) - {"0", "1"}:
        raise ValueError(f"invalid GHZ label {label!r}; expected four bits such as '0110'")
    return label


def weyl_matrix(k: int, l: int, d: int = 2) -> np.ndarray:
    if d < 2:
        raise ValueError("local dimension must be at least 2")
    if not (0 <= k < d and 0 <= l < d):
        raise ValueError(f"Weyl indices ({k}, {l}) out of range for d={d}")
    w = np.exp(2j * np.pi / d)
    m = np.zeros((d, d), dtype=complex)
    for j in range(d):
        m[(j + l) % d, j] = w ** (j * k)
    return m


@dataclass(frozen=True)
class WeylOperator:
    k: int
    l: int
    d: int = 2

    def __post_init__(self):
        weyl_matrix(self.k, self.l, self.d)

    @property
    def matrix(self) -> np.ndarray:
        return weyl_matrix(self.k, self.l, self.d)


def seed_state(n: int, d: int = 2) -> StateVector:
    """Recursive seed state.

    ``phi_1 = |0>`` and ``phi_n = d**-0.5 * sum_i (1^(n-1) (x) W[i,i]) |i> (x) phi_(n-1)``.
    """
    if n < 1 or d < 2:
        raise ValueError("need n >= 1 and d >= 2")
    phi = np.zeros(d, dtype=complex)
    phi[0] = 1.0
    for m in range(2, n + 1):
        nxt = np.zeros(d**m, dtype=complex)
        for i in range(d):
            e = np.zeros(d)
            e[i] = 1.0
            op = np.kron(np.eye(d ** (m - 2)), weyl_matrix(i, i, d))
            nxt += np.kron(e, op @ phi)
        phi = nxt / np.sqrt(d)
    return StateVector(phi, (d,) * n)


def seed_rotation(n: int) -> np.ndarray:
    """``((1 + iX)/sqrt 2)^(x)n``, which takes the qubit seed to GHZ form."""
    a = (I2 + 1j * X) / np.sqrt(2)
    return kron(*([a] * n))


def label_letters(label: str) -> str:
    """Pauli letters of the local operator that builds ``label`` from GHZ_0000."""
    b = check_label(label)
    return "I" + ("X" if b[0] == "1" else "I") + ("X" if b[1] == "1" else "I") + _OMEGA[b[2:]]


def pauli_string(letters: str) -> np.ndarray:
    return kron(*(PAULI[c] for c in letters))


@lru_cache(maxsize=None)
def _basis_amps(label: str) -> np.ndarray:
    ghz = (np.eye(16)[0] + np.eye(16)[15]) / np.sqrt(2)
    v = canonical_phase(pauli_string(label_letters(label)) @ ghz)
    v.setflags(write=False)
    return v


def basis_state(label: str) -> StateVector:
    return StateVector(_basis_amps(check_label(label)))


def full_basis() -> list[StateVector]:
    return [basis_state(b) for b in LABELS]


def support(label: str) -> tuple[int, int]:
    """0-based computational indices ``(x, 15 - x)`` carrying the state, with x < 8."""
    v = _basis_amps(check_label(label))
    x = int(np.flatnonzero(np.abs(v) > 1e-12)[0])
    return x, 15 - x


def relative_sign(label: str) -> int:
    v = _basis_amps(check_label(label))
    x, y = support(label)
    return int(np.sign((v[y] / v[x]).real))


def twin_of(label: str) -> str:
    """The partner whose equal mixture with ``label`` is diagonal: flip the last two bits."""
    b = int(check_label(label), 2) ^ 0b0011
    return format(b, "04b")


def twin_pairs() -> list[tuple[str, str]]:
    return [(b, twin_of(b)) for b in LABELS if b < twin_of(b)]


def is_twin_pair(a: str, b: str) -> bool:
    return twin_of(a) == check_label(b)


def match_label(v: np.ndarray, tol: float = 1e-10) -> str | None:
    """Label of the basis state equal to ``v`` up to global phase, if any."""
    v = np.asarray(v, dtype=complex)
    for b in LABELS:
        if abs(abs(np.vdot(_basis_amps(b), v)) - 1.0) < tol:
            return b
    return None


@dataclass(frozen=True)
class LatticeMove:
    """A Weyl operator applied to subsystem 2, 3 or 4."""

    subsystem: int
    operator: WeylOperator

    def __post_init__(self):
        if self.subsystem not in (2, 3, 4):
            raise ValueError("lattice moves act on subsystem 2, 3 or 4")
        if self.operator.d != 2:
            raise ValueError("lattice moves are defined for qubits only")

    def matrix(self) -> np.ndarray:
        ops = [I2] * 4
        ops[self.subsystem - 1] = self.operator.matrix
        return kron(*ops)


def canonical_moves() -> list[LatticeMove]:
    return [LatticeMove(s, WeylOperator(k, l)) for s in (2, 3, 4) for k in (0, 1) for l in (0, 1)]


def lattice_move(label: str, move: LatticeMove) -> str:
    out = match_label(move.matrix() @ _basis_amps(check_label(label)))
    if out is None:
        raise ValueError(f"{move} does not map GHZ_{label} into the basis")
    return out


def quadrant(label: str) -> str:
    """Quadrant of the lattice picture: the first two label bits."""
    return check_label(label)[:2]


def ket_notation(label: str) -> str:
    """Pretty ket in the R/L, r/l lettering, e.g. ``(|RrRr>+|LlLl>)/sqrt2``."""
    x, y = support(label)
    sign = "+" if relative_sign(label) > 0 else "-"
    return f"(|{_letters(x)}⟩{sign}|{_letters(y)}⟩)/√2"


def _letters(index: int) -> str:
    b = format(index, "04b")
    return _POL[int(b[0])] + _OAM[int(b[1])] + _POL[int(b[2])] + _OAM[int(b[3])]


def qudit_ghz_state(phase: int, shifts, d: int) -> StateVector:
    """Qudit GHZ basis element ``sum_j w^(j*phase) |j, j+s2, ..., j+sn> / sqrt d``.

    Equivalent to applying ``W[phase,0]`` on subsystem 1 and ``W[0,s_i]`` on
    subsystem i to ``sum_j |j...j>``; ``phase`` ranges over d values and each
    shift over d values, giving d**n orthonormal states.
    """
    shifts = [int(s) for s in shifts]
    n = len(shifts) + 1
    ops = [weyl_matrix(phase % d, 0, d)] + [weyl_matrix(0, s % d, d) for s in shifts]
    ghz = np.zeros(d**n, dtype=complex)
    for j in range(d):
        ghz[sum(j * d**p for p in range(n))] = 1.0
    return StateVector(kron(*ops) @ ghz / np.sqrt(d), (d,) * n)
