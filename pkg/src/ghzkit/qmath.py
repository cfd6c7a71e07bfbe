"""Dense linear algebra on small multi-qubit (or qudit) Hilbert spaces.

Basis indices follow the most-significant-first convention: subsystem 1 is
the leftmost tensor factor, so for four qubits the 1-based index of
``|b1 b2 b3 b4>`` is ``int("b1b2b3b4", 2) + 1``.  Index 1 is ``|0000>`` and
index 16 is ``|1111>``.

Public functions accept either the value types defined here or plain numpy
arrays.  Subsystems are numbered from 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 256
CONVENTION = "msb-first-1-based"

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8
NORM_TOL = 1e-10


def _qubit_dims(dim: int) -> tuple[int, ...]:
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two; pass dims explicitly")
    return (2,) * n


def _check_dims(dims: Sequence[int], dim: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 2 for d in dims) or int(np.prod(dims)) != dim:
        raise ValueError(f"subsystem dims {dims} do not multiply to {dim}")
    return dims


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateVector:
    """A normalized ket over a tensor product of local spaces."""

    amps: np.ndarray
    dims: tuple[int, ...] = field(default=())

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size == 0 or amps.size > MAX_DIM:
            raise ValueError(f"state dimension {amps.size} outside 1..{MAX_DIM}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("state amplitudes must be finite")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm:.3g})")
        dims = self.dims or _qubit_dims(amps.size)
        object.__setattr__(self, "dims", _check_dims(dims, amps.size))
        object.__setattr__(self, "amps", _readonly(amps))

    @property
    def dim(self) -> int:
        return self.amps.size

    def projector(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amps, self.amps.conj()), self.dims)

    def to_json(self) -> dict:
        return {
            "kind": "state",
            "dim": self.dim,
            "dims": list(self.dims),
            "convention": CONVENTION,
            "amps": [[float(z.real), float(z.imag)] for z in self.amps],
        }


@dataclass(frozen=True)
class DensityMatrix:
    """A Hermitian, unit-trace, positive semidefinite operator.

    Construction validates all three properties; nothing is silently
    repaired.  Use :func:`project_to_density` to turn an arbitrary Hermitian
    estimate into a valid state.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = field(default=())

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if m.shape[0] > MAX_DIM:
            raise ValueError(f"dimension {m.shape[0]} exceeds {MAX_DIM}")
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix entries must be finite")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr:.6g}, expected 1")
        if np.linalg.eigvalsh(m)[0] < -PSD_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        dims = self.dims or _qubit_dims(m.shape[0])
        object.__setattr__(self, "dims", _check_dims(dims, m.shape[0]))
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def entry(self, i: int, j: int) -> complex:
        """Matrix element with 1-based indices, as written in the witness formulas."""
        return complex(self.matrix[i - 1, j - 1])

    def to_json(self) -> dict:
        return {
            "kind": "density",
            "dim": self.dim,
            "dims": list(self.dims),
            "convention": CONVENTION,
            "entries": [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix],
        }


def as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    if isinstance(rho, StateVector):
        return np.outer(rho.amps, rho.amps.conj())
    return np.asarray(rho, dtype=complex)


def as_density(rho) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    if isinstance(rho, StateVector):
        return rho.projector()
    return DensityMatrix(np.asarray(rho, dtype=complex))


def _dims_of(rho, dims) -> tuple[int, ...]:
    if dims is not None:
        return tuple(dims)
    if isinstance(rho, (DensityMatrix, StateVector)):
        return rho.dims
    return _qubit_dims(as_matrix(rho).shape[0])


def maximally_mixed(dim: int = 16) -> DensityMatrix:
    return DensityMatrix(np.eye(dim) / dim)


def ket(bits: str) -> np.ndarray:
    """Computational-basis qubit ket for a bitstring such as ``"0110"``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def kron(*ops) -> np.ndarray:
    """Left-to-right Kronecker product; ``kron(a, b, c) == (a (x) b) (x) c``."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def _subset_axes(subset: Iterable[int], n: int) -> list[int]:
    subset = sorted(set(int(s) for s in subset))
    for s in subset:
        if not 1 <= s <= n:
            raise ValueError(f"subsystem index {s} out of range 1..{n}")
    return [s - 1 for s in subset]


def partial_transpose(rho, subset: Iterable[int], dims: Sequence[int] | None = None) -> np.ndarray:
    """Transpose only the tensor factors listed in ``subset`` (1-based)."""
    m = as_matrix(rho)
    dims = _dims_of(rho, dims)
    n = len(dims)
    axes = _subset_axes(subset, n)
    t = m.reshape(dims + dims)
    perm = list(range(2 * n))
    for a in axes:
        perm[a], perm[n + a] = n + a, a
    return t.transpose(perm).reshape(m.shape)


def partial_trace(rho, subset: Iterable[int], dims: Sequence[int] | None = None) -> DensityMatrix:
    """Trace out the subsystems in ``subset`` (1-based) and return the reduced state."""
    m = as_matrix(rho)
    dims = _dims_of(rho, dims)
    n = len(dims)
    traced = _subset_axes(subset, n)
    keep = [i for i in range(n) if i not in traced]
    if not keep:
        raise ValueError("cannot trace out every subsystem")
    t = m.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = [letters[i] for i in range(n)]
    col = [letters[n + i] if i in keep else letters[i] for i in range(n)]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    reduced = np.einsum("".join(row + col) + "->" + "".join(out), t)
    kdims = tuple(dims[i] for i in keep)
    d = int(np.prod(kdims))
    return DensityMatrix(reduced.reshape(d, d), kdims)


def jacobi_eigh(m, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi diagonalization of a Hermitian matrix.

    Returns ascending eigenvalues and the matching eigenvectors as columns.
    Stops when the off-diagonal Frobenius norm drops below ``tol`` or after
    ``max_sweeps`` sweeps.
    """
    a = np.array(as_matrix(m), dtype=complex)
    _require_hermitian(a)
    a = (a + a.conj().T) / 2
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a[offdiag]) ** 2))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag < 1e-300:
                    continue
                # reduce to a real symmetric 2x2 problem by phasing out arg(apq)
                phase = apq / mag
                theta = 0.5 * np.arctan2(2 * mag, (a[q, q] - a[p, p]).real)
                c, s = np.cos(theta), np.sin(theta)
                rot = np.eye(n, dtype=complex)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s * phase
                rot[q, p] = -s * np.conj(phase)
                a = rot.conj().T @ a @ rot
                v = v @ rot
    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _require_hermitian(m: np.ndarray, tol: float = 1e-8) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
        raise ValueError("matrix is not Hermitian")


def herm_eigenvalues(m, method: str = "lapack") -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix.

    ``method="jacobi"`` uses :func:`jacobi_eigh`; the default defers to
    LAPACK, which is what the grid scans need for speed.
    """
    a = as_matrix(m)
    _require_hermitian(a)
    if method == "jacobi":
        return jacobi_eigh(a)[0]
    if method != "lapack":
        raise ValueError(f"unknown eigensolver {method!r}")
    return np.linalg.eigvalsh((a + a.conj().T) / 2)


def purity(rho) -> float:
    m = as_matrix(rho)
    return float(np.real(np.sum(m * m.T)))


def fidelity_with_pure(rho, psi) -> float:
    m = as_matrix(rho)
    v = psi.amps if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
    if v.shape[0] != m.shape[0]:
        raise ValueError(f"dimension mismatch: state {v.shape[0]} vs operator {m.shape[0]}")
    return float(np.real(np.vdot(v, m @ v)))


def trace_distance(a, b) -> float:
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    return float(0.5 * np.sum(np.abs(herm_eigenvalues(ma - mb))))


def project_to_density(m, dims: Sequence[int] | None = None) -> DensityMatrix:
    """Nearest-in-spectrum valid state: clip negative eigenvalues, renormalize."""
    a = as_matrix(m)
    a = (a + a.conj().T) / 2
    w, v = np.linalg.eigh(a)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ValueError("matrix has no positive spectral weight")
    w = w / w.sum()
    rho = (v * w) @ v.conj().T
    return DensityMatrix((rho + rho.conj().T) / 2, tuple(dims) if dims else ())


def canonical_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Multiply by a global phase so the first nonzero amplitude is real positive."""
    v = np.asarray(v, dtype=complex)
    nz = np.flatnonzero(np.abs(v) > tol)
    if nz.size == 0:
        raise ValueError("zero vector has no phase")
    z = v[nz[0]]
    out = v * (abs(z) / z)
    out[np.abs(out) <= tol] = 0.0
    out.real[np.abs(out.real) <= tol] = 0.0
    out.imag[np.abs(out.imag) <= tol] = 0.0
    return out


# -- JSON ------------------------------------------------------------------


def _cplx(pair) -> complex:
    re, im = pair
    return complex(float(re), float(im))


def state_from_json(obj: dict) -> StateVector | DensityMatrix:
    """Inverse of ``StateVector.to_json`` / ``DensityMatrix.to_json``."""
    if not isinstance(obj, dict):
        raise ValueError("state JSON must be an object")
    conv = obj.get("convention", CONVENTION)
    if conv != CONVENTION:
        raise ValueError(f"unsupported index convention {conv!r}")
    dims = tuple(obj.get("dims") or ())
    if "amps" in obj:
        amps = np.array([_cplx(p) for p in obj["amps"]])
        if "dim" in obj and int(obj["dim"]) != amps.size:
            raise ValueError("field 'dim' disagrees with the amplitude count")
        return StateVector(amps, dims)
    if "entries" in obj:
        m = np.array([[_cplx(p) for p in row] for row in obj["entries"]])
        if "dim" in obj and int(obj["dim"]) != m.shape[0]:
            raise ValueError("field 'dim' disagrees with the matrix size")
        return DensityMatrix(m, dims)
    raise ValueError("state JSON needs an 'amps' or 'entries' field")


def dumps(value) -> str:
    return json.dumps(value.to_json(), indent=None, separators=(",", ":"))
