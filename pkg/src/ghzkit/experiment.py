"""Desk-scale simulation of the two-photon GHZ source and its read-out.

Pipeline: polarisation-entangled pair -> one q-plate per photon -> waveplates
(polarisation) and abstract local unitaries (OAM) -> local Pauli-basis counting
with multinomial shot noise and Poisson dark counts -> witness estimates or
linear-inversion tomography.

Before the q-plates each photon carries a three-level OAM mode
``(r, l, 0)`` = ``(l=-1, l=+1, m=0)``; the photon-pair space therefore has
subsystem dims ``(2, 3, 2, 3)``.  After both q-plates the ``m=0`` level is
empty and :func:`to_qubits` drops it, giving the 16-dimensional four-qubit
space (pol a, OAM a, pol b, OAM b) with R, r -> 0 and L, l -> 1.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import basis
from .qmath import DensityMatrix, StateVector, as_matrix, canonical_phase, kron, project_to_density
from .witnesses import MissingDataError, PauliObservable, lin_I2_observable

PHOTON_DIMS = (2, 3, 2, 3)
R, L = 0, 1
OAM_R, OAM_L, OAM_0 = 0, 1, 2

SETTINGS = tuple("".join(p) for p in itertools.product("XYZ", repeat=4))
ALL_PAULIS = tuple("".join(p) for p in itertools.product("IXYZ", repeat=4))


# -- source and q-plates ---------------------------------------------------------


def _photon_ket(pol: int, oam: int) -> np.ndarray:
    v = np.zeros(6, dtype=complex)
    v[pol * 3 + oam] = 1.0
    return v


def spdc_state() -> StateVector:
    """``(|R,0>_a |L,0>_b - |L,0>_a |R,0>_b) / sqrt 2``."""
    v = np.kron(_photon_ket(R, OAM_0), _photon_ket(L, OAM_0)) - np.kron(
        _photon_ket(L, OAM_0), _photon_ket(R, OAM_0)
    )
    return StateVector(v / np.sqrt(2), PHOTON_DIMS)


def qplate(state: StateVector, photon: str) -> StateVector:
    """``|R,0> -> |L,r>``, ``|L,0> -> |R,l>`` on photon ``a`` or ``b``.

    The addressed photon must have all its amplitude in the ``m=0`` mode.
    """
    if photon not in ("a", "b"):
        raise ValueError("photon must be 'a' or 'b'")
    t = np.asarray(state.amps).reshape(PHOTON_DIMS)
    oam_axis = 1 if photon == "a" else 3
    stray = np.take(t, [OAM_R, OAM_L], axis=oam_axis)
    if np.max(np.abs(stray), initial=0.0) > 1e-12:
        raise ValueError(f"q-plate on photon {photon}: OAM is not in the m=0 state")
    q = np.zeros((6, 6), dtype=complex)
    q[L * 3 + OAM_R, R * 3 + OAM_0] = 1.0
    q[R * 3 + OAM_L, L * 3 + OAM_0] = 1.0
    # close the map on the complementary modes so the operator is unitary
    q[R * 3 + OAM_0, L * 3 + OAM_R] = 1.0
    q[L * 3 + OAM_0, R * 3 + OAM_L] = 1.0
    q[R * 3 + OAM_R, R * 3 + OAM_R] = 1.0
    q[L * 3 + OAM_L, L * 3 + OAM_L] = 1.0
    op = np.kron(q, np.eye(6)) if photon == "a" else np.kron(np.eye(6), q)
    return StateVector(op @ state.amps, PHOTON_DIMS)


def to_qubits(state: StateVector) -> StateVector:
    """Drop the empty ``m=0`` OAM level, returning a four-qubit state."""
    t = np.asarray(state.amps).reshape(PHOTON_DIMS)
    if np.max(np.abs(t[:, OAM_0])) > 1e-12 or np.max(np.abs(t[:, :, :, OAM_0])) > 1e-12:
        raise ValueError("state still has amplitude in the m=0 OAM mode")
    return StateVector(t[:, :2, :, :2].reshape(16))


# -- waveplates ------------------------------------------------------------------

_CIRC = np.array([[1, 1], [-1j, 1j]]) / np.sqrt(2)  # columns |R>, |L> in the H/V basis
WAVEPLATE_ANGLES = tuple(k * np.pi / 8 for k in range(8))


def waveplate(kind: str, angle: float) -> np.ndarray:
    """Jones matrix of a HWP or QWP with fast axis at ``angle``, in the R/L basis."""
    delta = {"HWP": np.pi, "QWP": np.pi / 2}[kind]
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    j = rot @ np.diag([1.0, np.exp(1j * delta)]) @ rot.T
    return _CIRC.conj().T @ j @ _CIRC


def _same_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    return abs(abs(np.trace(a.conj().T @ b)) - a.shape[0]) < tol


def find_waveplates(target: np.ndarray) -> tuple[tuple[str, float], ...]:
    """Shortest waveplate sequence (applied left to right) equal to ``target`` up to phase.

    Tries nothing, one plate, then QWP-HWP-QWP, with angles on a pi/8 grid.
    """
    target = np.asarray(target, dtype=complex)
    if _same_up_to_phase(np.eye(2), target):
        return ()
    for kind in ("HWP", "QWP"):
        for a in WAVEPLATE_ANGLES:
            if _same_up_to_phase(waveplate(kind, a), target):
                return ((kind, a),)
    for a1, a2, a3 in itertools.product(WAVEPLATE_ANGLES, repeat=3):
        seq = (("QWP", a1), ("HWP", a2), ("QWP", a3))
        if _same_up_to_phase(_compose(seq), target):
            return seq
    raise ValueError("no waveplate sequence found for target unitary")


def _compose(seq: Sequence[tuple[str, float]]) -> np.ndarray:
    u = np.eye(2, dtype=complex)
    for kind, a in seq:
        u = waveplate(kind, a) @ u
    return u


@dataclass(frozen=True)
class PrepRecipe:
    """Local operations applied after the q-plates to reach ``target``.

    Polarisation qubits get waveplate sequences; OAM qubits get an abstract
    single-qubit Pauli operation.
    """

    target: str
    pol_a: tuple[tuple[str, float], ...]
    oam_a: str
    pol_b: tuple[tuple[str, float], ...]
    oam_b: str

    def unitary(self) -> np.ndarray:
        return kron(_compose(self.pol_a), basis.PAULI[self.oam_a],
                    _compose(self.pol_b), basis.PAULI[self.oam_b])


# the q-plates deliver GHZ_1111 (up to sign)
QPLATE_LABEL = "1111"


def _pauli_product(a: str, b: str) -> str:
    m = basis.PAULI[a] @ basis.PAULI[b]
    for letter, p in basis.PAULI.items():
        if _same_up_to_phase(p, m):
            return letter
    raise AssertionError("Pauli group is closed")  # pragma: no cover


@lru_cache(maxsize=None)
def recipe_for(target: str) -> PrepRecipe:
    t = basis.label_letters(target)
    q = basis.label_letters(QPLATE_LABEL)
    letters = [_pauli_product(x, y) for x, y in zip(t, q)]
    return PrepRecipe(
        target=target,
        pol_a=find_waveplates(basis.PAULI[letters[0]]),
        oam_a=letters[1],
        pol_b=find_waveplates(basis.PAULI[letters[2]]),
        oam_b=letters[3],
    )


def source_state() -> StateVector:
    """The four-qubit state right after both q-plates."""
    return to_qubits(qplate(qplate(spdc_state(), "a"), "b"))


def prepare_pure(target: str) -> StateVector:
    v = recipe_for(basis.check_label(target)).unitary() @ source_state().amps
    return StateVector(canonical_phase(v))


@dataclass(frozen=True)
class NoiseModel:
    white_noise_weight: float = 0.0
    dark_rate: float = 0.0
    shots_per_setting: int | None = None  # None: analytic (infinite-shot) mode
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.white_noise_weight < 1.0:
            raise ValueError("white_noise_weight must lie in [0, 1)")
        if self.dark_rate < 0:
            raise ValueError("dark_rate must be nonnegative")
        if self.shots_per_setting is not None and int(self.shots_per_setting) < 1:
            raise ValueError("shots_per_setting must be positive")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must fit in 64 bits")

    @property
    def analytic(self) -> bool:
        return self.shots_per_setting is None


def prep(target: str, noise: NoiseModel = NoiseModel()) -> DensityMatrix:
    psi = prepare_pure(target).amps
    p = noise.white_noise_weight
    return DensityMatrix((1 - p) * np.outer(psi, psi.conj()) + p * np.eye(16) / 16)


def white_noise_for_purity(target_purity: float) -> float:
    """White-noise weight p with Tr(rho^2) = target for (1-p)|psi><psi| + p/16."""
    # (1-p)^2 + p(2-p)/16 = P  ->  (15/16) p^2 - (15/8) p + (1 - P) = 0
    if not 1 / 16 < target_purity <= 1:
        raise ValueError("purity must lie in (1/16, 1]")
    a, b, c = 15 / 16, -15 / 8, 1 - target_purity
    return float((-b - np.sqrt(b * b - 4 * a * c)) / (2 * a))


# -- counting --------------------------------------------------------------------


@dataclass(frozen=True)
class CountRecord:
    setting: str
    counts: tuple[float, ...]
    shots: int | None
    dark_rate: float = 0.0
    corrected: bool = False

    def __post_init__(self):
        _check_setting(self.setting)
        counts = tuple(float(c) for c in self.counts)
        if len(counts) != 16:
            raise ValueError(f"record for {self.setting} has {len(counts)} outcome bins, expected 16")
        if any(c < 0 or not np.isfinite(c) for c in counts):
            raise ValueError(f"record for {self.setting} has negative or non-finite counts")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> float:
        return float(sum(self.counts))

    def to_json(self) -> dict:
        counts = [int(c) if float(c).is_integer() else c for c in self.counts]
        return {"setting": self.setting, "counts": counts, "shots": self.shots,
                "dark_rate": self.dark_rate, "corrected": self.corrected}

    @classmethod
    def from_json(cls, obj: dict) -> CountRecord:
        try:
            return cls(obj["setting"], tuple(obj["counts"]), obj.get("shots"),
                       float(obj.get("dark_rate", 0.0)), bool(obj.get("corrected", False)))
        except KeyError as e:
            raise ValueError(f"count record is missing field {e}") from None


def dumps_records(records: Iterable[CountRecord]) -> str:
    return "".join(json.dumps(r.to_json(), separators=(",", ":")) + "\n" for r in records)


def loads_records(text: str) -> list[CountRecord]:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(CountRecord.from_json(json.loads(line)))
        except (ValueError, TypeError) as e:
            raise ValueError(f"line {n}: {e}") from None
    return out


def _check_setting(setting: str) -> str:
    if len(setting) != 4 or set(setting) - set("XYZ"):
        raise ValueError(f"invalid measurement setting {setting!r}; use four letters from X, Y, Z")
    return setting


_EIGENBASIS = {
    "X": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
    "Y": np.array([[1, 1], [1j, -1j]]) / np.sqrt(2),
    "Z": np.eye(2),
}


def setting_probabilities(rho, setting: str) -> np.ndarray:
    """Outcome probabilities; outcome bit 0 is the +1 eigenvector on each qubit."""
    v = kron(*(_EIGENBASIS[c] for c in _check_setting(setting)))
    p = np.real(np.einsum("ij,jk,ki->i", v.conj().T, as_matrix(rho), v))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def setting_index(setting: str) -> int:
    return SETTINGS.index(_check_setting(setting))


def sample_counts(rho, setting: str, noise: NoiseModel) -> CountRecord:
    """Counts for one setting; the random stream depends only on (seed, setting)."""
    probs = setting_probabilities(rho, setting)
    if noise.analytic:
        counts = probs + noise.dark_rate
        return CountRecord(setting, tuple(counts), None, noise.dark_rate)
    rng = np.random.default_rng([int(noise.rng_seed), setting_index(setting)])
    counts = rng.multinomial(int(noise.shots_per_setting), probs)
    if noise.dark_rate > 0:
        counts = counts + rng.poisson(noise.dark_rate, size=16)
    return CountRecord(setting, tuple(int(c) for c in counts), int(noise.shots_per_setting), noise.dark_rate)


def witness_settings(obs: PauliObservable | None = None) -> list[str]:
    obs = obs or lin_I2_observable()
    return sorted({s.replace("I", "Z") for s in obs.strings})


def measure(rho, settings: Iterable[str], noise: NoiseModel) -> list[CountRecord]:
    return [sample_counts(rho, s, noise) for s in settings]


def dark_correct(record: CountRecord) -> CountRecord:
    """Subtract the known dark rate from every bin, flooring at zero."""
    if record.dark_rate == 0:
        return replace(record, corrected=True)
    counts = tuple(max(c - record.dark_rate, 0.0) for c in record.counts)
    return replace(record, counts=counts, corrected=True)


# -- estimators ------------------------------------------------------------------


@lru_cache(maxsize=None)
def _parity_signs(pauli: str) -> np.ndarray:
    bits = (np.arange(16)[:, None] >> np.arange(3, -1, -1)[None, :]) & 1
    active = np.array([c != "I" for c in pauli])
    return (-1.0) ** bits[:, active].sum(axis=1)


def _covers(setting: str, pauli: str) -> bool:
    return all(p == "I" or p == s for p, s in zip(pauli, setting))


def covering_record(records: Sequence[CountRecord], pauli: str) -> CountRecord:
    """Record used for ``pauli``: identity sites prefer Z, otherwise the first covering setting."""
    by_setting = {r.setting: r for r in records}
    preferred = pauli.replace("I", "Z")
    if preferred in by_setting:
        return by_setting[preferred]
    for s in sorted(by_setting):
        if _covers(s, pauli):
            return by_setting[s]
    raise MissingDataError(f"no count record covers Pauli string {pauli}")


def covering_records(records: Sequence[CountRecord], pauli: str) -> list[CountRecord]:
    return [r for r in records if _covers(r.setting, pauli)]


def expectation(records: Sequence[CountRecord], pauli: str, pooled: bool = False) -> float:
    """Parity average of ``pauli`` over a covering record.

    With ``pooled=True`` the counts of every covering record are summed first,
    which lowers the variance of strings containing identities.
    """
    if len(pauli) != 4 or set(pauli) - set("IXYZ"):
        raise ValueError(f"bad Pauli string {pauli!r}")
    if pauli == "IIII":
        return 1.0
    if pooled:
        recs = covering_records(records, pauli)
        if not recs:
            raise MissingDataError(f"no count record covers Pauli string {pauli}")
    else:
        recs = [covering_record(records, pauli)]
    counts = np.sum([r.counts for r in recs], axis=0)
    if counts.sum() <= 0:
        raise ValueError(f"no counts recorded for {pauli}")
    return float(_parity_signs(pauli) @ counts / counts.sum())


def witness_from_counts(records: Sequence[CountRecord], obs: PauliObservable | None = None
                        ) -> tuple[float, float]:
    """Witness value and its multinomial standard error.

    Terms read from the same record are combined into one per-outcome score
    before the variance is taken, so within-setting covariances are included.
    """
    obs = obs or lin_I2_observable()
    groups: dict[str, np.ndarray] = {}
    recs: dict[str, CountRecord] = {}
    for c, s in obs.terms:
        rec = covering_record(records, s)
        recs[rec.setting] = rec
        groups[rec.setting] = groups.get(rec.setting, np.zeros(16)) + c * _parity_signs(s)
    value, var = obs.constant, 0.0
    for setting, score in groups.items():
        rec = recs[setting]
        counts = np.array(rec.counts)
        n = counts.sum()
        if n <= 0:
            raise ValueError(f"record {setting} has no counts")
        p = counts / n
        mean = float(score @ p)
        value += mean
        if rec.shots is not None:
            var += float(score**2 @ p - mean**2) / n
    return float(value), float(np.sqrt(var))


def weighted_mix_counts(record_sets: Sequence[Sequence[CountRecord]], weights: Sequence[float]
                        ) -> list[CountRecord]:
    """Per-setting, per-outcome weighted sums of several count sets."""
    if len(record_sets) != len(weights) or not record_sets:
        raise ValueError("need one weight per record set")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
        raise ValueError(f"weights must be nonnegative and sum to 1, got {list(w)}")
    settings = [r.setting for r in record_sets[0]]
    for rs in record_sets[1:]:
        if [r.setting for r in rs] != settings:
            raise ValueError("record sets have different setting lists")
    out = []
    for k, s in enumerate(settings):
        rows = [rs[k] for rs in record_sets]
        counts = sum(wi * np.array(r.counts) for wi, r in zip(w, rows))
        shots = None if any(r.shots is None for r in rows) else sum(wi * r.shots for wi, r in zip(w, rows))
        shots = None if shots is None else int(round(shots))
        dark = float(sum(wi * r.dark_rate for wi, r in zip(w, rows)))
        out.append(CountRecord(s, tuple(counts), shots, dark, all(r.corrected for r in rows)))
    return out


# -- tomography ------------------------------------------------------------------


@lru_cache(maxsize=None)
def _pauli_matrix(s: str) -> np.ndarray:
    return basis.pauli_string(s)


def linear_inversion(records: Sequence[CountRecord], pooled: bool = True) -> np.ndarray:
    present = {r.setting for r in records}
    missing = [s for s in SETTINGS if s not in present]
    if missing:
        raise MissingDataError(f"tomography needs all 81 settings; missing {', '.join(missing)}")
    m = np.zeros((16, 16), dtype=complex)
    for s in ALL_PAULIS:
        m += expectation(records, s, pooled) * _pauli_matrix(s)
    return m / 16


def fqst(records: Sequence[CountRecord], pooled: bool = True) -> DensityMatrix:
    """Linear inversion over all 256 Pauli strings, then projection onto valid states."""
    return project_to_density(linear_inversion(records, pooled))


def simulate(target: str, noise: NoiseModel, task: str = "witness") -> list[CountRecord]:
    """Prepare ``target`` and measure the settings needed for ``task``."""
    rho = prep(target, noise)
    if task == "witness":
        settings = witness_settings()
    elif task == "fqst":
        settings = list(SETTINGS)
    else:
        raise ValueError(f"unknown task {task!r}")
    return measure(rho, settings, noise)
