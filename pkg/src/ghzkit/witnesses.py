"""k-separability criteria for four-qubit states and the linear GHZ witness.

The nonlinear criteria read a 16x16 density matrix through the coherence
``|rho[1,16]|`` and products of diagonal elements (1-based indices).  A state
that is k-separable has ``I_k <= 0``; a positive value certifies
k-inseparability.  Every criterion is tuned to GHZ_0000 and can be re-targeted
at any other basis label through the local Pauli operator that maps that label
onto GHZ_0000.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import basis
from .qmath import as_matrix

NORMALIZED = "normalized"
AS_PRINTED = "as-printed"
VARIANTS = (NORMALIZED, AS_PRINTED)

# bipartition -> 1-based diagonal pair (a, 17 - a)
BIPARTITION_PAIRS = {
    (1,): (8, 9),
    (2,): (5, 12),
    (3,): (3, 14),
    (4,): (2, 15),
    (1, 2): (4, 13),
    (1, 3): (6, 11),
    (1, 4): (7, 10),
}

I3_SEXTUPLES = (
    (2, 3, 4, 13, 14, 15),
    (2, 5, 6, 11, 12, 15),
    (2, 7, 8, 9, 10, 15),
    (3, 5, 7, 10, 12, 14),
    (3, 6, 8, 9, 11, 14),
    (4, 5, 8, 9, 12, 13),
)

I4_OCTUPLE = (2, 3, 5, 8, 9, 12, 14, 15)

_PAIRS0 = np.array(list(BIPARTITION_PAIRS.values())) - 1
_SEXT0 = np.array(I3_SEXTUPLES) - 1
_OCT0 = np.array(I4_OCTUPLE) - 1


class MissingDataError(ValueError):
    """An expectation value or count record required by an evaluation is absent."""


def _check16(m: np.ndarray) -> np.ndarray:
    if m.shape != (16, 16):
        raise ValueError(f"criteria need a 16x16 matrix, got {m.shape}")
    return m


# -- core evaluations on (coherence, diagonal) ---------------------------------


def _i2(coh: float, diag: np.ndarray, variant: str = NORMALIZED) -> float:
    pair_sum = np.sum(np.sqrt(diag[_PAIRS0[:, 0]] * diag[_PAIRS0[:, 1]]))
    if variant == NORMALIZED:
        return float(2 * (coh - pair_sum))
    if variant == AS_PRINTED:
        return float(2 * coh - pair_sum)
    raise ValueError(f"unknown I2 variant {variant!r}")


def _i3(coh: float, diag: np.ndarray) -> float:
    return float(2 * coh - np.sum(np.prod(diag[_SEXT0], axis=1) ** (1 / 6)))


def _i4(coh: float, diag: np.ndarray) -> float:
    return float(2 * coh - 2 * np.prod(diag[_OCT0]) ** (1 / 8))


def _flip_mask(label: str) -> int:
    """XOR mask of computational indices under the Pauli string for ``label``."""
    letters = basis.label_letters(label)
    return int("".join("1" if c in "XY" else "0" for c in letters), 2)


def _adapted_parts(m: np.ndarray, label: str) -> tuple[float, np.ndarray]:
    # P rho P with P a Pauli string permutes indices by XOR and only adds phases
    mask = _flip_mask(label)
    perm = np.arange(16) ^ mask
    diag = np.clip(np.diag(m).real[perm], 0.0, None)
    return float(abs(m[mask, 15 ^ mask])), diag


def eval_I2(rho, variant: str = NORMALIZED, adapt_to: str = "0000") -> float:
    return _i2(*_adapted_parts(_check16(as_matrix(rho)), adapt_to), variant)


def eval_I3(rho, adapt_to: str = "0000") -> float:
    return _i3(*_adapted_parts(_check16(as_matrix(rho)), adapt_to))


def eval_I4(rho, adapt_to: str = "0000") -> float:
    return _i4(*_adapted_parts(_check16(as_matrix(rho)), adapt_to))


# -- Pauli observables ---------------------------------------------------------


@dataclass(frozen=True)
class PauliObservable:
    """``sum_j c_j <P_j> + constant`` with P_j four-letter Pauli strings."""

    terms: tuple[tuple[float, str], ...]
    constant: float = 0.0

    def __post_init__(self):
        for c, s in self.terms:
            if len(s) != 4 or set(s) - set("IXYZ"):
                raise ValueError(f"bad Pauli string {s!r}")
            if s == "IIII":
                raise ValueError("put the identity contribution in 'constant'")
            if not np.isreal(c):
                raise ValueError("coefficients must be real")

    @property
    def strings(self) -> list[str]:
        return [s for _, s in self.terms]

    def matrix(self) -> np.ndarray:
        m = self.constant * np.eye(16, dtype=complex)
        for c, s in self.terms:
            m = m + c * basis.pauli_string(s)
        return m

    def evaluate(self, rho) -> float:
        m = as_matrix(rho)
        return float(np.real(np.sum(self.matrix() * m.T)))

    def conjugated(self, letters: str) -> PauliObservable:
        """Observable ``P O P`` for a Pauli string P: each term flips sign per anticommuting site."""
        terms = []
        for c, s in self.terms:
            anti = sum(1 for a, b in zip(s, letters) if a != "I" and b != "I" and a != b)
            terms.append((c * (-1) ** anti, s))
        return PauliObservable(tuple(terms), self.constant)

    def to_json(self) -> dict:
        return {"constant": self.constant, "terms": [[c, s] for c, s in self.terms]}


def lin_I2_observable() -> PauliObservable:
    xy = [
        (1, "XXXX"), (-1, "YYXX"), (-1, "YXYX"), (-1, "XYYX"),
        (-1, "XXYY"), (-1, "XYXY"), (-1, "YXXY"), (1, "YYYY"),
    ]
    z = ["ZZII", "ZIIZ", "ZIZI", "IIZZ", "IZIZ", "IZZI", "ZZZZ"]
    terms = tuple((s / 8, p) for s, p in xy) + tuple((1 / 8, p) for p in z)
    return PauliObservable(terms, -7 / 8)


@lru_cache(maxsize=None)
def _lin_matrix(label: str) -> np.ndarray:
    m = adapt(lin_I2_observable(), label).matrix()
    m.setflags(write=False)
    return m


def eval_lin_I2(rho, adapt_to: str = "0000") -> float:
    m = _check16(as_matrix(rho))
    return float(np.real(np.sum(_lin_matrix(basis.check_label(adapt_to)) * m.T)))


def adapt(criterion, target: str):
    """Re-target a witness at basis label ``target``.

    A :class:`PauliObservable` comes back as a conjugated observable.  A
    criterion name (``"I2"``, ``"I2-as-printed"``, ``"I3"``, ``"I4"``,
    ``"linI2"``) or one of the ``eval_*`` functions comes back as a callable
    ``rho -> float``.
    """
    basis.check_label(target)
    if isinstance(criterion, PauliObservable):
        return criterion.conjugated(basis.label_letters(target))
    fns: dict = {
        "I2": lambda r: eval_I2(r, NORMALIZED, target),
        "I2-as-printed": lambda r: eval_I2(r, AS_PRINTED, target),
        "I3": lambda r: eval_I3(r, target),
        "I4": lambda r: eval_I4(r, target),
        "linI2": lambda r: eval_lin_I2(r, target),
    }
    by_fn = {eval_I2: "I2", eval_I3: "I3", eval_I4: "I4", eval_lin_I2: "linI2"}
    key = by_fn.get(criterion, criterion)
    if key not in fns:
        raise ValueError(f"cannot adapt {criterion!r}")
    return fns[key]


def eval_from_expectations(obs: PauliObservable, record: Mapping[str, float]) -> float:
    total = obs.constant
    for c, s in obs.terms:
        if s not in record:
            raise MissingDataError(f"no expectation value for Pauli string {s}")
        total += c * float(record[s])
    return float(total)


def required_settings(obs: PauliObservable) -> list[str]:
    """Measurement settings covering ``obs``; identity sites are read from Z settings."""
    return sorted({s.replace("I", "Z") for s in obs.strings})


def measurement_budget(task: str) -> int:
    outcomes = 2**4
    if task == "witness":
        return len(required_settings(lin_I2_observable())) * outcomes
    if task == "fqst":
        return 3**4 * outcomes
    if task == "single-setting":
        return outcomes
    raise ValueError(f"unknown task {task!r}")


# -- reports -------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessReport:
    i2: float
    i3: float
    i4: float
    lin_i2: float
    adapted_to: str
    variant: str = NORMALIZED

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def witness_report(rho, adapt_to: str = "0000", variant: str = NORMALIZED) -> WitnessReport:
    """All four values for a single fixed adaptation."""
    m = _check16(as_matrix(rho))
    coh, diag = _adapted_parts(m, adapt_to)
    return WitnessReport(
        i2=_i2(coh, diag, variant),
        i3=_i3(coh, diag),
        i4=_i4(coh, diag),
        lin_i2=eval_lin_I2(m, adapt_to),
        adapted_to=adapt_to,
        variant=variant,
    )


@lru_cache(maxsize=None)
def _stacked() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    masks = np.array([_flip_mask(b) for b in basis.LABELS])
    perms = np.arange(16)[None, :] ^ masks[:, None]
    lins = np.stack([_lin_matrix(b) for b in basis.LABELS])
    return masks, perms, lins


def _sweep(m: np.ndarray, variant: str) -> dict[str, np.ndarray]:
    """All four criteria for all sixteen adaptations at once, in LABELS order."""
    masks, perms, lins = _stacked()
    coh = np.abs(m[masks, 15 ^ masks])
    diag = np.clip(np.diag(m).real, 0.0, None)[perms]
    pair_sum = np.sum(np.sqrt(diag[:, _PAIRS0[:, 0]] * diag[:, _PAIRS0[:, 1]]), axis=1)
    if variant == NORMALIZED:
        i2 = 2 * (coh - pair_sum)
    elif variant == AS_PRINTED:
        i2 = 2 * coh - pair_sum
    else:
        raise ValueError(f"unknown I2 variant {variant!r}")
    return {
        "i2": i2,
        "i3": 2 * coh - np.sum(np.prod(diag[:, _SEXT0], axis=2) ** (1 / 6), axis=1),
        "i4": 2 * coh - 2 * np.prod(diag[:, _OCT0], axis=1) ** (1 / 8),
        "lin_i2": np.einsum("kij,ji->k", lins, m).real,
    }


def adaptation_table(rho, variant: str = NORMALIZED) -> dict[str, WitnessReport]:
    sweep = _sweep(_check16(as_matrix(rho)), variant)
    return {
        b: WitnessReport(*(float(sweep[k][n]) for k in ("i2", "i3", "i4", "lin_i2")), b, variant)
        for n, b in enumerate(basis.LABELS)
    }


def best_k_report(rho, variant: str = NORMALIZED) -> WitnessReport:
    """Each criterion maximized over the sixteen adaptations.

    ``adapted_to`` is the label maximizing I2; ties go to the larger linear
    witness (which separates twins) and then to the lowest label.
    """
    sweep = _sweep(_check16(as_matrix(rho)), variant)
    i2, lin = sweep["i2"], sweep["lin_i2"]
    best = max(range(16), key=lambda n: (i2[n], lin[n], -n))
    return WitnessReport(
        i2=float(i2.max()),
        i3=float(sweep["i3"].max()),
        i4=float(sweep["i4"].max()),
        lin_i2=float(lin.max()),
        adapted_to=basis.LABELS[best],
        variant=variant,
    )
