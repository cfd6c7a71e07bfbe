"""Noisy mixtures of GHZ basis states and their separability classes.

``rho = noise * 1/16 + sum_i w_i |GHZ_i><GHZ_i|``.  Each state is labelled by
the strongest criterion that fires (I2 > I3 > I4) and carries a separate
partial-transpose report over the seven bipartitions.
"""

from __future__ import annotations

import enum
import io
import logging
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from . import basis
from .qmath import DensityMatrix, as_matrix, partial_transpose
from .witnesses import (
    BIPARTITION_PAIRS,
    NORMALIZED,
    adapt,
    best_k_report,
)

log = logging.getLogger(__name__)

CLASS_TOL = 1e-10
PT_TOL = 1e-10
BIPARTITIONS = tuple(BIPARTITION_PAIRS)


class RegionClass(str, enum.Enum):
    GME = "GME"
    NOT3SEP = "NOT3SEP"
    NOT4SEP = "NOT4SEP"
    UNDETECTED = "UNDETECTED"

    @property
    def rank(self) -> int:
        return {"UNDETECTED": 0, "NOT4SEP": 1, "NOT3SEP": 2, "GME": 3}[self.value]


COLORS = {
    RegionClass.GME: "#d62728",
    RegionClass.NOT3SEP: "#ff8c00",
    RegionClass.NOT4SEP: "#ffd700",
    RegionClass.UNDETECTED: "#000000",
}

LEGEND = {
    RegionClass.GME: "not biseparable (I2 > 0)",
    RegionClass.NOT3SEP: "biseparable, not 3-separable (I3 > 0)",
    RegionClass.NOT4SEP: "3-separable, not 4-separable (I4 > 0)",
    RegionClass.UNDETECTED: "all I_k <= 0",
}


@dataclass(frozen=True)
class MixtureSpec:
    components: tuple[tuple[str, float], ...]
    noise_weight: float = 0.0

    def __post_init__(self):
        comps = tuple((basis.check_label(b), float(w)) for b, w in self.components)
        object.__setattr__(self, "components", comps)
        weights = [w for _, w in comps] + [float(self.noise_weight)]
        if any(w < -1e-12 for w in weights):
            raise ValueError(f"mixture weights must be nonnegative, got {weights}")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {sum(weights)!r}, expected 1")

    @classmethod
    def of(cls, weights: dict[str, float]) -> MixtureSpec:
        """Components from a label->weight mapping; the remainder is white noise."""
        total = sum(weights.values())
        return cls(tuple(weights.items()), max(0.0, 1.0 - total))


def mix(spec: MixtureSpec) -> DensityMatrix:
    m = spec.noise_weight * np.eye(16, dtype=complex) / 16
    for label, w in spec.components:
        v = basis.basis_state(label).amps
        m = m + w * np.outer(v, v.conj())
    return DensityMatrix(m)


def noisy_ghz(label: str, alpha: float) -> DensityMatrix:
    return mix(MixtureSpec(((label, alpha),), 1.0 - alpha))


@dataclass(frozen=True)
class PptReport:
    min_eigs: dict[tuple[int, ...], float]
    ppt_all: bool
    pt_invariant: bool

    @property
    def min_eig(self) -> float:
        return min(self.min_eigs.values())


def ppt_report(rho) -> PptReport:
    m = as_matrix(rho)
    mins = {}
    invariant = True
    for cut in BIPARTITIONS:
        pt = partial_transpose(m, cut)
        mins[cut] = float(np.linalg.eigvalsh((pt + pt.conj().T) / 2)[0])
        invariant = invariant and float(np.max(np.abs(pt - m))) < PT_TOL
    ppt_all = all(v >= -PT_TOL for v in mins.values())
    return PptReport(mins, ppt_all, invariant)


def region_of(i2: float, i3: float, i4: float, tol: float = CLASS_TOL) -> RegionClass:
    if i2 > tol:
        return RegionClass.GME
    if i3 > tol:
        return RegionClass.NOT3SEP
    if i4 > tol:
        return RegionClass.NOT4SEP
    return RegionClass.UNDETECTED


def classify(rho, variant: str = NORMALIZED):
    """Return ``(RegionClass, PptReport, WitnessReport)`` for a four-qubit state."""
    rep = best_k_report(rho, variant)
    return region_of(rep.i2, rep.i3, rep.i4), ppt_report(rho), rep


# -- thresholds ------------------------------------------------------------------

CRITERIA = ("I2", "I2-as-printed", "I3", "I4", "linI2")


def noise_threshold(criterion: str, label: str = "0000", tol: float = 1e-12) -> float:
    """Smallest GHZ weight alpha at which ``criterion`` turns positive on alpha*GHZ + (1-alpha)/16.

    Bisection on [0, 1]; the criterion is adapted to ``label``.
    """
    f = adapt(criterion, label)

    def g(a):
        return f(noisy_ghz(label, a))

    lo, hi = 0.0, 1.0
    if g(lo) > 0 or g(hi) <= 0:
        raise ValueError(f"{criterion} does not change sign on the noisy GHZ_{label} family")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# -- scans -----------------------------------------------------------------------


@dataclass(frozen=True)
class ScanNode:
    alpha: float
    beta: float
    gamma: float
    noise: float
    cls: RegionClass
    i2: float
    i3: float
    i4: float
    min_pt_eig: float
    pt_invariant: bool = False


@dataclass
class Scan:
    labels: tuple[str, ...]
    resolution: int
    nodes: list[ScanNode] = field(default_factory=list)
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def at(self, alpha: float, beta: float, gamma: float = 0.0) -> ScanNode:
        r = self.resolution
        key = (round(alpha * r), round(beta * r), round(gamma * r))
        if len(self._index) != len(self.nodes):
            self._index = {(round(n.alpha * r), round(n.beta * r), round(n.gamma * r)): n
                           for n in self.nodes}
        try:
            return self._index[key]
        except KeyError:
            raise KeyError(f"no grid node at {(alpha, beta, gamma)}") from None

    def classes(self) -> set[RegionClass]:
        return {n.cls for n in self.nodes}


def _node(weights: dict[str, float], coords: tuple[float, float, float]) -> ScanNode:
    spec = MixtureSpec.of({k: v for k, v in weights.items() if v > 0})
    rho = mix(spec)
    cls, ppt, rep = classify(rho)
    return ScanNode(*coords, spec.noise_weight, cls, rep.i2, rep.i3, rep.i4, ppt.min_eig, ppt.pt_invariant)


def _check_resolution(resolution: int) -> int:
    if int(resolution) < 2:
        raise ValueError("resolution must be at least 2")
    return int(resolution)


def _weights(labels, values) -> dict[str, float]:
    w: dict[str, float] = {}
    for b, v in zip(labels, values):
        w[b] = w.get(b, 0.0) + v
    return w


def scan_binary(label_a: str, label_b: str, resolution: int) -> Scan:
    """Classify alpha*GHZ_a + beta*GHZ_b + noise on the grid alpha, beta = i/R with alpha + beta <= 1."""
    r = _check_resolution(resolution)
    labels = (basis.check_label(label_a), basis.check_label(label_b))
    scan = Scan(labels, r)
    for i in range(r + 1):
        for j in range(r + 1 - i):
            a, b = i / r, j / r
            scan.nodes.append(_node(_weights(labels, (a, b)), (a, b, 0.0)))
    return scan


def scan_ternary(label_a: str, label_b: str, label_c: str, resolution: int) -> Scan:
    """Same as :func:`scan_binary` over the (alpha, beta, gamma) simplex.

    The expected layout is a twin pair (a, b) plus a third label twinned with
    neither; other layouts are scanned as given but logged.
    """
    r = _check_resolution(resolution)
    labels = tuple(basis.check_label(x) for x in (label_a, label_b, label_c))
    if not (basis.is_twin_pair(labels[0], labels[1]) and labels[2] not in labels[:2]
            and basis.twin_of(labels[2]) not in labels[:2]):
        log.warning("labels %s are not (twin, twin, un-twin)", labels)
    scan = Scan(labels, r)
    for i in range(r + 1):
        for j in range(r + 1 - i):
            for k in range(r + 1 - i - j):
                a, b, c = i / r, j / r, k / r
                scan.nodes.append(_node(_weights(labels, (a, b, c)), (a, b, c)))
    return scan


# -- output ----------------------------------------------------------------------

CSV_HEADER = "alpha,beta,gamma,noise,class,i2,i3,i4,min_pt_eig"


def fmt(x: float) -> str:
    """Shortest form up to 12 significant digits, no negative zero."""
    s = format(float(x) + 0.0, ".12g")
    return "0" if s == "-0" else s


def to_csv(scan: Scan) -> str:
    buf = io.StringIO(newline="")
    buf.write(CSV_HEADER + "\n")
    for n in scan.nodes:
        row = [fmt(n.alpha), fmt(n.beta), fmt(n.gamma), fmt(n.noise), n.cls.value,
               fmt(n.i2), fmt(n.i3), fmt(n.i4), fmt(n.min_pt_eig)]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def _panel(out: list, nodes, r: int, x0: float, y0: float, size: float, title: str) -> None:
    cell = size / (r + 1)
    out.append(f'<g transform="translate({x0:.3f},{y0:.3f})">')
    out.append(f'<text x="0" y="-8" font-size="12">{title}</text>')
    out.append(f'<rect x="0" y="0" width="{size:.3f}" height="{size:.3f}" fill="#eeeeee"/>')
    for n in nodes:
        i, j = round(n.alpha * r), round(n.beta * r)
        x = i * cell
        y = size - (j + 1) * cell
        out.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{cell:.3f}" height="{cell:.3f}" '
                   f'fill="{COLORS[n.cls]}"/>')
    out.append(f'<text x="{size / 2:.3f}" y="{size + 16:.3f}" font-size="12" text-anchor="middle">alpha</text>')
    out.append(f'<text x="-14" y="{size / 2:.3f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 -14 {size / 2:.3f})">beta</text>')
    out.append("</g>")


def to_svg(scan: Scan) -> str:
    """Raster of region classes; ternary scans are drawn as slices of fixed gamma."""
    r = scan.resolution
    size = 400.0
    margin = 40.0
    if len(scan.labels) == 2:
        slices = [(0, scan.nodes)]
    else:
        ks = sorted({round(r * t / 6) for t in range(6)})
        slices = [(k, [n for n in scan.nodes if round(n.gamma * r) == k]) for k in ks]
    cols = min(3, len(slices))
    rows = -(-len(slices) // cols)
    legend_h = 20.0 * (len(COLORS) + 1)
    width = margin + cols * (size + margin)
    height = margin + rows * (size + 2 * margin) + legend_h
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}" font-family="sans-serif">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>',
    ]
    names = " + ".join(f"GHZ_{b}" for b in scan.labels)
    out.append(f'<text x="{margin:.0f}" y="20" font-size="14">{names} + white noise, resolution {r}</text>')
    for idx, (k, nodes) in enumerate(slices):
        x0 = margin + (idx % cols) * (size + margin)
        y0 = 2 * margin + (idx // cols) * (size + 2 * margin)
        title = "" if len(scan.labels) == 2 else f"gamma = {fmt(k / r)}"
        _panel(out, nodes, r, x0, y0, size, title)
    ly = height - legend_h + 10
    for n, (cls, color) in enumerate(COLORS.items()):
        y = ly + 20 * n
        out.append(f'<rect x="{margin:.0f}" y="{y:.0f}" width="14" height="14" fill="{color}" stroke="#444444"/>')
        text = escape(f"{cls.value}: {LEGEND[cls]}")
        out.append(f'<text x="{margin + 22:.0f}" y="{y + 12:.0f}" font-size="12">{text}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
