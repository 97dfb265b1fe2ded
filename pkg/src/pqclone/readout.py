"""
Carbon-channel readout and the efficiency / Bloch / fidelity estimators.

A clone qubit is read on spin ``b``; reading ``c`` first swaps ``b`` and
``c`` logically.  The readout spectrum has four lines labelled by the
logical states ``(h, f)`` of the probe and of the other clone.  Lines with
``h = 0`` form the success group, ``h = 1`` the failure group.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .quantum import (I2, P0, P1, X, Y, BlochVector, from_bloch, kron, partial_trace,
                      ry)
from .spin import SpinSystem, pseudo_pure, spin_index

# spectator labels of lines 1..4, ascending frequency
PEAK_LABELS = ((1, 0), (0, 0), (1, 1), (0, 1))
SUCCESS_PEAKS = (2, 4)
FAILURE_PEAKS = (1, 3)
ACQUISITIONS = ("xy", "z")
READOUT_SPIN = 1
GAMMA_FLOOR = 1e-12

_SWAP_BC = np.eye(8)[:, [0, 2, 1, 3, 4, 6, 5, 7]]
_RAISE = X + 1j * Y


class ReadoutError(ValueError):
    pass


def peak_offset(h: int, f: int, sys: Optional[SpinSystem] = None) -> float:
    """Line position (Hz) of the readout spin with spectators ``h, f``."""
    sys = sys or SpinSystem()
    return ((-1) ** h * sys.J("a", "b") + (-1) ** f * sys.J("b", "c")) / 2


def peak_order(sys: Optional[SpinSystem] = None) -> list[tuple[int, int]]:
    """Spectator labels sorted by ascending line position."""
    labels = [(h, f) for h in (0, 1) for f in (0, 1)]
    return sorted(labels, key=lambda hf: peak_offset(*hf, sys))


@dataclass(frozen=True)
class PeakSet:
    """Complex integrals of the four lines, keyed by ``(h, f)``."""

    integrals: dict
    acquisition: str
    offsets: dict = field(default_factory=dict)

    def numbered(self, k: int) -> complex:
        """Integral of line ``k`` in 1..4 (left-to-right numbering)."""
        return self.integrals[PEAK_LABELS[k - 1]]


@dataclass(frozen=True)
class GroupedSignals:
    """Real signals ``P[k-1, mu]`` for lines ``k = 1..4`` and axes ``x, y, z``."""

    P: np.ndarray

    @classmethod
    def from_peaks(cls, xy: PeakSet, z: PeakSet) -> "GroupedSignals":
        P = np.zeros((4, 3))
        for k in range(1, 5):
            P[k - 1, 0] = xy.numbered(k).real
            P[k - 1, 1] = xy.numbered(k).imag
            P[k - 1, 2] = z.numbered(k).real
        return cls(P)

    def group(self, peaks=SUCCESS_PEAKS) -> np.ndarray:
        return self.P[[k - 1 for k in peaks]]


def _bring_to_readout(rho: np.ndarray, observed: int) -> np.ndarray:
    if observed == READOUT_SPIN:
        return rho
    return _SWAP_BC @ rho @ _SWAP_BC.T


def _z_readout_pulse() -> np.ndarray:
    # maps <sigma_z> onto <sigma_x> of the readout spin: |0> -> |+>
    return kron(I2, ry(np.pi / 2), I2)


def raw_peak_integrals(rho: np.ndarray, observed, acquisition: str) -> dict:
    observed = spin_index(observed)
    if observed == 0:
        raise ReadoutError("the probe qubit is a group label, not a readout target")
    if acquisition not in ACQUISITIONS:
        raise ReadoutError(f"unknown acquisition {acquisition!r}")
    r = _bring_to_readout(np.asarray(rho, dtype=complex), observed)
    if acquisition == "z":
        u = _z_readout_pulse()
        r = u @ r @ u.conj().T
    proj = (P0, P1)
    return {(h, f): complex(np.trace(r @ kron(proj[h], _RAISE, proj[f])))
            for h in (0, 1) for f in (0, 1)}


def reference_signal(epsilon: float) -> float:
    """``|00>`` line of the pseudo-pure state under z acquisition; defines unit signal."""
    return raw_peak_integrals(pseudo_pure(epsilon).rho, READOUT_SPIN, "z")[(0, 0)].real


def peak_integrals(rho: np.ndarray, observed, acquisition: str, reference: float = 1.0,
                   sys: Optional[SpinSystem] = None) -> PeakSet:
    """Four line integrals of ``observed`` (``b`` or ``c``) in reference units.

    ``xy`` records ``Tr[rho (|h><h| x (sigma_x + i sigma_y) x |f><f|)]``;
    ``z`` applies a pi/2 readout pulse first and keeps the x component.
    """
    raw = raw_peak_integrals(rho, observed, acquisition)
    ints = {k: v / reference for k, v in raw.items()}
    if acquisition == "z":
        ints = {k: complex(v.real, 0.0) for k, v in ints.items()}
    offsets = {hf: peak_offset(*hf, sys) for hf in ints}
    return PeakSet(ints, acquisition, offsets)


def grouped_signals(rho: np.ndarray, observed, reference: float = 1.0) -> GroupedSignals:
    return GroupedSignals.from_peaks(peak_integrals(rho, observed, "xy", reference),
                                     peak_integrals(rho, observed, "z", reference))


def efficiency_from_signals(sig: GroupedSignals) -> float:
    """Success probability from the success-group lines.

    Per axis the absolute line intensities are summed; the efficiency is the
    Euclidean norm of the three sums.
    """
    P = np.abs(sig.group(SUCCESS_PEAKS)).sum(axis=0)
    return float(np.sqrt(np.sum(P**2)))


def bloch_from_signals(sig: GroupedSignals, gamma: float,
                       peaks=SUCCESS_PEAKS) -> Optional[BlochVector]:
    """Signed line sums divided by ``gamma``; ``None`` when ``gamma`` vanishes."""
    if gamma <= GAMMA_FLOOR:
        return None
    r = sig.group(peaks).sum(axis=0) / gamma
    return BlochVector(*(float(v) for v in r))


def fidelity_from_bloch(r: BlochVector, theta: float, sign: int) -> float:
    return 0.5 * (1 + np.sin(sign * theta) * r.rx + np.cos(theta) * r.rz)


@dataclass(frozen=True)
class Tomogram:
    rho: np.ndarray
    bloch: BlochVector
    projection: float  # radial distance removed to land in the unit ball


def tomography_single_qubit(px: float, py: float, pz: float) -> Tomogram:
    """Linear inversion ``rho = (I + r.sigma)/2``, projecting ``|r| > 1`` onto the sphere."""
    r = np.array([px, py, pz], dtype=float)
    n = np.linalg.norm(r)
    moved = 0.0
    if n > 1:
        moved = float(n - 1)
        r = r / n
    b = BlochVector(*(float(v) for v in r))
    return Tomogram(from_bloch(b), b, moved)


def success_probability(rho: np.ndarray) -> float:
    """Direct probe population in ``|0>`` (independent of the line estimators)."""
    return float(partial_trace(rho, [0])[0, 0].real)
