"""
Three-spin liquid-state NMR simulation in the rotating frame.

Spins ``a, b, c`` are 1H, 13C and 19F.  The free Hamiltonian is diagonal,
``sum_i w_i Iz_i + 2 pi sum_{i<j} J_ij Iz_i Iz_j``, so free evolution is an
exact per-basis-state phase.  Pulses are instantaneous transverse
rotations.  Gates are compiled into pulses and refocused delays.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.linalg import expm

from .circuit import Gate, bind, load_layout
from .cloning import clone_angles
from .quantum import I2, MATRIX_ATOL, X, Y, Z, kron

LABELS = ("a", "b", "c")
N_SPINS = 3
DEFAULT_J = {(0, 1): 161.3, (1, 2): -192.2, (0, 2): 47.6}


class SpinError(ValueError):
    pass


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def spin_index(label: Union[str, int]) -> int:
    if isinstance(label, (int, np.integer)):
        if not 0 <= label < N_SPINS:
            raise SpinError(f"spin index {label} out of range")
        return int(label)
    try:
        return LABELS.index(label)
    except ValueError:
        raise SpinError(f"unknown spin {label!r}") from None


@dataclass(frozen=True)
class SpinSystem:
    """Rotating-frame offsets (rad/s) and scalar couplings (Hz)."""

    offsets: tuple[float, float, float] = (0.0, 0.0, 0.0)
    J_ab: float = DEFAULT_J[(0, 1)]
    J_bc: float = DEFAULT_J[(1, 2)]
    J_ac: float = DEFAULT_J[(0, 2)]

    def J(self, i, j) -> float:
        i, j = _pair(spin_index(i), spin_index(j))
        return {(0, 1): self.J_ab, (1, 2): self.J_bc, (0, 2): self.J_ac}[(i, j)]

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "SpinSystem":
        known = {"J_ab", "J_bc", "J_ac"} | {f"w_{lab}" for lab in LABELS}
        unknown = sorted(set(values) - known)
        if unknown:
            raise SpinError(f"unknown spin-system keys: {', '.join(unknown)}")
        base = cls()
        offsets = list(base.offsets)
        for k, lab in enumerate(LABELS):
            offsets[k] = float(values.get(f"w_{lab}", offsets[k]))
        return cls(tuple(offsets),
                   float(values.get("J_ab", base.J_ab)),
                   float(values.get("J_bc", base.J_bc)),
                   float(values.get("J_ac", base.J_ac)))

    @classmethod
    def from_file(cls, path) -> "SpinSystem":
        return cls.from_mapping(read_key_values(path))


def read_key_values(path) -> dict[str, str]:
    """Parse ``key = value`` (or ``key value``) lines; ``#`` starts a comment."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, val = (line.split("=", 1) if "=" in line else line.split(None, 1))
        out[key.strip()] = val.strip()
    return out


def _iz(q: int) -> np.ndarray:
    ops = [I2] * N_SPINS
    ops[q] = Z / 2
    return kron(*ops)


def hamiltonian(sys: SpinSystem) -> np.ndarray:
    h = np.zeros((2**N_SPINS, 2**N_SPINS), dtype=complex)
    for q in range(N_SPINS):
        h += sys.offsets[q] * _iz(q)
    for (i, j) in DEFAULT_J:
        h += 2 * np.pi * sys.J(i, j) * _iz(i) @ _iz(j)
    return h


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)``; exact phases when ``h`` is diagonal."""
    h = np.asarray(h, dtype=complex)
    if not np.allclose(h, h.conj().T, rtol=0, atol=MATRIX_ATOL):
        raise SpinError("Hamiltonian is not Hermitian")
    if t < 0:
        raise SpinError("evolution time must be nonnegative")
    if np.count_nonzero(h - np.diag(np.diag(h))) == 0:
        return np.diag(np.exp(-1j * np.diag(h).real * t))
    return expm(-1j * h * t)


def _act(u: np.ndarray, state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    return u @ state if state.ndim == 1 else u @ state @ u.conj().T


def evolve(state: np.ndarray, h: np.ndarray, t: float) -> np.ndarray:
    """Free evolution of a state vector or density matrix for time ``t``."""
    return _act(propagator(h, t), state)


# ---------------------------------------------------------------------------
# pulse sequences

@dataclass(frozen=True)
class Pulse:
    """Hard pulse: rotate ``targets`` by ``flip`` about ``(cos phase, sin phase, 0)``."""

    targets: tuple[int, ...]
    phase: float
    flip: float
    amplitude_error: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(sorted(spin_index(t) for t in self.targets)))
        if not -2 * np.pi < self.flip <= 2 * np.pi:
            raise SpinError(f"flip angle {self.flip} outside (-2pi, 2pi]")


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise SpinError("delay must be nonnegative")


Event = Union[Pulse, Delay]


@dataclass(frozen=True)
class PulseSequence:
    events: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(self.events + tuple(other))

    @property
    def total_duration(self) -> float:
        return float(sum(e.duration for e in self.events if isinstance(e, Delay)))

    @property
    def pulses(self) -> list[Pulse]:
        return [e for e in self.events if isinstance(e, Pulse)]

    def with_amplitude_error(self, delta: float) -> "PulseSequence":
        return PulseSequence(replace(e, amplitude_error=delta) if isinstance(e, Pulse) else e
                             for e in self.events)


RfError = Union[None, float, Mapping[Union[str, int], float]]


def _rf_error_for(pulse: Pulse, q: int, rf_error: RfError) -> float:
    if rf_error is None:
        return pulse.amplitude_error
    if isinstance(rf_error, Mapping):
        table = {spin_index(k): v for k, v in rf_error.items()}
        return float(table.get(q, 0.0))
    return float(rf_error)


def rotation(phase: float, flip: float) -> np.ndarray:
    n = np.cos(phase) * X + np.sin(phase) * Y
    return np.cos(flip / 2) * I2 - 1j * np.sin(flip / 2) * n


def pulse_unitary(pulse: Pulse, rf_error: RfError = None) -> np.ndarray:
    ops = [I2] * N_SPINS
    for q in pulse.targets:
        ops[q] = rotation(pulse.phase, pulse.flip * (1 + _rf_error_for(pulse, q, rf_error)))
    return kron(*ops)


def apply_pulse(state: np.ndarray, pulse: Pulse, rf_error: RfError = None) -> np.ndarray:
    return _act(pulse_unitary(pulse, rf_error), state)


def sequence_propagator(seq: Iterable[Event], sys: SpinSystem,
                        rf_error: RfError = None) -> np.ndarray:
    h = hamiltonian(sys)
    u = np.eye(2**N_SPINS, dtype=complex)
    for ev in seq:
        step = pulse_unitary(ev, rf_error) if isinstance(ev, Pulse) else propagator(h, ev.duration)
        u = step @ u
    return u


def simulate_sequence(seq: Iterable[Event], sys: SpinSystem, state: Optional[np.ndarray] = None,
                      rf_error: RfError = None) -> tuple[Optional[np.ndarray], np.ndarray]:
    """Run the events left to right; returns ``(output_state, propagator)``.

    ``rf_error`` overrides each pulse's own amplitude error, either globally
    (a float) or per spin (a mapping from label or index).
    """
    u = sequence_propagator(seq, sys, rf_error)
    return (None if state is None else _act(u, state)), u


# ---------------------------------------------------------------------------
# gate compilation

def _pi(spins) -> Pulse:
    return Pulse(tuple(spins), 0.0, np.pi)


def z_rotation(q: int, angle: float) -> list[Pulse]:
    """``Rz(angle)`` on spin ``q`` as two pi pulses (exact up to a sign)."""
    if abs(angle) < 1e-15:
        return []
    return [Pulse((q,), 0.0, np.pi), Pulse((q,), angle / 2, np.pi)]


def zz_block(i: int, j: int, kappa: float, sys: SpinSystem) -> list[Event]:
    """``exp(-i kappa Z_i Z_j)`` from free evolution under ``J_ij``.

    Four equal delays separated by pi pulses on the spectator and on the
    pair cancel every offset and every other coupling.  A coupling whose
    sign opposes ``kappa`` is handled by sandwiching the block between pi
    pulses on ``j``.
    """
    if abs(kappa) < 1e-15:
        return []
    J = sys.J(i, j)
    if J == 0:
        raise SpinError(f"no coupling between spins {LABELS[i]} and {LABELS[j]}")
    k = 3 - i - j
    quarter = Delay(2 * abs(kappa) / (np.pi * abs(J)) / 4)
    block = [quarter, _pi([k]), quarter, _pi([i, j]), quarter, _pi([k]), quarter, _pi([i, j])]
    if np.sign(J) != np.sign(kappa):
        block = [_pi([j])] + block + [_pi([j])]
    return block


def _controlled_rotation(control: int, target: int, control_state: int, axis_phase: float,
                         angle: float, phase: float, sys: SpinSystem) -> list[Event]:
    # controlled (e^{i phase} R_n(angle)) with n = (cos axis_phase, sin axis_phase, 0)
    s = 1.0 if control_state == 0 else -1.0
    frame = axis_phase + np.pi / 2  # rotation about z x n by pi/2 maps Z onto n.sigma
    events: list[Event] = [Pulse((target,), frame, -np.pi / 2)]
    events += zz_block(control, target, s * angle / 4, sys)
    events += [Pulse((target,), frame, np.pi / 2)]
    if angle != 0:
        events += [Pulse((target,), axis_phase, angle / 2)]
    events += z_rotation(control, -s * phase)
    return events


def compile_gate(gate: Gate, sys: SpinSystem, theta: Optional[float] = None) -> PulseSequence:
    """Hard pulses and delays implementing ``gate`` up to a global phase."""
    if isinstance(gate.angle, str):
        gate = bind([gate], theta)[0]
    if gate.kind == "H":
        # H = i Rx(pi) Ry(pi/2)
        return PulseSequence([Pulse((gate.target,), np.pi / 2, np.pi / 2),
                              Pulse((gate.target,), 0.0, np.pi)])
    if gate.kind == "CNOT":
        # X = i Rx(pi)
        ev = _controlled_rotation(gate.control, gate.target, gate.control_state,
                                  0.0, np.pi, np.pi / 2, sys)
    elif gate.kind == "CRY":
        ev = _controlled_rotation(gate.control, gate.target, gate.control_state,
                                  np.pi / 2, float(gate.angle), 0.0, sys)
    else:
        raise SpinError(f"cannot compile gate kind {gate.kind!r}")
    return PulseSequence(ev)


def compile_circuit(circuit: Sequence[Gate], sys: SpinSystem,
                    theta: Optional[float] = None) -> PulseSequence:
    seq = PulseSequence()
    for g in circuit:
        seq = seq + compile_gate(g, sys, theta)
    return seq


def preparation_pulse(theta: float, sign: int) -> Pulse:
    """``ry(sign * theta)`` on spin b."""
    return Pulse((1,), np.pi / 2, sign * theta)


def full_experiment_sequence(theta: float, sign: int, sys: Optional[SpinSystem] = None,
                             layout: Optional[Sequence[Gate]] = None) -> PulseSequence:
    """Input preparation followed by the compiled cloning layout.

    ``layout`` defaults to the packaged layout cache.
    """
    sys = sys or SpinSystem()
    clone_angles(theta)  # domain check
    layout = load_layout() if layout is None else layout
    return PulseSequence([preparation_pulse(theta, sign)]) + compile_circuit(layout, sys, theta)


# ---------------------------------------------------------------------------
# pseudo-pure state

@dataclass(frozen=True)
class PseudoPureState:
    epsilon: float
    rho: np.ndarray = field(repr=False)


def pseudo_pure(epsilon: float = 1e-5, n: int = N_SPINS) -> PseudoPureState:
    """``eps |0..0><0..0| + (1 - eps) I / 2**n``."""
    if not 0 < epsilon <= 1:
        raise SpinError(f"polarization {epsilon} outside (0, 1]")
    d = 2**n
    rho = (1 - epsilon) / d * np.eye(d, dtype=complex)
    rho[0, 0] += epsilon
    return PseudoPureState(float(epsilon), rho)


# ---------------------------------------------------------------------------
# pulse-sequence text format

def format_sequence(seq: Iterable[Event]) -> str:
    lines = []
    for ev in seq:
        if isinstance(ev, Delay):
            lines.append(f"DELAY t={ev.duration!r}")
        else:
            spins = ",".join(LABELS[q] for q in ev.targets)
            line = f"PULSE spins={spins} phase={float(ev.phase)!r} flip={float(ev.flip)!r}"
            if ev.amplitude_error:
                line += f" derr={float(ev.amplitude_error)!r}"
            lines.append(line)
    return "\n".join(lines) + "\n"


def parse_sequence(text: str) -> PulseSequence:
    events: list[Event] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *fields = line.split()
        kv = dict(f.split("=", 1) for f in fields)
        if head == "DELAY":
            events.append(Delay(float(kv["t"])))
        elif head == "PULSE":
            spins = [s for s in kv["spins"].replace(",", "") if s.strip()]
            events.append(Pulse(tuple(spins), float(kv["phase"]), float(kv["flip"]),
                                float(kv.get("derr", 0.0))))
        else:
            raise SpinError(f"line {lineno}: unknown event {head!r}")
    return PulseSequence(events)


def write_sequence(path, seq: Iterable[Event], header: str = "") -> None:
    text = "".join(f"# {h}\n" for h in header.splitlines()) + format_sequence(seq)
    Path(path).write_text(text)


def read_sequence(path) -> PulseSequence:
    return parse_sequence(Path(path).read_text())
