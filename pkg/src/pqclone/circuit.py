"""
Gate-level circuits over the three-qubit register and the exhaustive search
that recovers a five-gate layout of the cloning machine.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .cloning import CloningError, clone_angles, input_state, target_output
from .quantum import H as HADAMARD
from .quantum import X as PAULI_X
from .quantum import controlled, embed, ray_distance, ry

N_QUBITS = 3
QUBIT_LABELS = "abc"
ANGLE_EXPRS = ("+alpha", "-alpha", "+beta", "-beta")
DEFAULT_GRID = (np.pi / 12, np.pi / 4, 5 * np.pi / 12)
DEFAULT_TOL = 1e-8

# (control, target) pairs in lexicographic order
PAIRS = tuple((c, t) for c in range(N_QUBITS) for t in range(N_QUBITS) if c != t)


class LayoutError(RuntimeError):
    pass


class LayoutCacheMissing(LayoutError, FileNotFoundError):
    pass


@dataclass(frozen=True)
class Gate:
    """One gate record.

    ``angle`` is either a number (radians) or one of ``ANGLE_EXPRS``, which is
    resolved against ``clone_angles(theta)`` by :func:`bind`.
    ``control_state`` is 1 for an ordinary control and 0 for an open control.
    """

    kind: str
    target: int
    control: Optional[int] = None
    angle: Union[float, str, None] = None
    control_state: int = 1

    def __post_init__(self):
        if self.kind not in ("H", "CNOT", "CRY"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = [self.target] + ([] if self.control is None else [self.control])
        if any(q not in range(N_QUBITS) for q in qubits):
            raise ValueError(f"qubit index out of range in {self}")
        if self.kind == "H":
            if self.control is not None or self.angle is not None:
                raise ValueError("H takes a single target and no angle")
            return
        if self.control is None or self.control == self.target:
            raise ValueError(f"{self.kind} needs a control distinct from its target")
        if (self.kind == "CRY") != (self.angle is not None):
            raise ValueError("CRY carries an angle; CNOT does not")
        if isinstance(self.angle, str) and self.angle not in ANGLE_EXPRS:
            raise ValueError(f"unknown angle expression {self.angle!r}")
        if self.control_state not in (0, 1):
            raise ValueError("control_state must be 0 or 1")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,) if self.control is None else (self.control, self.target)

    def angle_value(self, theta: Optional[float] = None) -> float:
        if not isinstance(self.angle, str):
            return float(self.angle)
        if theta is None:
            raise ValueError(f"angle {self.angle} needs theta")
        p = clone_angles(theta)
        mag = p.alpha if self.angle.endswith("alpha") else p.beta
        return -mag if self.angle.startswith("-") else mag

    def matrix(self, theta: Optional[float] = None) -> np.ndarray:
        """Matrix on ``self.qubits`` (control first)."""
        if self.kind == "H":
            return HADAMARD
        u = PAULI_X if self.kind == "CNOT" else ry(self.angle_value(theta))
        return controlled(u, self.control_state)

    def describe(self) -> str:
        if self.kind == "H":
            return f"H({QUBIT_LABELS[self.target]})"
        ctl = ("" if self.control_state else "~") + QUBIT_LABELS[self.control]
        ang = "" if self.angle is None else f", {self.angle}"
        return f"{self.kind}({ctl}->{QUBIT_LABELS[self.target]}{ang})"


GateCircuit = tuple  # tuple[Gate, ...]


def bind(circuit: Sequence[Gate], theta: float) -> tuple[Gate, ...]:
    """Replace symbolic angles by their numeric values at ``theta``."""
    return tuple(
        Gate(g.kind, g.target, g.control, g.angle_value(theta), g.control_state)
        if isinstance(g.angle, str) else g
        for g in circuit
    )


def gate_unitary(gate: Gate, theta: Optional[float] = None) -> np.ndarray:
    return embed(gate.matrix(theta), gate.qubits, N_QUBITS)


def circuit_unitary(circuit: Sequence[Gate], theta: Optional[float] = None) -> np.ndarray:
    u = np.eye(2**N_QUBITS, dtype=complex)
    for g in circuit:
        u = gate_unitary(g, theta) @ u
    return u


def circuit_residual(circuit: Sequence[Gate], theta: float) -> float:
    """Worst ray distance to the cloning outputs over both input signs."""
    u = circuit_unitary(circuit, theta)
    return max(ray_distance(u @ input_state(theta, s), target_output(theta, s))
               for s in (1, -1))


def circuit_phases(circuit: Sequence[Gate], theta: float) -> tuple[complex, complex]:
    """Global phase of the circuit output relative to the target, per sign."""
    u = circuit_unitary(circuit, theta)
    out = []
    for s in (1, -1):
        ov = np.vdot(target_output(theta, s), u @ input_state(theta, s))
        out.append(complex(ov / abs(ov)))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# layout search

_SLOT_KINDS = ("H", "CNOT", "CRYa", "CRYb")
_INVENTORY = ("H", "CNOT", "CNOT", "CRYa", "CRYb")


def _slot_orders() -> list[tuple[str, ...]]:
    rank = {k: i for i, k in enumerate(_SLOT_KINDS)}
    perms = set(itertools.permutations(_INVENTORY))
    return sorted(perms, key=lambda p: [rank[k] for k in p])


def _slot_options(kind: str) -> list[tuple[tuple, int]]:
    """Options for one slot as ``((target, control, control_state), sign_digit)``.

    Assignments are ordered target-first for H, then by (control, target)
    and by control polarity with the ordinary control first.
    """
    if kind == "H":
        return [((q, None, 1), 0) for q in range(N_QUBITS)]
    opts = [((t, c, pol), 0) for pol in (1, 0) for c, t in PAIRS]
    if kind == "CNOT":
        return opts
    return [(a, s) for a, _ in opts for s in (0, 1)]


def _slot_matrix(kind: str, option: tuple, sign: int, alpha: float, beta: float) -> np.ndarray:
    target, control, pol = option
    if kind == "H":
        return embed(HADAMARD, [target], N_QUBITS)
    if kind == "CNOT":
        return embed(controlled(PAULI_X, pol), [control, target], N_QUBITS)
    mag = alpha if kind == "CRYa" else beta
    ang = -mag if sign else mag
    return embed(controlled(ry(ang), pol), [control, target], N_QUBITS)


def _make_gate(kind: str, option: tuple, sign: int) -> Gate:
    target, control, pol = option
    if kind == "H":
        return Gate("H", target)
    if kind == "CNOT":
        return Gate("CNOT", target, control, None, pol)
    name = "alpha" if kind == "CRYa" else "beta"
    return Gate("CRY", target, control, ("-" if sign else "+") + name, pol)


@dataclass
class LayoutResult:
    found: bool
    circuit: tuple[Gate, ...]
    index: tuple[int, int, int]
    residual: float
    examined: int
    grid: tuple[float, ...]
    tolerance: float
    phases: dict = field(default_factory=dict)
    seconds: float = 0.0

    def summary(self) -> str:
        head = "layout found" if self.found else "no layout found; closest candidate"
        gates = " ; ".join(g.describe() for g in self.circuit)
        return f"{head}: {gates} (residual {self.residual:.3e}, {self.examined} candidates)"


def _states(theta: float):
    ins = np.stack([input_state(theta, 1), input_state(theta, -1)])
    outs = np.stack([target_output(theta, 1), target_output(theta, -1)])
    return ins, outs


def _batched_residual(v: np.ndarray, targets: np.ndarray) -> np.ndarray:
    ov = np.einsum("si,nsi->ns", targets.conj(), v)
    mag = np.abs(ov)
    lam = np.where(mag > 0, ov / np.where(mag > 0, mag, 1), 1)
    return np.linalg.norm(v - lam[..., None] * targets[None], axis=2).max(axis=1)


def _acts_nontrivially(circuit: Sequence[Gate], grid, tol: float) -> bool:
    """Every gate must move at least one input branch at some grid angle."""
    for k, g in enumerate(circuit):
        moved = False
        for theta in grid:
            pre = circuit_unitary(circuit[:k], theta)
            gk = gate_unitary(g, theta)
            for s in (1, -1):
                v = pre @ input_state(theta, s)
                if ray_distance(gk @ v, v) > tol:
                    moved = True
        if not moved:
            return False
    return True


def _search_order(order_idx: int, order: tuple[str, ...], grid, tol: float):
    """Best passing candidate (or best residual) within one slot order."""
    theta0 = grid[0]
    p0 = clone_angles(theta0)
    ins, outs = _states(theta0)
    options = [_slot_options(k) for k in order]
    v = ins[None]
    for kind, opts in zip(order, options):
        mats = np.stack([_slot_matrix(kind, o, s, p0.alpha, p0.beta) for o, s in opts])
        v = np.einsum("kij,nsj->nksi", mats, v).reshape(-1, 2, 2**N_QUBITS)
    res = _batched_residual(v, outs)
    shape = [len(o) for o in options]
    examined = res.size

    def decode(flat):
        digits = np.unravel_index(flat, shape)
        picks = [opts[d] for opts, d in zip(options, digits)]
        circuit = tuple(_make_gate(k, o, s) for k, (o, s) in zip(order, picks))
        # CRY digits interleave (assignment, sign); split them apart
        assign = [d // 2 if k.startswith("CRY") else d for k, d in zip(order, digits)]
        radix = [n // 2 if k.startswith("CRY") else n for k, n in zip(order, shape)]
        assign_idx = int(np.ravel_multi_index(assign, radix))
        sign_idx = int("".join(str(s) for k, (_, s) in zip(order, picks)
                               if k.startswith("CRY")), 2)
        return circuit, (order_idx, assign_idx, sign_idx)

    passing = []
    for flat in np.nonzero(res < tol)[0]:
        circuit, index = decode(flat)
        r = max(circuit_residual(circuit, th) for th in grid)
        if r < tol and _acts_nontrivially(circuit, grid, tol):
            passing.append((index, circuit, r))
    if passing:
        index, circuit, r = min(passing, key=lambda x: x[0])
        return True, circuit, index, r, examined
    flat = int(np.argmin(res))
    circuit, index = decode(flat)
    return False, circuit, index, float(res[flat]), examined


def search_figure1_layout(theta_grid: Iterable[float] = DEFAULT_GRID,
                          tol: float = DEFAULT_TOL, workers: int = 1) -> LayoutResult:
    """Exhaustive search for a five-gate layout {H, CNOT x2, CRY x2}.

    Candidates are ordered by (slot order, qubit assignment, angle signs);
    the first one that reproduces the cloning outputs at every grid angle,
    for both signs and with every gate acting nontrivially, is returned.
    The first grid angle filters all candidates; the rest only check the
    survivors.
    """
    grid = tuple(float(t) for t in theta_grid)
    if len(grid) < 3:
        raise LayoutError("the search grid needs at least three angles")
    if any(not (0 < t < np.pi / 2) for t in grid):
        raise LayoutError("grid angles must lie strictly inside (0, pi/2)")
    start = time.perf_counter()
    orders = _slot_orders()
    jobs = [(i, o, grid, tol) for i, o in enumerate(orders)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_search_order_star, jobs))
    else:
        results = [_search_order(*j) for j in jobs]
    examined = sum(r[4] for r in results)
    hits = [r for r in results if r[0]]
    if hits:
        ok, circuit, index, residual, _ = min(hits, key=lambda r: r[2])
    else:
        ok, circuit, index, residual, _ = min(results, key=lambda r: r[3])
    phases = {th: circuit_phases(circuit, th) for th in grid} if ok else {}
    return LayoutResult(ok, circuit, index, residual, examined, grid, tol, phases,
                        time.perf_counter() - start)


def _search_order_star(args):
    return _search_order(*args)


# ---------------------------------------------------------------------------
# layout cache file

def format_layout(circuit: Sequence[Gate], grid: Sequence[float], tol: float) -> str:
    """Serialize a layout.

    One gate per line as ``KIND control target [angle]``.  ``H`` writes ``-``
    for the control and an open control is prefixed with ``~``.
    """
    lines = ["# grid=" + ",".join(repr(float(t)) for t in grid) + f" tolerance={tol!r}"]
    for g in circuit:
        if g.kind == "H":
            ctl = "-"
        else:
            ctl = ("" if g.control_state else "~") + str(g.control)
        parts = [g.kind, ctl, str(g.target)]
        if g.angle is not None:
            parts.append(g.angle if isinstance(g.angle, str) else repr(float(g.angle)))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_layout(text: str) -> tuple[tuple[Gate, ...], tuple[float, ...], float]:
    grid, tol, gates = (), DEFAULT_TOL, []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "grid":
                    grid = tuple(float(v) for v in val.split(","))
                elif key == "tolerance":
                    tol = float(val)
            continue
        parts = line.split()
        kind, ctl, target = parts[0], parts[1], int(parts[2])
        if kind == "H":
            gates.append(Gate("H", target))
            continue
        pol = 0 if ctl.startswith("~") else 1
        angle = None
        if len(parts) > 3:
            angle = parts[3] if parts[3] in ANGLE_EXPRS else float(parts[3])
        gates.append(Gate(kind, target, int(ctl.lstrip("~")), angle, pol))
    return tuple(gates), grid, tol


def write_layout(path, circuit, grid, tol) -> None:
    Path(path).write_text(format_layout(circuit, grid, tol))


def read_layout(path) -> tuple[tuple[Gate, ...], tuple[float, ...], float]:
    path = Path(path)
    if not path.exists():
        raise LayoutCacheMissing(f"layout cache {path} not found")
    return parse_layout(path.read_text())


def default_layout_path() -> Path:
    return Path(__file__).with_name("data") / "figure1_layout.txt"


def load_layout(path=None) -> tuple[Gate, ...]:
    circuit, grid, tol = read_layout(path or default_layout_path())
    return circuit


def verify_layout(circuit: Sequence[Gate], grid: Iterable[float],
                  tol: float = DEFAULT_TOL) -> float:
    """Worst residual of ``circuit`` over ``grid``; raise if above ``tol``."""
    inventory = sorted(g.kind for g in circuit)
    if inventory != ["CNOT", "CNOT", "CRY", "CRY", "H"]:
        raise LayoutError(f"gate inventory {inventory} is not H, CNOT x2, CRY x2")
    worst = max(circuit_residual(circuit, th) for th in grid)
    if worst >= tol:
        raise LayoutError(f"layout residual {worst:.3e} exceeds {tol:.1e}")
    return worst


__all__ = [
    "Gate", "GateCircuit", "LayoutResult", "LayoutError", "LayoutCacheMissing",
    "bind", "circuit_unitary", "circuit_residual", "circuit_phases", "gate_unitary",
    "search_figure1_layout", "format_layout", "parse_layout", "write_layout",
    "read_layout", "load_layout", "verify_layout", "default_layout_path",
    "DEFAULT_GRID", "DEFAULT_TOL", "CloningError",
]
