"""
Dense linear algebra for small qubit registers.

States are plain numpy arrays: a pure state of ``n`` qubits is a complex
vector of length ``2**n`` and a mixed state is a ``2**n x 2**n`` matrix.
Qubit 0 is the most significant bit, so ``|abc>`` has index ``4a + 2b + c``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

ATOL = 1e-12
MATRIX_ATOL = 1e-10
EMPTY_BRANCH_ATOL = 1e-14

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = (X, Y, Z)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)


class QuantumError(ValueError):
    """Raised on malformed states, gates or qubit indices."""


@dataclass(frozen=True)
class BlochVector:
    rx: float
    ry: float
    rz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.rx, self.ry, self.rz])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))


def n_qubits_of(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if n < 1 or 2**n != dim:
        raise QuantumError(f"dimension {dim} is not a power of two")
    return n


def ket(bits: str) -> np.ndarray:
    """Computational basis state from a bit string, e.g. ``ket("010")``."""
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi


def dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def kron(*ops: np.ndarray) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def ry(angle: float) -> np.ndarray:
    """Rotation about y with ``ry(t) |0> = cos(t/2)|0> + sin(t/2)|1>``."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rx(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def controlled(u: np.ndarray, control_state: int = 1) -> np.ndarray:
    """Two-qubit controlled gate, control first; ``control_state=0`` is an open control."""
    on, off = (P1, P0) if control_state == 1 else (P0, P1)
    return np.kron(off, I2) + np.kron(on, u)


def is_unitary(u: np.ndarray, atol: float = MATRIX_ATOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), rtol=0, atol=atol
    )


def is_density_matrix(rho: np.ndarray, atol: float = MATRIX_ATOL) -> bool:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if not np.allclose(rho, rho.conj().T, rtol=0, atol=atol):
        return False
    if abs(np.trace(rho) - 1) > atol:
        return False
    return bool(np.linalg.eigvalsh(rho).min() >= -atol)


def _check_targets(targets: Sequence[int], n: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise QuantumError(f"repeated target index in {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise QuantumError(f"target {t} out of range for {n} qubits")
    return targets


def embed(gate: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full ``2**n`` matrix of ``gate`` acting on ``targets`` (identity elsewhere)."""
    eye = np.eye(2**n, dtype=complex)
    cols = [apply_gate(eye[:, j], gate, targets, normalize_check=False) for j in range(2**n)]
    return np.stack(cols, axis=1)


def apply_gate(state: np.ndarray, gate: np.ndarray, targets: Sequence[int],
               normalize_check: bool = True) -> np.ndarray:
    """Apply ``gate`` to the listed qubits of a state vector.

    The first entry of ``targets`` is the most significant qubit of ``gate``.
    """
    state = np.asarray(state, dtype=complex)
    gate = np.asarray(gate, dtype=complex)
    n = n_qubits_of(state.size)
    targets = _check_targets(targets, n)
    k = len(targets)
    if gate.shape != (2**k, 2**k):
        raise QuantumError(f"gate of shape {gate.shape} cannot act on {k} qubit(s)")
    if normalize_check and abs(np.vdot(state, state).real - 1) > 1e-10:
        raise QuantumError("input state is not normalized")
    psi = state.reshape([2] * n)
    g = gate.reshape([2] * (2 * k))
    psi = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), targets))
    # tensordot puts the gate outputs first; move them back in place
    rest = [q for q in range(n) if q not in targets]
    order = np.argsort(targets + rest)
    return np.transpose(psi, order).reshape(-1)


def partial_trace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits_of(rho.shape[0])
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise QuantumError("keep set must be nonempty")
    _check_targets(keep, n)
    t = rho.reshape([2] * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = [letters[n + q] if q in keep else row[q] for q in range(n)]
    out = [row[q] for q in keep] + [col[q] for q in keep]
    expr = "".join(row) + "".join(col) + "->" + "".join(out)
    d = 2 ** len(keep)
    return np.einsum(expr, t).reshape(d, d)


def post_select(state: np.ndarray, qubit: int, outcome: int
                ) -> tuple[float, Optional[np.ndarray]]:
    """Project ``qubit`` onto ``outcome`` and drop it from the register.

    Returns ``(probability, conditional_state)``.  The conditional state is
    ``None`` when the branch is empty (probability below 1e-14).
    """
    state = np.asarray(state, dtype=complex)
    n = n_qubits_of(state.size)
    _check_targets([qubit], n)
    if outcome not in (0, 1):
        raise QuantumError(f"outcome must be 0 or 1, got {outcome}")
    branch = np.take(state.reshape([2] * n), outcome, axis=qubit).reshape(-1)
    prob = float(np.vdot(branch, branch).real)
    if prob < EMPTY_BRANCH_ATOL:
        return prob, None
    return prob, branch / np.sqrt(prob)


def fidelity_pure(rho0: np.ndarray, rho: np.ndarray) -> float:
    """``Tr(rho0 rho)`` for a pure reference state ``rho0``."""
    rho0 = np.asarray(rho0, dtype=complex)
    if abs(np.trace(rho0 @ rho0).real - 1) > MATRIX_ATOL:
        raise QuantumError("reference state is not pure")
    return float(np.trace(rho0 @ rho).real)


def bloch_of(rho: np.ndarray) -> BlochVector:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise QuantumError("bloch_of expects a single-qubit density matrix")
    rx_, ry_, rz_ = (float(np.trace(rho @ s).real) for s in PAULI)
    return BlochVector(rx_, ry_, rz_)


def from_bloch(r) -> np.ndarray:
    r = r.as_array() if isinstance(r, BlochVector) else np.asarray(r, dtype=float)
    return 0.5 * (I2 + r[0] * X + r[1] * Y + r[2] * Z)


def ray_distance(psi: np.ndarray, phi: np.ndarray) -> float:
    """``min_|lam|=1 ||psi - lam phi||`` for unit vectors.

    Evaluated as a direct norm after aligning the phase; the closed form
    ``sqrt(2 - 2|<phi|psi>|)`` loses about eight digits to cancellation.
    """
    ov = np.vdot(phi, psi)
    lam = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(psi - lam * phi))


def unitary_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Max-norm distance between ``u`` and ``v`` after removing a global phase."""
    ov = np.trace(v.conj().T @ u)
    lam = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.abs(u - lam * v).max())
