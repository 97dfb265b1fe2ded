"""
The 1 -> 2 probabilistic cloning machine for the pair
``|psi_(+/-theta)> = cos(theta/2)|0> +/- sin(theta/2)|1>``.

Register layout is ``|a b c>``: probe ``a``, input ``b``, blank copy ``c``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .quantum import (MATRIX_ATOL, QuantumError, dm, fidelity_pure, partial_trace,
                      post_select, ray_distance)

THETA_ATOL = 1e-12


class CloningError(ValueError):
    pass


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (-THETA_ATOL <= theta <= np.pi / 2 + THETA_ATOL):
        raise CloningError(f"theta={theta!r} outside [0, pi/2]")
    return min(max(theta, 0.0), np.pi / 2)


def _check_sign(sign: int) -> int:
    if sign not in (1, -1):
        raise CloningError(f"sign must be +1 or -1, got {sign!r}")
    return int(sign)


def _cos(theta: float) -> float:
    # sin(pi/2 - theta) is exactly zero at the orthogonal endpoint
    return max(float(np.sin(np.pi / 2 - theta)), 0.0)


def _tan4_weights(theta: float) -> tuple[float, float]:
    # 1/(1+tan^4(theta/2)) and 1/(1+tan^-4(theta/2)) in terms of cos(theta)
    c = _cos(theta)
    d = 2 * (1 + c * c)
    return (1 + c) ** 2 / d, (1 - c) ** 2 / d


@dataclass(frozen=True)
class CloneParameters:
    """Angles of the cloning circuit and the optimal efficiency at ``theta``."""

    theta: float
    alpha: float
    beta: float
    gamma: float

    @property
    def failure_prob(self) -> float:
        """``1 - gamma``, evaluated without cancellation."""
        c = _cos(self.theta)
        return c / (1.0 + c)

    @property
    def failure_state(self) -> np.ndarray:
        """Normalized two-qubit state of ``bc`` left when the probe reads 1."""
        w00, w11 = _tan4_weights(self.theta)
        phi = np.zeros(4, dtype=complex)
        phi[0] = -np.sqrt(w00)
        phi[3] = -np.sqrt(w11)
        return phi


def clone_angles(theta: float) -> CloneParameters:
    """Circuit angles and optimal efficiency.

    ``cos(alpha/2) = sqrt((1 + t^4)/2)`` and
    ``cos(beta/2) = (sqrt(2/(1+t^4)) + sqrt(2/(1+t^-4)))/2`` with
    ``t = tan(theta/2)`` reduce to ``tan(alpha/2) = sqrt(2c/(1+c^2))`` and
    ``tan(beta/2) = c`` for ``c = cos(theta)``; those forms keep full
    precision near ``theta = pi/2`` where both angles vanish like ``sqrt(c)``.
    """
    theta = _check_theta(theta)
    c = _cos(theta)
    alpha = 2 * float(np.arctan2(np.sqrt(2 * c), np.sqrt(1 + c * c)))
    beta = 2 * float(np.arctan(c))
    return CloneParameters(theta, alpha, beta, 1.0 / (1.0 + c))


def psi(theta: float, sign: int) -> np.ndarray:
    """Single-qubit member of the cloning set."""
    sign = _check_sign(sign)
    return np.array([np.cos(theta / 2), sign * np.sin(theta / 2)], dtype=complex)


def input_state(theta: float, sign: int) -> np.ndarray:
    theta = _check_theta(theta)
    zero = np.array([1, 0], dtype=complex)
    return np.kron(np.kron(zero, psi(theta, sign)), zero)


def target_output(theta: float, sign: int) -> np.ndarray:
    p = clone_angles(theta)
    s = psi(p.theta, sign)
    success = np.kron(np.array([1, 0]), np.kron(s, s))
    failure = np.kron(np.array([0, 1]), p.failure_state)
    return np.sqrt(p.gamma) * success + np.sqrt(p.failure_prob) * failure


def _gram_schmidt(vectors, basis=(), tol: float = MATRIX_ATOL) -> list[np.ndarray]:
    out = list(basis)
    for v in vectors:
        w = np.array(v, dtype=complex)
        for _ in range(2):  # second pass restores orthogonality lost to rounding
            for e in out:
                w = w - np.vdot(e, w) * e
        nrm = np.linalg.norm(w)
        if nrm >= tol:
            out.append(w / nrm)
    return out[len(basis):]


def build_cloning_unitary(theta: float) -> np.ndarray:
    """Deterministic 8x8 unitary sending both inputs to their cloning outputs.

    Both input/output pairs are orthonormalized in the order (+, -), the two
    spans are completed against the canonical basis ``e_0 .. e_7`` and the
    completions are paired in order.
    """
    theta = _check_theta(theta)
    ins = [input_state(theta, 1), input_state(theta, -1)]
    outs = [target_output(theta, 1), target_output(theta, -1)]
    g_in, g_out = np.vdot(ins[0], ins[1]), np.vdot(outs[0], outs[1])
    if abs(g_in - g_out) > MATRIX_ATOL:
        raise CloningError(
            f"inner products differ at theta={theta}: <in+|in->={g_in}, <out+|out->={g_out}")

    # Gram-Schmidt in the order (+, -) with identical coefficients on both
    # sides. The residual v- - g v+ is evaluated as (v- - v+) + (1 - g) v+ so
    # that nearly parallel inputs at small theta do not cancel catastrophically.
    one_minus_g = 2.0 * np.sin(theta / 2) ** 2
    res_in = (ins[1] - ins[0]) + one_minus_g * ins[0]
    res_out = (outs[1] - outs[0]) + one_minus_g * outs[0]
    q_in, q_out = [ins[0].astype(complex)], [outs[0].astype(complex)]
    n = np.linalg.norm(res_in)
    if n >= MATRIX_ATOL:
        q_in.append(res_in.astype(complex) / n)
        q_out.append(res_out.astype(complex) / n)

    canon = np.eye(8, dtype=complex)
    q_in += _gram_schmidt(canon, q_in)
    q_out += _gram_schmidt(canon, q_out)
    if len(q_in) != 8 or len(q_out) != 8:
        raise CloningError("basis completion did not reach dimension 8")
    return np.stack(q_out, axis=1) @ np.stack(q_in, axis=1).conj().T


@dataclass(frozen=True)
class CloneRunResult:
    success_prob: float
    clone_b: np.ndarray
    clone_c: np.ndarray
    failure_state: Optional[np.ndarray]
    output: np.ndarray

    def fidelities(self, theta: float, sign: int) -> tuple[float, float]:
        ref = dm(psi(theta, sign))
        return fidelity_pure(ref, self.clone_b), fidelity_pure(ref, self.clone_c)


def run_clone(theta: float, sign: int, machine: np.ndarray) -> CloneRunResult:
    """Run ``machine`` on the input state and post-select on the probe."""
    out = machine @ input_state(theta, sign)
    p_ok, ok = post_select(out, 0, 0)
    _, fail = post_select(out, 0, 1)
    if ok is None:
        raise QuantumError("success branch is empty")
    rho = dm(ok)
    return CloneRunResult(
        success_prob=p_ok,
        clone_b=partial_trace(rho, [0]),
        clone_c=partial_trace(rho, [1]),
        failure_state=fail,
        output=out,
    )


def failure_matches(result: CloneRunResult, theta: float, atol: float = 1e-9) -> bool:
    """True when the failure branch equals the expected ``bc`` state up to phase."""
    if result.failure_state is None:
        return clone_angles(theta).gamma > 1 - 1e-12
    return ray_distance(result.failure_state, clone_angles(theta).failure_state) < atol
