import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pqclone.quantum import (H, I2, P0, X, Z, QuantumError, apply_gate, bloch_of, controlled,
                             dm, embed, fidelity_pure, is_density_matrix, is_unitary, ket,
                             kron, partial_trace, post_select, ray_distance, ry)
from pqclone.cloning import psi, target_output

from conftest import random_state, random_unitary


def brute_embed(gate, targets, n):
    """Index-loop expansion of ``gate`` on ``targets`` into 2**n dimensions."""
    d = 2**n
    out = np.zeros((d, d), dtype=complex)
    for i, j in itertools.product(range(d), range(d)):
        bi = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        bj = [(j >> (n - 1 - q)) & 1 for q in range(n)]
        if any(bi[q] != bj[q] for q in range(n) if q not in targets):
            continue
        gi = int("".join(str(bi[t]) for t in targets), 2)
        gj = int("".join(str(bj[t]) for t in targets), 2)
        out[i, j] = gate[gi, gj]
    return out


def brute_partial_trace(rho, keep, n):
    k = len(keep)
    out = np.zeros((2**k, 2**k), dtype=complex)
    for i, j in itertools.product(range(2**n), repeat=2):
        bi = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        bj = [(j >> (n - 1 - q)) & 1 for q in range(n)]
        if any(bi[q] != bj[q] for q in range(n) if q not in keep):
            continue
        a = int("".join(str(bi[q]) for q in keep), 2)
        b = int("".join(str(bj[q]) for q in keep), 2)
        out[a, b] += rho[i, j]
    return out


class TestKron:
    def test_identity(self):
        np.testing.assert_array_equal(kron(I2, I2), np.eye(4))

    def test_zz_diagonal(self):
        np.testing.assert_array_equal(np.diag(kron(Z, Z)).real, [1, -1, -1, 1])

    def test_against_index_loop(self):
        full = kron(P0, X, I2)
        for i, j in itertools.product(range(8), repeat=2):
            a, b, c = (i >> 2) & 1, (i >> 1) & 1, i & 1
            a2, b2, c2 = (j >> 2) & 1, (j >> 1) & 1, j & 1
            expected = P0[a, a2] * X[b, b2] * I2[c, c2]
            assert full[i, j] == expected


class TestApplyGate:
    def test_x_on_msb(self):
        out = apply_gate(ket("000"), X, [0])
        np.testing.assert_allclose(out, ket("100"), atol=1e-15)

    def test_hadamard(self):
        out = apply_gate(ket("000"), H, [0])
        np.testing.assert_allclose(out, (ket("000") + ket("100")) / np.sqrt(2), atol=1e-15)

    def test_cnot(self):
        state = (ket("000") + ket("010")) / np.sqrt(2)
        out = apply_gate(state, controlled(X), [1, 2])
        np.testing.assert_allclose(out, (ket("000") + ket("011")) / np.sqrt(2), atol=1e-15)

    @pytest.mark.parametrize("targets", [(0,), (2,), (0, 1), (2, 0), (1, 2), (2, 1, 0), (1, 0, 2)])
    def test_matches_brute_force_embedding(self, rng, targets):
        g = random_unitary(rng, 2 ** len(targets))
        psi_ = random_state(rng, 3)
        expected = brute_embed(g, targets, 3) @ psi_
        np.testing.assert_allclose(apply_gate(psi_, g, targets), expected, atol=1e-12)
        np.testing.assert_allclose(embed(g, targets, 3), brute_embed(g, targets, 3), atol=1e-12)

    def test_preserves_norm(self, rng):
        for _ in range(20):
            out = apply_gate(random_state(rng, 3), random_unitary(rng, 4), [2, 0])
            assert abs(np.linalg.norm(out) - 1) < 1e-12

    @pytest.mark.parametrize("gate,targets", [(X, [0, 1]), (controlled(X), [0]),
                                              (controlled(X), [1, 1]), (X, [3])])
    def test_rejects_bad_targets(self, gate, targets):
        with pytest.raises(QuantumError):
            apply_gate(ket("000"), gate, targets)


class TestRy:
    def test_zero_is_identity(self):
        np.testing.assert_array_equal(ry(0), I2)

    def test_pi_flips(self):
        np.testing.assert_allclose(ry(np.pi) @ [1, 0], [0, 1], atol=1e-15)

    def test_pi_third(self):
        np.testing.assert_allclose(ry(np.pi / 3) @ [1, 0], [0.8660254037844386, 0.5], atol=1e-15)


class TestPartialTrace:
    def test_product(self):
        np.testing.assert_allclose(partial_trace(dm(ket("00")), [0]), dm(ket("0")))

    @pytest.mark.parametrize("keep", [[0], [1]])
    def test_bell(self, keep):
        bell = (ket("00") + ket("11")) / np.sqrt(2)
        np.testing.assert_allclose(partial_trace(dm(bell), keep), I2 / 2, atol=1e-15)

    def test_clone_branch_at_pi_over_4(self):
        theta = np.pi / 4
        out = target_output(theta, 1)
        p, branch = post_select(out, 0, 0)
        rho = dm(branch)
        for keep in ([0], [1]):
            np.testing.assert_allclose(brute_partial_trace(rho, keep, 2), dm(psi(theta, 1)),
                                       atol=1e-12)
            np.testing.assert_allclose(partial_trace(rho, keep), dm(psi(theta, 1)), atol=1e-12)

    @pytest.mark.parametrize("keep", [[0], [1], [2], [0, 2], [1, 2], [0, 1, 2]])
    def test_against_index_contraction(self, rng, keep):
        rho = dm(random_state(rng, 3))
        np.testing.assert_allclose(partial_trace(rho, keep), brute_partial_trace(rho, keep, 3),
                                   atol=1e-12)

    def test_empty_keep(self):
        with pytest.raises(QuantumError):
            partial_trace(dm(ket("00")), [])


class TestPostSelect:
    def test_certain_outcome(self):
        p, cond = post_select(ket("000"), 0, 0)
        assert p == 1.0
        np.testing.assert_array_equal(cond, ket("00"))

    def test_efficiency_at_pi_over_3(self):
        p, _ = post_select(target_output(np.pi / 3, 1), 0, 0)
        assert abs(p - 2 / 3) < 1e-12

    def test_failure_at_zero(self):
        p, cond = post_select(target_output(0.0, 1), 0, 1)
        assert abs(p - 0.5) < 1e-12
        np.testing.assert_allclose(cond, -ket("00"), atol=1e-12)

    def test_empty_branch(self):
        p, cond = post_select(ket("000"), 0, 1)
        assert p == 0.0 and cond is None


class TestFidelityAndBloch:
    def test_fidelity_basics(self):
        assert fidelity_pure(dm(ket("0")), dm(ket("0"))) == 1
        assert fidelity_pure(dm(ket("0")), dm(ket("1"))) == 0

    @pytest.mark.parametrize("theta", [0.0, 0.3, np.pi / 4, np.pi / 2])
    def test_fidelity_with_mixed(self, theta):
        assert abs(fidelity_pure(dm(psi(theta, 1)), I2 / 2) - 0.5) < 1e-12

    def test_rejects_mixed_reference(self):
        with pytest.raises(QuantumError):
            fidelity_pure(I2 / 2, I2 / 2)

    def test_bloch(self):
        assert bloch_of(dm(ket("0"))).as_array().tolist() == [0, 0, 1]
        np.testing.assert_allclose(bloch_of(dm(psi(np.pi / 2, 1))).as_array(), [1, 0, 0],
                                   atol=1e-15)
        np.testing.assert_allclose(bloch_of(I2 / 2).as_array(), 0)


states3 = st.lists(st.floats(-1, 1), min_size=16, max_size=16).filter(
    lambda v: np.linalg.norm(v) > 1e-3)


def _vec(v):
    v = np.array(v[:8]) + 1j * np.array(v[8:])
    return v / np.linalg.norm(v)


@settings(max_examples=60, deadline=None)
@given(states3, states3)
def test_fidelity_bounds(a, b):
    f = fidelity_pure(dm(_vec(a)), dm(_vec(b)))
    assert -1e-12 <= f <= 1 + 1e-10


@settings(max_examples=60, deadline=None)
@given(states3)
def test_purity_of_bloch_vectors(a):
    v = _vec(a)
    one = v[:2] / np.linalg.norm(v[:2]) if np.linalg.norm(v[:2]) > 1e-6 else np.array([1, 0])
    assert abs(bloch_of(dm(one)).norm - 1) < 1e-10
    two = v[:4] / np.linalg.norm(v[:4])
    r = bloch_of(partial_trace(dm(two), [0])).norm
    assert r <= 1 + 1e-10


def test_entangled_reduced_state_is_mixed():
    v = (ket("00") + 0.5 * ket("11")) / np.sqrt(1.25)
    assert bloch_of(partial_trace(dm(v), [0])).norm < 1


def test_unitary_closure(rng):
    a, b = random_unitary(rng, 2), random_unitary(rng, 4)
    assert is_unitary(a @ a) and is_unitary(kron(a, b)) and is_unitary(b @ kron(a, a))


def test_density_matrix_check(rng):
    assert is_density_matrix(dm(random_state(rng, 2)))
    assert not is_density_matrix(np.diag([1.2, -0.2]))


def test_ray_distance_precision():
    v = random_state(np.random.default_rng(0), 3)
    assert ray_distance(np.exp(0.4j) * v, v) < 1e-15
