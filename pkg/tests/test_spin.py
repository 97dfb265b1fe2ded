import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pqclone.circuit import Gate, circuit_unitary, load_layout
from pqclone.cloning import clone_angles, input_state, target_output
from pqclone.experiment import mean_infidelity
from pqclone.quantum import (Z, controlled, embed, is_unitary, ket, kron, post_select,
                             ray_distance, ry, unitary_distance, X, I2)
from pqclone.spin import (DEFAULT_J, Delay, Pulse, PulseSequence, SpinError, SpinSystem,
                          apply_pulse, compile_gate, evolve, format_sequence,
                          full_experiment_sequence, hamiltonian, parse_sequence, propagator,
                          pseudo_pure, read_sequence, read_key_values, simulate_sequence,
                          write_sequence, zz_block)

DEFAULT = SpinSystem()
QUIET = SpinSystem(offsets=(0.0, 0.0, 0.0), J_ab=0.0, J_bc=0.0, J_ac=0.0)


def random_offsets(rng):
    return SpinSystem(offsets=tuple(rng.uniform(-2000, 2000, 3)))


class TestSpinSystem:
    def test_defaults(self):
        assert DEFAULT.offsets == (0.0, 0.0, 0.0)
        assert (DEFAULT.J(0, 1), DEFAULT.J(1, 2), DEFAULT.J(0, 2)) == (161.3, -192.2, 47.6)
        assert DEFAULT.J(2, 1) == DEFAULT.J(1, 2)

    def test_config_file(self, tmp_path):
        p = tmp_path / "sys.txt"
        p.write_text("# couplings\nJ_ab = 150\nJ_bc -180.5\nw_c = 12.0\n")
        assert read_key_values(p)["J_bc"] == "-180.5"
        sys = SpinSystem.from_file(p)
        assert sys.J_ab == 150 and sys.J_ac == 47.6 and sys.offsets == (0.0, 0.0, 12.0)

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "sys.txt"
        p.write_text("J_xy = 1\n")
        with pytest.raises(SpinError):
            SpinSystem.from_file(p)


class TestHamiltonian:
    def test_zero(self):
        assert np.all(hamiltonian(QUIET) == 0)

    def test_single_offset_spectrum(self):
        h = hamiltonian(SpinSystem(offsets=(300.0, 0, 0), J_ab=0, J_bc=0, J_ac=0))
        ev = np.sort(np.linalg.eigvalsh(h))
        np.testing.assert_allclose(ev, [-150] * 4 + [150] * 4)

    def test_default_entry(self):
        h = hamiltonian(DEFAULT)
        assert abs(h[0, 0] - 2 * np.pi * (161.3 - 192.2 + 47.6) / 4) < 1e-12
        assert np.all(h == np.diag(np.diag(h)))
        assert np.all(h == h.conj().T)

    def test_matches_kron_oracle(self):
        sys = SpinSystem(offsets=(11.0, -7.0, 3.0))
        iz = Z / 2
        ops = [kron(iz, I2, I2), kron(I2, iz, I2), kron(I2, I2, iz)]
        expected = sum(w * o for w, o in zip(sys.offsets, ops))
        for (i, j), J in DEFAULT_J.items():
            expected = expected + 2 * np.pi * J * ops[i] @ ops[j]
        np.testing.assert_allclose(hamiltonian(sys), expected, atol=1e-12)


class TestEvolve:
    def test_zero_time(self):
        np.testing.assert_array_equal(propagator(hamiltonian(DEFAULT), 0.0), np.eye(8))

    def test_semigroup(self, rng):
        h = hamiltonian(random_offsets(rng))
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi /= np.linalg.norm(psi)
        one = evolve(evolve(psi, h, 1.3e-3), h, 2.1e-3)
        assert np.abs(one - evolve(psi, h, 3.4e-3)).max() < 1e-12

    def test_density_matrix(self, rng):
        h = hamiltonian(DEFAULT)
        rho = pseudo_pure(0.3).rho
        u = propagator(h, 1e-3)
        np.testing.assert_allclose(evolve(rho, h, 1e-3), u @ rho @ u.conj().T)

    def test_rejects(self):
        with pytest.raises(SpinError):
            propagator(np.triu(np.ones((8, 8))), 1.0)
        with pytest.raises(SpinError):
            propagator(np.eye(8), -1.0)

    def test_non_diagonal_path(self):
        h = np.kron(X, np.eye(4))
        np.testing.assert_allclose(propagator(h, np.pi / 2), -1j * h, atol=1e-12)

    def test_coupling_is_controlled_phase(self):
        # J_bc alone for 1/(2|J|): CZ on (b, c) up to local z rotations
        sys = SpinSystem(J_ab=0.0, J_ac=0.0)
        u = propagator(hamiltonian(sys), 1 / (2 * abs(sys.J_bc)))
        ph = np.angle(np.diag(u))
        # phases with a = 0 at bc = 00, 01, 10, 11
        twist = ph[0] - ph[1] - ph[2] + ph[3]
        assert abs(np.exp(1j * twist) + 1) < 1e-12


class TestPulses:
    def test_inversion(self):
        out = apply_pulse(ket("000"), Pulse(("a",), 0.0, np.pi))
        assert abs(abs(out[4]) - 1) < 1e-12
        assert abs(out[4] + 1j) < 1e-12

    def test_amplitude_error_overlap(self):
        ideal = apply_pulse(ket("000"), Pulse((1,), 0.0, np.pi / 2))
        noisy = apply_pulse(ket("000"), Pulse((1,), 0.0, np.pi / 2, amplitude_error=0.03))
        assert abs(abs(np.vdot(ideal, noisy)) ** 2 - np.cos(0.03 * np.pi / 4) ** 2) < 1e-12

    def test_double_pi_identity(self):
        seq = [Pulse((0, 1, 2), 0.4, np.pi)] * 2
        _, u = simulate_sequence(seq, DEFAULT)
        assert unitary_distance(u, np.eye(8)) < 1e-12

    def test_simultaneous_targets(self):
        u = simulate_sequence([Pulse(("b", "c"), np.pi / 2, np.pi)], QUIET)[1]
        np.testing.assert_allclose(u, kron(I2, ry(np.pi), ry(np.pi)), atol=1e-12)

    def test_per_spin_error(self):
        p = Pulse((0, 1), 0.0, np.pi / 2)
        u = simulate_sequence([p], QUIET, rf_error={"a": 0.1})[1]
        u_b = simulate_sequence([Pulse((1,), 0.0, np.pi / 2)], QUIET)[1]
        u_a = simulate_sequence([Pulse((0,), 0.0, 1.1 * np.pi / 2)], QUIET)[1]
        np.testing.assert_allclose(u, u_a @ u_b, atol=1e-12)

    @pytest.mark.parametrize("flip", [0.0, -2 * np.pi - 0.1, 7.0])
    def test_flip_range(self, flip):
        if flip == 0.0:
            Pulse((0,), 0.0, flip)
        else:
            with pytest.raises(SpinError):
                Pulse((0,), 0.0, flip)

    def test_negative_delay(self):
        with pytest.raises(SpinError):
            Delay(-1e-3)


class TestSequences:
    def test_empty(self):
        out, u = simulate_sequence([], DEFAULT, ket("000"))
        np.testing.assert_array_equal(u, np.eye(8))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2), st.floats(-5000, 5000), st.floats(0, 1e-2))
    def test_echo_refocuses(self, spin, omega, tau):
        offsets = [0.0, 0.0, 0.0]
        offsets[spin] = omega
        sys = SpinSystem(offsets=tuple(offsets), J_ab=0, J_bc=0, J_ac=0)
        seq = [Delay(tau), Pulse((spin,), 0.0, np.pi), Delay(tau), Pulse((spin,), 0.0, np.pi)]
        assert unitary_distance(simulate_sequence(seq, sys)[1], np.eye(8)) < 1e-9

    def test_total_duration(self):
        seq = PulseSequence([Delay(1e-3), Pulse((0,), 0, np.pi), Delay(2e-3)])
        assert abs(seq.total_duration - 3e-3) < 1e-18
        assert len(seq.pulses) == 1

    def test_with_amplitude_error(self):
        seq = PulseSequence([Delay(1e-3), Pulse((0,), 0, np.pi)])
        assert seq.with_amplitude_error(0.02).pulses[0].amplitude_error == 0.02


def ideal(gate, theta=None):
    return circuit_unitary([gate], theta)


class TestCompile:
    def test_cnot_bc_delay(self):
        seq = compile_gate(Gate("CNOT", 2, 1), DEFAULT)
        assert abs(seq.total_duration - 1 / (2 * 192.2)) < 1e-15
        assert abs(seq.total_duration - 2.601e-3) < 1e-6

    def test_cnot_maps_sector(self):
        u = simulate_sequence(compile_gate(Gate("CNOT", 2, 1), DEFAULT), DEFAULT)[1]
        for a in "01":
            assert ray_distance(u @ ket(a + "10"), ket(a + "11")) < 1e-10

    def test_cry_delay_at_pi_over_4(self):
        alpha = 2 * np.arccos(np.sqrt((1 + np.tan(np.pi / 8) ** 4) / 2))
        seq = compile_gate(Gate("CRY", 1, 0, "-alpha"), DEFAULT, np.pi / 4)
        assert abs(seq.total_duration - alpha / (2 * np.pi * 161.3)) < 1e-12

    def test_h_no_delay(self):
        for q in range(3):
            seq = compile_gate(Gate("H", q), DEFAULT)
            assert seq.total_duration == 0
            u = simulate_sequence(seq, DEFAULT)[1]
            assert unitary_distance(u, ideal(Gate("H", q))) < 1e-12

    def test_zero_coupling(self):
        with pytest.raises(SpinError):
            compile_gate(Gate("CNOT", 1, 0), SpinSystem(J_ab=0.0))

    @pytest.mark.parametrize("control,target", [(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)])
    @pytest.mark.parametrize("state", [0, 1])
    def test_cnot_every_pair(self, control, target, state, rng):
        g = Gate("CNOT", target, control, None, state)
        sys = random_offsets(rng)
        u = simulate_sequence(compile_gate(g, sys), sys)[1]
        assert unitary_distance(u, ideal(g)) < 1e-10

    def test_random_cry(self, rng):
        worst = 0.0
        for _ in range(100):
            phi = rng.uniform(-np.pi, np.pi)
            control, target = rng.permutation(3)[:2]
            g = Gate("CRY", int(target), int(control), float(phi), int(rng.integers(2)))
            sys = random_offsets(rng)
            u = simulate_sequence(compile_gate(g, sys), sys)[1]
            assert is_unitary(u)
            worst = max(worst, unitary_distance(u, ideal(g)))
        assert worst < 1e-6

    def test_spectators_refocused(self):
        # the CNOT on (b, c) leaves a untouched in every basis state
        sys = SpinSystem(offsets=(900.0, -400.0, 250.0))
        u = simulate_sequence(compile_gate(Gate("CNOT", 2, 1), sys), sys)[1]
        target = embed(controlled(X), [1, 2], 3)
        assert unitary_distance(u, target) < 1e-10

    def test_zz_block_sign(self):
        sys = SpinSystem(J_ab=0.0, J_ac=0.0)
        for kappa in (0.3, -0.3):
            u = simulate_sequence(zz_block(1, 2, kappa, sys), sys)[1]
            ref = np.diag(np.exp(-1j * kappa * np.diag(kron(I2, Z, Z))))
            assert unitary_distance(u, ref) < 1e-12


class TestFullSequence:
    @pytest.mark.parametrize("theta", np.arange(0, 7) * np.pi / 12)
    @pytest.mark.parametrize("sign", [1, -1])
    def test_reaches_target(self, theta, sign):
        seq = full_experiment_sequence(theta, sign)
        out, u = simulate_sequence(seq, DEFAULT, ket("000"))
        assert ray_distance(out, target_output(theta, sign)) < 1e-6
        assert seq.total_duration < 10e-3

    def test_runtime_near_eight_ms(self):
        assert 5e-3 < full_experiment_sequence(np.pi / 4, 1).total_duration < 10e-3

    def test_orthogonal_has_no_cry_delay(self):
        seq = full_experiment_sequence(np.pi / 2, 1)
        cnot_only = sum(1 / (2 * abs(DEFAULT.J(*sorted((g.control, g.target)))))
                        for g in load_layout() if g.kind == "CNOT")
        assert abs(seq.total_duration - cnot_only) < 1e-15

    def test_efficiency_pi_third(self):
        out, _ = simulate_sequence(full_experiment_sequence(np.pi / 3, 1), DEFAULT, ket("000"))
        assert abs(post_select(out, 0, 0)[0] - 2 / 3) < 1e-6

    def test_with_offsets(self):
        sys = SpinSystem(offsets=(1234.0, -567.0, 89.0))
        out, _ = simulate_sequence(full_experiment_sequence(0.9, -1, sys), sys, ket("000"))
        assert ray_distance(out, target_output(0.9, -1)) < 1e-6


class TestPseudoPure:
    def test_pure_limit(self):
        np.testing.assert_array_equal(pseudo_pure(1.0).rho, np.outer(ket("000"), ket("000")))

    def test_small_epsilon(self):
        eps = 1e-5
        d = np.diag(pseudo_pure(eps).rho).real
        np.testing.assert_allclose(d, [eps + (1 - eps) / 8] + [(1 - eps) / 8] * 7, rtol=0, atol=1e-16)
        assert abs(d.sum() - 1) < 1e-12

    @pytest.mark.parametrize("eps", [0.0, -0.1, 1.5])
    def test_range(self, eps):
        with pytest.raises(SpinError):
            pseudo_pure(eps)

    def test_traceless_scaling(self):
        u = simulate_sequence(full_experiment_sequence(np.pi / 4, 1), DEFAULT)[1]
        pure = u @ np.outer(ket("000"), ket("000")) @ u.conj().T
        for q in range(3):
            obs = embed(X, [q], 3)
            ref = np.trace(obs @ pure).real
            for eps in (1.0, 1e-2, 1e-5):
                rho = pseudo_pure(eps).rho
                val = np.trace(obs @ u @ rho @ u.conj().T).real / eps
                assert abs(val - ref) < 1e-10


class TestPulseFile:
    def test_round_trip(self, tmp_path):
        seq = full_experiment_sequence(0.37, -1).with_amplitude_error(0.013)
        path = tmp_path / "seq.txt"
        write_sequence(path, seq, header="theta=0.37")
        back = read_sequence(path)
        assert back == seq
        assert format_sequence(back) == format_sequence(seq)

    def test_parse_text(self):
        seq = parse_sequence("# demo\nPULSE spins=b,c phase=0 flip=3.14\n\nDELAY t=0.001  # wait\n")
        assert seq.events == (Pulse((1, 2), 0.0, 3.14), Delay(0.001))

    def test_unknown_event(self):
        with pytest.raises(SpinError):
            parse_sequence("WAIT t=1\n")


def test_error_continuity():
    grid = np.array([np.pi / 12, np.pi / 4, 5 * np.pi / 12])
    vals = [mean_infidelity(d, grid) for d in (0.0, 0.01, 0.02, 0.04)]
    assert vals[0] < 1e-10
    assert vals[1] <= vals[2] <= vals[3]
    assert vals[1] < 0.02
