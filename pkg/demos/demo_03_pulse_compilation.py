"""
From the gate layout to NMR pulses
==================================

The five-gate circuit is compiled gate by gate into hard pulses and
J-coupling delays for the 1H, 13C and 19F spins. The simulated propagator is
then checked against the ideal cloning output.
"""

import numpy as np

from pqclone.circuit import load_layout
from pqclone.cloning import target_output
from pqclone.quantum import ket, ray_distance
from pqclone.spin import (SpinSystem, compile_gate, format_sequence,
                          full_experiment_sequence, simulate_sequence)

system = SpinSystem()  # J_ab = 161.3, J_bc = -192.2, J_ac = 47.6 Hz
layout = load_layout()
theta = np.pi / 4

###############################################################################
# Delay budget of each gate. A CNOT needs 1/(2|J|) of coupling evolution,
# a controlled rotation by phi needs |phi|/(2 pi |J|), and H needs none.

for gate in layout:
    seq = compile_gate(gate, system, theta)
    print(f"{gate.describe():<22} {len(seq.pulses):2d} pulses  {seq.total_duration * 1e3:7.4f} ms")

###############################################################################
# Whole experiment, including the preparation pulse on spin b.

for sign in (+1, -1):
    seq = full_experiment_sequence(theta, sign, system, layout)
    out, _ = simulate_sequence(seq, system, ket("000"))
    dist = ray_distance(out, target_output(theta, sign))
    print(f"sign {sign:+d}: {len(seq)} events, {seq.total_duration * 1e3:.3f} ms, "
          f"distance to target {dist:.1e}")

###############################################################################
# The first few lines of the pulse file.

print("\n".join(format_sequence(full_experiment_sequence(theta, +1)).splitlines()[:8]))
