"""
Cloning efficiency versus input overlap
=======================================

Two states ``|psi_+>`` and ``|psi_->`` separated by an angle theta can be
copied perfectly only some of the time. The machine flags success on its
probe qubit, and the best achievable success rate is ``1/(1 + cos theta)``.
"""

import numpy as np

from pqclone.cloning import build_cloning_unitary, clone_angles, input_state
from pqclone.quantum import post_select

# the grid used throughout: 0 to pi/2 in steps of pi/12
thetas = np.arange(7) * np.pi / 12

###############################################################################
# Build the machine for each angle, run it on ``|psi_+>`` and read the
# probability that the probe ends in ``|0>``.

print(f"{'theta/pi':>9} {'alpha':>8} {'beta':>8} {'gamma':>8} {'simulated':>10}")
for theta in thetas:
    p = clone_angles(theta)
    out = build_cloning_unitary(theta) @ input_state(theta, +1)
    prob, _ = post_select(out, qubit=0, outcome=0)
    print(f"{theta / np.pi:9.4f} {p.alpha:8.4f} {p.beta:8.4f} {p.gamma:8.5f} {prob:10.5f}")

###############################################################################
# Identical inputs (theta = 0) succeed half the time. Orthogonal inputs
# (theta = pi/2) can be told apart and copied every time.
