"""
Clone fidelity and tomography at theta = pi/4
=============================================

Runs the machine on a pseudo-pure three-spin ensemble, reads the carbon
spectrum of each clone and rebuilds their density matrices from the
grouped line intensities.
"""

import numpy as np

from pqclone.cloning import psi
from pqclone.experiment import run_point
from pqclone.quantum import dm

theta = np.pi / 4
np.set_printoptions(precision=4, suppress=True)

###############################################################################
# Expectation-value readout of the noise-free gate-level machine.

rec = run_point(theta, +1)
print("gamma (estimated):", round(rec.gamma_est, 6), " theory:", round(rec.gamma_theory, 6))
print("Bloch b:", rec.bloch_b.as_array())
print("Bloch c:", rec.bloch_c.as_array())
print("F_b, F_c:", rec.F_b, rec.F_c)

###############################################################################
# The four lines of clone b. Lines 2 and 4 belong to the success group, and
# their signed sum divided by gamma gives the Bloch vector.

for acq in ("xy", "z"):
    ps = rec.peaks[("b", acq)]
    for k in range(1, 5):
        print(f"  {acq:>2} line {k}: {ps.numbered(k):.4f}")

###############################################################################
# Reconstructed clone next to the original state.

print("rho_0:\n", dm(psi(theta, +1)).real)
print("rho_b:\n", rec.rho_b.real)

###############################################################################
# When the probe reports failure the two clone qubits end up in a fixed
# entangled state, the same for both inputs.

print("failure branch (|00>, |01>, |10>, |11>):", rec.failure_state.real)
