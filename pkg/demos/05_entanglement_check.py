"""Light-memory entanglement check before any teleportation.

The anti-Stokes photon and the retrieved Stokes photon are analyzed in the
H/V and in the diagonal bases.  Spin depolarization lowers both
visibilities, while phase jitter between the two ensembles only touches the
diagonal one.  The default noise levels were calibrated so that the exact
values are a signal-to-noise ratio of 15 in H/V and a visibility of 0.822 in
the diagonal basis.
"""

import numpy as np

from memtele.protocol import run_entanglement_verification, verification_exact
from memtele.sources import default_params

if __name__ == "__main__":
    params = default_params()
    rng = np.random.default_rng(7)
    for basis in ("HV", "PM"):
        exact = verification_exact(params, basis)
        mc = run_entanglement_verification(params, basis, 2000, rng)
        print(f"{basis}: exact V={exact.visibility:.3f} (SNR {exact.snr:.1f}), "
              f"sampled V={mc.visibility:.3f} +/- {mc.std_err:.3f}")
    for sigma in (0.0, 0.35, 0.7):
        v = verification_exact(params.replace(phase_sigma=sigma), "PM").visibility
        print(f"phase jitter {sigma:.2f} rad -> diagonal visibility {v:.3f}")
