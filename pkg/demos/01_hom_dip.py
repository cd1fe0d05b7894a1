"""Two-photon interference on a 50:50 beam splitter as the wavepacket overlap varies.

Each photon is written as a matched plus a mismatched temporal bin.  Only the
matched parts interfere, so the coincidence probability falls from 1/2 for
distinguishable photons to 0 for identical ones, with visibility zeta**2.
"""

import numpy as np

from memtele.fock import FockState, Mode, apply_beam_splitter
from memtele.sources import split_temporal_bins

A, B = Mode.IN_H, Mode.AS_H


def coincidence(zeta):
    state = FockState.basis((A, B), (1, 1))
    state = split_temporal_bins(state, A, 1.0)
    state = split_temporal_bins(state, B, zeta)
    state = apply_beam_splitter(state, A, B)
    ia, ib = state.bins_of(A), state.bins_of(B)
    return sum(abs(x) ** 2 for occ, x in state.amplitudes.items() if sum(occ[i] for i in ia) and sum(occ[i] for i in ib))


if __name__ == "__main__":
    print(" zeta   P(coincidence)   (1 - zeta^2)/2")
    for zeta in np.linspace(0, 1, 11):
        print(f"{zeta:5.2f}   {coincidence(zeta):.6f}         {(1 - zeta**2) / 2:.6f}")
