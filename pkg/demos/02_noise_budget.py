"""Closed-form noise budget at the default working point.

The signal is the rate of genuine three-fold events (one input photon, one
anti-Stokes photon, one retrieved Stokes photon).  Noise comes from
multi-photon input pulses (only for superposition inputs) and from double
excitations of the memory.  A sweep over the input mean photon number shows
the trade-off between the two: weaker pulses cut the first but leave the
second untouched while the signal shrinks.
"""

from memtele import budget
from memtele.sources import default_params

if __name__ == "__main__":
    params = default_params()
    print("input   S          N_wcp      N_double   v_eff   F_pred  herald")
    for label in ("H", "V", "+", "-", "R", "L"):
        b = budget.budget_from_params(params, label, t=0.5)
        print(f"{label:5s} {b.s:.3e}  {b.n_wcp:.3e}  {b.n_double:.3e}  {b.v_eff:.3f}  {b.fidelity_pred:.3f}  "
              f"{b.herald_confidence:.3f}")

    print("\nsingle-photon probability of the input pulse vs predicted |+> fidelity")
    base = {**budget.budget_inputs(params, 0.5), "input_label": "+"}
    for point, b in budget.sweep({"p_0": [0.005, 0.01, 0.02, 0.03, 0.04, 0.06, 0.1]}, base):
        print(f"p_0={point['p_0']:<6} F_+={b.fidelity_pred:.4f}  (N_wcp {b.n_wcp:.2e}, N_double {b.n_double:.2e})")
