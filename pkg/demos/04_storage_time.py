"""Fidelity of a stored |R> state against storage time.

Retrieval efficiency decays as a Gaussian in time, so the true three-fold
signal shrinks while the uncorrelated Stokes background does not.  The
fidelity therefore stays flat for a few microseconds and then falls through
the classical limit of 2/3.  A Gaussian decay time is fitted to the sampled
curve and compared with the input value.
"""

from memtele import budget
from memtele.protocol import estimate_fidelity, run_until
from memtele.sources import default_params

TIMES = (0.5, 4.0, 8.0, 10.0, 12.0)

if __name__ == "__main__":
    params = default_params()
    fs, errs = [], []
    print("  t/us   MC            predicted")
    for k, t in enumerate(TIMES):
        est = estimate_fidelity(run_until(params, "R", t, 2000, seed=k))
        fs.append(est.fidelity)
        errs.append(est.std_err)
        pred = budget.predict_fidelity_vs_time(params, "R", [t])[0][1]
        print(f"{t:6.1f}   {est.fidelity:.3f}+/-{est.std_err:.3f}   {pred:.3f}")
    tau = budget.fit_decay_time(TIMES, fs, params, "R", errs)
    print(f"fitted decay time {tau:.2f} us (input {params.tau_mem:.2f} us)")
    print(f"predicted crossing of 2/3 at {budget.crossing_time(params, 'R'):.2f} us, "
          f"from the fit {budget.crossing_time(params.replace(tau_mem=tau), 'R'):.2f} us")
