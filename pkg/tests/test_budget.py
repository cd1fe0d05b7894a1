import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from memtele.budget import (
    CLASSICAL_LIMIT,
    budget_from_params,
    calibrate_tau_mem,
    compute_budget,
    crossing_time,
    fit_decay_time,
    predict_fidelity_vs_time,
    sweep,
)
from memtele.errors import EmptyGrid, ParamOutOfRange
from memtele.memory import gamma_at
from memtele.sources import CALIBRATED_TAU_MEM, default_params

REFERENCE_POINT = dict(p_as=0.003, p_0=0.03, p_s=0.004, gamma=0.30, eta=0.375, v=0.88)


def independent_fidelity(p_as, p_0, p_s, gamma, eta, v, kappa):
    s = p_as * p_0 * gamma * eta**3 / 2
    n = p_0**2 * p_s * eta**3 * kappa / 4 + p_as**2 * (2 * gamma * eta - (gamma * eta) ** 2) * eta**2 / 4
    return (s * (1 + v) / 2 + n / 2) / (s + n), s


class TestComputeBudget:
    def test_h_defaults(self):
        b = compute_budget(**REFERENCE_POINT, zeta=0.9, input_label="H")
        assert b.fidelity_pred == pytest.approx(0.90, abs=0.01)
        assert 5e-7 <= b.s <= 1.5e-6
        assert b.n_wcp == 0.0 and b.kappa == 0

    @pytest.mark.parametrize("label", ["+", "R"])
    def test_superposition_defaults(self, label):
        b = compute_budget(**REFERENCE_POINT, zeta=0.9, input_label=label)
        assert b.fidelity_pred == pytest.approx(0.79, abs=0.02)
        assert b.v_eff == pytest.approx(0.81 * 0.822)

    def test_against_direct_formula(self):
        for label, kappa in (("H", 0), ("R", 1)):
            b = compute_budget(**dict(REFERENCE_POINT, v=0.7), zeta=1.0, input_label=label, v_pm=0.7)
            f, s = independent_fidelity(**dict(REFERENCE_POINT, v=0.7), kappa=kappa)
            assert b.fidelity_pred == pytest.approx(f, rel=1e-14)
            assert b.s == pytest.approx(s, rel=1e-14)

    def test_noise_free_limit(self):
        # vanishing pair rate relative to the input: double excitations disappear
        b = compute_budget(p_as=1e-12, p_0=0.03, p_s=0.0, gamma=1.0, eta=1.0, v=1.0, zeta=1.0,
                           input_label="+", v_pm=1.0)
        assert b.fidelity_pred == pytest.approx(1.0, abs=1e-9)

    def test_h_independent_of_zeta(self):
        fs = {compute_budget(**REFERENCE_POINT, zeta=z, input_label="H").fidelity_pred for z in (0.3, 0.9, 1.0)}
        assert len(fs) == 1

    def test_out_of_range(self):
        with pytest.raises(ParamOutOfRange) as exc:
            compute_budget(**dict(REFERENCE_POINT, eta=1.2))
        assert exc.value.field == "eta"

    def test_herald_confidence(self):
        h = compute_budget(**REFERENCE_POINT, zeta=0.9, input_label="H").herald_confidence
        plus = compute_budget(**REFERENCE_POINT, zeta=0.9, input_label="+").herald_confidence
        assert h > plus
        assert h == pytest.approx(0.95238, abs=1e-4)

    @given(st.floats(0.01, 0.99), st.floats(1e-4, 0.2), st.sampled_from(["H", "+", "R"]))
    def test_fidelity_in_range(self, gamma, p_0, label):
        b = compute_budget(**dict(REFERENCE_POINT, gamma=gamma, p_0=p_0), zeta=0.9, input_label=label)
        assert 0.5 <= b.fidelity_pred <= 1.0
        assert min(b.s, b.n_wcp, b.n_double) >= 0


class TestMonotonicity:
    h = 1e-4

    def f(self, label="R", **kw):
        args = dict(REFERENCE_POINT, zeta=0.9, input_label=label)
        args.update(kw)
        return compute_budget(**args).fidelity_pred

    def slope(self, key, label="R"):
        base = dict(REFERENCE_POINT, v_pm=0.822)[key]
        return self.f(label, **{key: base + self.h}) - self.f(label, **{key: base - self.h})

    def test_decreasing_in_stokes_noise(self):
        assert self.slope("p_s") < 0
        assert self.slope("p_s", "H") == 0

    def test_increasing_in_gamma_and_visibility(self):
        assert self.slope("gamma") > 0 and self.slope("gamma", "H") > 0
        assert self.slope("v", "H") > 0
        assert self.slope("v_pm") > 0

    def test_p0_slope_follows_noise_balance(self):
        # s grows linearly in p_0 and n_wcp quadratically, so the fidelity peaks where
        # n_wcp = n_double; at the quoted operating point n_double is still the larger term
        b = compute_budget(**REFERENCE_POINT, zeta=0.9, input_label="R")
        assert b.n_double > b.n_wcp
        assert self.slope("p_0") > 0
        p_star = 0.03 * math.sqrt(b.n_double / b.n_wcp)
        assert self.f(p_0=p_star) > self.f(p_0=p_star * 0.9)
        assert self.f(p_0=p_star) > self.f(p_0=p_star * 1.1)
        assert self.f(p_0=0.1) < self.f(p_0=0.05)


class TestTimeDependence:
    def test_half_microsecond(self):
        (t, f), = predict_fidelity_vs_time(default_params(), "R", [0.5])
        assert 0.73 <= f <= 0.79

    def test_above_classical_at_eight(self):
        (_, f), = predict_fidelity_vs_time(default_params(), "R", [8.0])
        assert f > CLASSICAL_LIMIT

    def test_decays_to_half(self):
        (_, f), = predict_fidelity_vs_time(default_params(), "R", [200.0])
        assert f == pytest.approx(0.5, abs=1e-6)

    def test_matches_budget_at_gamma_t(self):
        p = default_params()
        for t, f in predict_fidelity_vs_time(p, "R", [0.0, 3.0, 7.0]):
            assert f == budget_from_params(p, "R", t).fidelity_pred
            assert budget_from_params(p, "R", t).s == pytest.approx(
                0.5 * 0.003 * p.mu * math.exp(-p.mu) * gamma_at(t, p) * p.eta**3, rel=1e-9)

    def test_empty_times(self):
        with pytest.raises(ParamOutOfRange):
            predict_fidelity_vs_time(default_params(), "R", [])

    def test_tau_calibration(self):
        p = default_params()
        assert calibrate_tau_mem(p) == pytest.approx(CALIBRATED_TAU_MEM, rel=1e-10)
        assert crossing_time(p) == pytest.approx(9.0, rel=1e-10)

    def test_fit_recovers_tau(self):
        p = default_params()
        times = [0.5, 3, 6, 9, 12]
        fs = [f for _, f in predict_fidelity_vs_time(p.replace(tau_mem=7.5), "R", times)]
        assert fit_decay_time(times, fs, p) == pytest.approx(7.5, rel=1e-5)


class TestSweep:
    def test_single_point(self):
        (point, row), = sweep({"eta": [0.375]}, dict(REFERENCE_POINT, zeta=0.9, input_label="H"))
        assert row == compute_budget(**REFERENCE_POINT, zeta=0.9, input_label="H")

    def test_eta_axis_monotone(self):
        rows = sweep({"eta": [0.2, 0.375, 0.5]}, dict(REFERENCE_POINT, zeta=0.9, input_label="H"))
        fs = [r.fidelity_pred for _, r in rows]
        assert fs == sorted(fs) or fs == sorted(fs, reverse=True)

    def test_p0_doubling(self):
        rows = sweep({"p_0": [0.02, 0.04]}, dict(REFERENCE_POINT, zeta=0.9, input_label="+"))
        assert rows[1][1].n_wcp == pytest.approx(4 * rows[0][1].n_wcp, rel=1e-14)

    def test_order_is_lexicographic(self):
        rows = sweep({"gamma": [0.1, 0.2], "eta": [0.3, 0.4]}, dict(REFERENCE_POINT, zeta=0.9))
        assert [tuple(p.values()) for p, _ in rows] == [(0.1, 0.3), (0.1, 0.4), (0.2, 0.3), (0.2, 0.4)]

    def test_empty(self):
        with pytest.raises(EmptyGrid):
            sweep({"eta": []}, REFERENCE_POINT)
        with pytest.raises(EmptyGrid):
            sweep({}, REFERENCE_POINT)
