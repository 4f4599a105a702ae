import cmath
import math

import numpy as np
import pytest

from rlmdual.liouville import (
    identity_superop,
    is_cp,
    is_tp,
    parity_superop,
    superadjoint,
    vectorize,
)
from rlmdual.markov import (
    ALWAYS,
    NEVER,
    PoleCollisionError,
    breakdown_locator,
    cp_onset_time,
    heisenberg_stationary_generator,
    regularized_slip_limit,
    semigroup_propagator,
    semigroup_propagator_hat,
    slip_operator,
    slip_propagator,
    slip_propagator_hat,
)
from rlmdual.model import IDENTITY_OP, NUMBER_OP, PARITY_OP, RlmProvider
from rlmdual.scalars import ModelParams, k_hat

TH = ModelParams(0.5, 0.0, 0.25, 1.0)
HOT = ModelParams(0.5, 0.0, 1e4, 1.0)


class TestSemigroup:
    def test_initial_identity(self):
        assert np.abs(semigroup_propagator(0.0, TH) - identity_superop(2)).max() < 1e-14

    def test_stationary_state_exact(self):
        pr = RlmProvider(TH)
        rho_inf = vectorize(pr.stationary_state())
        out = semigroup_propagator(5.0, TH) @ rho_inf
        assert np.abs(out - rho_inf).max() < 1e-9
        exact = pr.propagator(60.0) @ vectorize(np.diag([1.0, 0.0]).astype(complex))
        assert np.abs(exact - rho_inf).max() < 1e-8

    def test_hot_limit_exact(self):
        pr = RlmProvider(HOT)
        for t in (0.5, 2.0):
            assert np.abs(semigroup_propagator(t, HOT) - pr.propagator(t)).max() < 1e-6

    def test_tp_and_cp(self):
        for t in (0.3, 1.0, 6.0):
            p1 = semigroup_propagator(t, TH)
            assert is_tp(p1, 1e-9)
            ok, _ = is_cp(p1, 1e-9)
            assert ok  # stationary rates are positive at these parameters


class TestSlipOperator:
    def test_paths_agree(self):
        s_cl = slip_operator(TH, method="closed-form")
        s_rs = slip_operator(TH, method="residue-sum")
        assert np.abs(s_cl.matrix - s_rs.matrix).max() < 1e-6
        assert s_cl.construction == "closed-form"
        assert len(s_cl.residues) == 4

    def test_trace_preserving(self):
        s = slip_operator(TH)
        assert is_tp(s.matrix, 1e-9)

    def test_duality(self):
        pm = parity_superop(PARITY_OP)
        s = slip_operator(TH).matrix
        s_dual = slip_operator(TH.dual()).matrix
        assert np.abs(superadjoint(s) - pm @ s_dual @ pm).max() < 1e-8

    def test_far_detuned_slip_shrinks(self):
        base = abs(np.abs(slip_operator(TH).matrix - identity_superop(2)).max())
        far = abs(np.abs(slip_operator(ModelParams(20.0, 0.0, 0.25, 1.0)).matrix
                         - identity_superop(2)).max())
        assert far < 0.1 * base

    def test_hot_limit_identity(self):
        s = slip_operator(HOT).matrix
        assert np.abs(s - identity_superop(2)).max() < 1e-3

    def test_pole_collision_rejected(self):
        with pytest.raises(PoleCollisionError):
            slip_operator(ModelParams(0.0, 0.0, 0.25, 1.0))


class TestSlipPropagator:
    def test_no_semigroup_property(self):
        p = lambda t: slip_propagator(t, TH)
        assert np.abs(p(1.0) @ p(0.5) - p(1.5)).max() > 1e-3

    def test_tp_at_all_times(self):
        for t in (0.0, 0.7, 3.0, 12.0):
            assert is_tp(slip_propagator(t, TH), 1e-9)

    def test_converges_to_stationary(self):
        pr = RlmProvider(TH)
        rho_inf = vectorize(pr.stationary_state())
        one = vectorize(IDENTITY_OP)
        target = np.outer(rho_inf, one.conj())
        assert np.abs(slip_propagator(40.0, TH) - target).max() < 1e-8

    def test_pole_cancellation_rings(self):
        # the slip approximation cancels every isolated pole; the bare
        # semigroup leaves the parity pole at E = -i gamma
        pr = RlmProvider(TH)
        slip = slip_operator(TH)
        ground = vectorize(np.diag([1.0, 0.0]).astype(complex))

        def ring_err(approx_hat, pole):
            errs = []
            for k in range(16):
                e = pole + 0.05 * TH.gamma * cmath.exp(2j * math.pi * k / 16)
                diff = pr.propagator_hat(e) - approx_hat(e)
                errs.append(abs(ground.conj() @ (diff @ ground)))
            return max(errs)

        poles = (0.0, -1j * TH.gamma, TH.epsilon - 0.5j * TH.gamma,
                 -TH.epsilon - 0.5j * TH.gamma)
        for pole in poles:
            e2 = ring_err(lambda e: slip_propagator_hat(e, TH, slip=slip), pole)
            assert e2 < 5.0  # finite: no pole left
        e1 = ring_err(lambda e: semigroup_propagator_hat(e, TH), -1j * TH.gamma)
        e2 = ring_err(lambda e: slip_propagator_hat(e, TH, slip=slip), -1j * TH.gamma)
        assert e1 / e2 > 10.0
        # shrinking the ring confirms the leftover pole of the bare semigroup
        def ring_err_r(approx_hat, pole, r):
            errs = []
            for k in range(16):
                e = pole + r * cmath.exp(2j * math.pi * k / 16)
                diff = pr.propagator_hat(e) - approx_hat(e)
                errs.append(abs(ground.conj() @ (diff @ ground)))
            return max(errs)
        small = ring_err_r(lambda e: semigroup_propagator_hat(e, TH), -1j * TH.gamma, 0.01)
        big = ring_err_r(lambda e: semigroup_propagator_hat(e, TH), -1j * TH.gamma, 0.05)
        assert small / big > 3.0

    def test_better_late_time_occupation_than_semigroup(self):
        # L2 error over [2, 10]/gamma for the figure parameters gamma = 4T
        th = ModelParams(0.5, 0.0, 0.25, 1.0)
        pr = RlmProvider(th)
        slip = slip_operator(th)
        rho0 = vectorize(np.diag([1.0, 0.0]).astype(complex))
        n_vec = vectorize(NUMBER_OP)
        ts = np.linspace(2.0, 10.0, 33)
        err1 = err2 = 0.0
        for t in ts:
            exact = np.real(n_vec.conj() @ (pr.propagator(t) @ rho0))
            occ1 = np.real(n_vec.conj() @ (semigroup_propagator(t, th) @ rho0))
            occ2 = np.real(n_vec.conj() @ (slip_propagator(t, th, slip=slip) @ rho0))
            err1 += (occ1 - exact) ** 2
            err2 += (occ2 - exact) ** 2
        assert err2 < err1


class TestCpOnset:
    def test_generic_finite_and_reproducible(self):
        th = ModelParams(1.0, 0.0, 0.5, 1.0)
        a = cp_onset_time(th, scan_points=400)
        b = cp_onset_time(th, scan_points=800)
        assert isinstance(a, float) and a > 0
        assert abs(a - b) < 1e-3 / th.temperature

    def test_always_when_slip_trivial(self):
        assert cp_onset_time(HOT) == ALWAYS

    def test_never_when_horizon_too_short(self):
        th = ModelParams(1.0, 0.0, 0.5, 1.0)
        onset = cp_onset_time(th)
        assert cp_onset_time(th, t_max=0.5 * onset) == NEVER


class TestBreakdown:
    def test_peaks_near_odd_multiples(self):
        temp = 1.0
        peaks = breakdown_locator(temp, 0.01 * temp, n_max=2)
        assert len(peaks) == 3
        for n, peak in enumerate(peaks):
            target = (2 * n + 1) * 2.0 * math.pi * temp
            assert abs(peak - target) < 0.01 * target

    def test_peak_amplitude_ratio(self):
        temp = 1.0
        gam = 2.0 * math.pi * temp * (1.0 - 1e-3)
        near = abs(k_hat(-0.5j * gam, ModelParams(0.01, 0.0, temp, gam)))
        ref = abs(k_hat(-0.5j * math.pi * temp,
                        ModelParams(0.01, 0.0, temp, math.pi * temp)))
        assert near / ref > 100.0

    def test_large_detuning_no_peaks(self):
        assert breakdown_locator(1.0, 10.0, n_max=1) == []

    def test_requires_detuning(self):
        with pytest.raises(ValueError):
            breakdown_locator(1.0, 0.0)


class TestHeisenbergStationary:
    def test_paths_agree_internally(self):
        gh = heisenberg_stationary_generator(TH)
        assert gh.shape == (4, 4)

    def test_eigenvalues_shifted_duals(self):
        # spectrum is {i gamma - g_dual_i(inf)} with the dual stationary
        # eigenvalues {0, eta eps + i gamma/2, i gamma}
        gh = heisenberg_stationary_generator(TH)
        w = np.linalg.eigvals(gh)
        duals = [0.0, TH.epsilon + 0.5j * TH.gamma, -TH.epsilon + 0.5j * TH.gamma,
                 1j * TH.gamma]
        for gd in duals:
            target = 1j * TH.gamma - gd
            assert min(abs(w - target)) < 1e-9

    def test_hot_limit_reduces_to_adjoint_relation(self):
        gh = heisenberg_stationary_generator(HOT)
        pm = parity_superop(PARITY_OP)
        g_dual = RlmProvider(HOT.dual()).generator_stationary()
        rhs = 1j * HOT.gamma * identity_superop(2) - pm @ g_dual @ pm
        assert np.abs(gh - rhs).max() < 1e-6

    def test_exists_beyond_threshold(self):
        # for gamma > 2 pi T the dual generator has no long-time limit, yet
        # the fixed stationary object is finite
        th = ModelParams(0.5, 0.0, 1.0 / (3.0 * math.pi), 1.0)
        gh = heisenberg_stationary_generator(th)
        assert np.isfinite(gh).all()


class TestRegularizedSlip:
    def test_matches_slip_below_threshold(self):
        th = ModelParams(0.5, 0.0, 1.0 / math.pi, 1.0)  # gamma = pi T
        reg = regularized_slip_limit(th)
        assert not reg.naive_limit_diverges
        assert np.abs(reg.matrix - slip_operator(th).matrix).max() < 1e-5

    def test_diverges_above_threshold_but_regularized_finite(self):
        th = ModelParams(0.5, 0.0, 1.0 / (3.0 * math.pi), 1.0)  # gamma = 3 pi T
        reg = regularized_slip_limit(th)
        assert reg.naive_limit_diverges
        assert reg.naive_final_norm > 1e6
        assert np.abs(reg.matrix - slip_operator(th).matrix).max() < 1e-5

    def test_hot_limit_identity(self):
        reg = regularized_slip_limit(HOT)
        assert np.abs(reg.matrix - identity_superop(2)).max() < 1e-3
