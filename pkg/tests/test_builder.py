"""Conic embedding of the fixed-cap design problem.

The oracle strategy: structural facts (row/variable counts, layout round
trips) are checked exactly; semantic facts are checked against the
independent ball-extremum evaluator and plain Monte-Carlo sampling of the
uncertainty balls, never against the builder's own matrices.
"""

from dataclasses import replace

import numpy as np
import pytest

from swiptbeam.builder import VariableLayout, beta_bounds, build_p4, map_solution
from swiptbeam.config import baseline_params
from swiptbeam.model import generate_channels
from swiptbeam.solver import solve

from helpers import ball_points, quad_forms, random_hermitian, cn_vector


class TestBetaBounds:
    def test_unit_norm_channel(self):
        params = baseline_params(nt=4)
        h = np.zeros(4, dtype=complex)
        h[0] = 1.0
        lo, hi = beta_bounds(params, h)
        assert lo == 1.0
        # p_th = 10**0.2 W over sigma_sp2 = 0.01
        assert hi == pytest.approx(159.48931924611136, rel=1e-14)

    def test_hand_sized_interval(self):
        params = baseline_params(nt=2, num_ehr=1, num_pu=1)
        params = replace(params, p_th=0.01)
        lo, hi = beta_bounds(params, np.array([1.0, 1.0 + 0j]))  # ||h||^2 = 2
        assert [lo, hi] == pytest.approx([1.0, 3.0], rel=1e-14)

    def test_vanishing_budget_collapses_interval(self):
        params = replace(baseline_params(nt=2, num_ehr=1, num_pu=1), p_th=1e-300)
        lo, hi = beta_bounds(params, np.array([1.0, 1.0 + 0j]))
        assert lo == hi == 1.0


def robust_params(nt=4):
    return baseline_params(nt=nt, num_ehr=3, num_pu=2, r_min=0.5)


def nominal_params(nt=4):
    p = robust_params(nt)
    return replace(p, xi_e=(0.0,) * 3, xi_p=(0.0,) * 2)


class TestProblemShape:
    def test_all_balls_active(self):
        params = robust_params()
        ch = generate_channels(params, seed=1)
        prob = build_p4(params, ch, beta=1.6)
        assert prob.cones.nonneg == 11      # 8 multiplier signs + t row + rate + power
        assert prob.cones.soc == (3,)
        assert prob.cones.psd == (4, 4) + (5,) * 8
        assert prob.num_vars == 42
        assert prob.A.shape == (246, 42)
        assert prob.layout.num_vars == 42

    def test_all_balls_degenerate(self):
        params = nominal_params()
        ch = generate_channels(params, seed=1)
        prob = build_p4(params, ch, beta=1.6)
        # no S-procedure blocks survive; each ball becomes one scalar row
        assert prob.cones.nonneg == 11      # t + rate + power + 8 nominal rows
        assert prob.cones.soc == (3,)
        assert prob.cones.psd == (4, 4)
        assert prob.num_vars == 34
        assert prob.layout.n_ehr_mult == 0
        assert prob.layout.n_pu_mult == 0

    def test_mixed_radii(self):
        params = replace(
            robust_params(), xi_e=(0.03, 0.0, 0.03), xi_p=(0.0, 0.01)
        )
        ch = generate_channels(params, seed=1)
        prob = build_p4(params, ch, beta=1.6)
        assert prob.layout.ehr_active == (True, False, True)
        assert prob.layout.pu_active == (False, True)
        assert prob.cones.psd == (4, 4) + (5,) * 5
        assert prob.cones.nonneg == 2 * 2 + 1 + 3 + 3
        assert prob.num_vars == 2 * 16 + 2 + 2 * 2 + 1

    def test_build_is_bitwise_deterministic(self):
        params = robust_params()
        ch = generate_channels(params, seed=5)
        a = build_p4(params, ch, beta=2.0)
        b = build_p4(params, ch, beta=2.0)
        assert a.A.tobytes() == b.A.tobytes()
        assert a.b.tobytes() == b.b.tobytes()
        assert a.c.tobytes() == b.c.tobytes()

    def test_rejected_inputs(self):
        params = robust_params()
        ch = generate_channels(params, seed=1)
        with pytest.raises(ValueError, match="antenna count"):
            build_p4(robust_params(nt=6), ch, beta=1.5)
        with pytest.raises(ValueError, match="receiver counts"):
            build_p4(replace(params, num_pu=1, p_in=(0.1,), xi_p=(0.01,)), ch, beta=1.5)
        with pytest.raises(ValueError, match="eps_t"):
            build_p4(params, ch, beta=1.5, eps_t=0.0)
        with pytest.raises(ValueError, match="outside"):
            build_p4(params, ch, beta=0.5)
        lo, hi = beta_bounds(params, ch.h)
        with pytest.raises(ValueError, match="outside"):
            build_p4(params, ch, beta=hi * 1.01)
        # endpoints themselves are legal
        build_p4(params, ch, beta=hi)
        build_p4(params, ch, beta=lo)


class TestVariableLayout:
    def test_round_trip_full(self):
        rng = np.random.default_rng(2)
        lay = VariableLayout(nt=3, num_ehr=2, num_pu=2)
        W = random_hermitian(rng, 3)
        S = random_hermitian(rng, 3)
        om, mu, de = rng.uniform(0, 1, 2), rng.uniform(0, 1, 2), rng.uniform(0, 1, 2)
        x = lay.join(W, S, 1.7, 0.3, om, mu, de)
        W2, S2, t2, tau2, om2, mu2, de2 = lay.split(x)
        np.testing.assert_allclose(W2, W, atol=1e-13)
        np.testing.assert_allclose(S2, S, atol=1e-13)
        assert (t2, tau2) == (1.7, 0.3)
        np.testing.assert_allclose(om2, om, atol=1e-15)
        np.testing.assert_allclose(mu2, mu, atol=1e-15)
        np.testing.assert_allclose(de2, de, atol=1e-15)

    def test_masked_multipliers_read_back_as_zero(self):
        rng = np.random.default_rng(3)
        lay = VariableLayout(
            nt=2, num_ehr=3, num_pu=1, ehr_active=(True, False, True), pu_active=(False,)
        )
        assert lay.num_vars == 2 * 4 + 2 + 2 * 2 + 0
        x = lay.join(
            random_hermitian(rng, 2), random_hermitian(rng, 2), 1.5, 0.1,
            np.array([1.0, 99.0, 2.0]), np.array([3.0, 99.0, 4.0]), np.array([99.0]),
        )
        _, _, _, _, om, mu, de = lay.split(x)
        np.testing.assert_array_equal(om, [1.0, 0.0, 2.0])  # dropped slot reads 0
        np.testing.assert_array_equal(mu, [3.0, 0.0, 4.0])
        np.testing.assert_array_equal(de, [0.0])

    def test_mask_length_validation(self):
        with pytest.raises(ValueError):
            VariableLayout(nt=2, num_ehr=3, num_pu=0, ehr_active=(True, False))


def first_feasible_solution(params, ch, n_probes=8):
    """Scan a few cap values and return the first certified-optimal solve."""
    lo, hi = beta_bounds(params, ch.h)
    for beta in np.linspace(lo + 0.05, min(hi, lo + 4.0), n_probes):
        prob = build_p4(params, ch, beta=float(beta))
        sol = solve(prob, tol=1e-8)
        if sol.status == "optimal":
            return float(beta), prob, sol
    pytest.fail("no feasible cap found in the probe range")


class TestSolutionSemantics:
    def test_map_solution_requires_optimal(self):
        params = robust_params()
        ch = generate_channels(params, seed=11)
        prob = build_p4(params, ch, beta=1.5)
        sol = solve(prob, tol=1e-8)
        if sol.status == "optimal":  # make a non-optimal stand-in either way
            from dataclasses import replace as dc_replace

            sol = dc_replace(sol, status="max_iterations")
        with pytest.raises(ValueError, match="cannot map"):
            map_solution(sol, prob.layout)

    def test_solved_point_obeys_every_sampled_channel(self):
        """Monte-Carlo audit of the S-procedure blocks on a solved instance.

        Every constraint the cones encode must hold at every sampled point
        of every uncertainty ball; this is the end-to-end soundness check
        that does not trust the builder's own algebra.
        """
        params = robust_params()
        ch = generate_channels(params, seed=11, realization=3)
        beta, prob, sol = first_feasible_solution(params, ch)
        W, Sig, t, tau, slacks = map_solution(sol, prob.layout)

        tr = float(np.trace(W).real)
        assert np.linalg.eigvalsh(W)[0] >= -1e-8 * max(tr, 1.0)
        assert np.linalg.eigvalsh(Sig)[0] >= -1e-8 * max(tr, 1.0)
        assert t >= 1.0 + 1e-6 - 1e-9
        assert float(np.trace(W + Sig).real) <= params.p_th + 1e-7
        assert all(v.min() >= -1e-9 for v in slacks.values())

        # secrecy target at rho = 1/t, written in rate form
        rho = 1.0 / t
        num = rho * float(np.vdot(ch.h, W @ ch.h).real)
        den = rho * (float(np.vdot(ch.h, Sig @ ch.h).real) + params.sigma_s2)
        den += params.sigma_sp2
        c_s = np.log2(1.0 + num / den)

        rng = np.random.default_rng(99)
        tol = 1e-6
        for k in range(params.num_ehr):
            pts = ch.g_bar[k] + ball_points(rng, params.nt, params.xi_e[k], 1000)
            sig = quad_forms(W, pts)
            noise = quad_forms(Sig, pts) + params.sigma_e2
            assert (sig / noise).max() <= (beta - 1.0) + tol
            # harvested energy floor
            energy = params.eta * (quad_forms(W + Sig, pts) + params.sigma_e2)
            assert energy.min() >= tau - tol
            # implied rate margin
            assert c_s - np.log2(1.0 + (sig / noise).max()) >= params.r_min - tol
        for i in range(params.num_pu):
            pts = ch.q_bar[i] + ball_points(rng, params.nt, params.xi_p[i], 1000)
            assert quad_forms(W + Sig, pts).max() <= params.p_in[i] + tol

        # SU harvest floor, directly in model terms
        e_su = (1.0 - rho) * params.eta * (
            float(np.vdot(ch.h, (W + Sig) @ ch.h).real) + params.sigma_s2
        )
        assert e_su >= params.psi_s - tol

    def test_degenerate_ball_row_is_the_small_radius_limit(self):
        """A radius-0 ball must behave exactly like the nominal constraint.

        Growing any radius shrinks the feasible set, so the objective is
        nonincreasing in xi with the radius-0 build as its supremum; and the
        small-radius optima must converge to it.  (Radii much below ~1e-4
        are not solvable as S-procedure blocks -- the multiplier corner
        entry scales with xi^2 -- which is why the radius-0 build replaces
        the block with a scalar row instead of faking a tiny ball.)
        """
        params = robust_params()
        ch = generate_channels(params, seed=21, realization=1)
        beta, _, _ = first_feasible_solution(params, ch)

        def tau_at(p):
            prob = build_p4(p, ch, beta=beta)
            # ill-conditioned small-radius blocks certify only at 1e-7
            sol = solve(prob, tol=1e-7)
            assert sol.status == "optimal"
            return -float(sol.x @ prob.c)

        taus = [
            tau_at(replace(params, xi_e=(xi,) * 3, xi_p=(xi,) * 2))
            for xi in (1e-2, 1e-3, 1e-4)
        ]
        tau0 = tau_at(replace(params, xi_e=(0.0,) * 3, xi_p=(0.0,) * 2))
        for smaller, larger in zip(taus, taus[1:] + [tau0]):
            assert smaller <= larger + 1e-6 * (1.0 + abs(larger))
        assert tau0 - taus[-1] <= 1e-2 * (1.0 + tau0)


class TestDegenerateBallAlgebra:
    """Radius-0 blocks: one multiplier direction makes the LMI form unbounded,
    so feasibility of the pencil *for some* multiplier is what must match the
    scalar row that replaces it."""

    def _block(self, E, g, rhs, omega):
        # [[omega I - E, -E g], [-(E g)^H, rhs - g^H E g]] at xi = 0
        nt = E.shape[0]
        M = np.zeros((nt + 1, nt + 1), dtype=complex)
        M[:nt, :nt] = omega * np.eye(nt) - E
        Eg = E @ g
        M[:nt, nt] = -Eg
        M[nt, :nt] = -Eg.conj()
        M[nt, nt] = rhs - float(np.vdot(g, Eg).real)
        return M

    @pytest.mark.parametrize("seed", range(25))
    def test_some_multiplier_works_iff_nominal_row_holds(self, seed):
        rng = np.random.default_rng(4000 + seed)
        nt = int(rng.integers(2, 5))
        E = random_hermitian(rng, nt)
        g = cn_vector(rng, nt)
        rhs = float(rng.uniform(-1.5, 1.5))
        gap = rhs - float(np.vdot(g, E @ g).real)
        if gap < 0:
            # corner diagonal entry equals gap for every omega, so no
            # multiplier can ever certify the block
            for omega in (0.0, 1.0, 1e3, 1e9):
                assert self._block(E, g, rhs, omega)[nt, nt] < 0
        elif gap > 1e-12:
            lam_max = float(np.linalg.eigvalsh(E)[-1])
            omega = max(lam_max, 0.0) + np.linalg.norm(E @ g) ** 2 / gap + 1e-9
            evs = np.linalg.eigvalsh(self._block(E, g, rhs, omega))
            assert evs[0] >= -1e-10 * max(1.0, abs(evs[-1]))
