import math

import numpy as np
import pytest

from wrenchgrasp.cost import (REGIME_CLUSTERED, REGIME_DYNAMIC,
                              REGIME_QUASI_STATIC, CostBreakdown, CostWeights,
                              alignment_penalty, analytic_cost, classify_regime,
                              slip_penalty, torque_penalty, total_cost)
from wrenchgrasp.errors import InvalidParameterError
from wrenchgrasp.motion import (ContactParams, Trajectory, contact_events,
                                scale_trajectory, synth_trajectory)
from wrenchgrasp.spatial import Pose, RigidBodyModel
from wrenchgrasp.wrench import contact_velocity
from conftest import random_rotation


class TestTorquePenalty:
    def test_along_axis_filtered(self):
        assert torque_penalty([0, 0, 10], [0, 0, 1]) == 0.0

    def test_planar_norm(self):
        assert torque_penalty([3, 4, 0], [0, 0, 1]) == pytest.approx(5.0)

    def test_orthogonal_passes_full_norm(self):
        tau = np.array([2.0, 0.0, 0.0])
        assert torque_penalty(tau, [0, 0, 1]) == pytest.approx(np.linalg.norm(tau))

    def test_rejects_non_unit_axis(self):
        with pytest.raises(InvalidParameterError):
            torque_penalty([1, 0, 0], [0, 0, 2])


class TestSlipPenalty:
    def test_outside_cone(self):
        # |F_t|=3, |F_n|=4, mu=0.5 -> max(0, 3 - 2) = 1, by direct evaluation
        F = np.array([3.0, 0.0, 4.0])
        assert slip_penalty(F, [0.0, 0.0, 1.0], 0.5) == pytest.approx(1.0)

    def test_inside_cone(self):
        F = np.array([3.0, 0.0, 4.0])
        assert slip_penalty(F, [0.0, 0.0, 1.0], 1.0) == 0.0

    def test_zero_force(self):
        assert slip_penalty(np.zeros(3), [0.0, 0.0, 1.0], 0.5) == 0.0

    def test_matches_hand_evaluation(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            F = rng.normal(size=3) * 20
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            mu = float(rng.uniform(0, 1.5))
            fn = (F @ n) * n
            ft = F - fn
            expected = max(0.0, math.sqrt(ft @ ft) - mu * math.sqrt(fn @ fn))
            assert slip_penalty(F, n, mu) == pytest.approx(expected, abs=1e-12)


class TestAlignmentPenalty:
    def test_identical(self):
        assert alignment_penalty([0, 0, 1], [0, 0, 1]) == 0.0

    def test_orthogonal(self):
        assert alignment_penalty([1, 0, 0], [0, 0, 1]) == pytest.approx(math.pi / 2)

    def test_antiparallel(self):
        assert alignment_penalty([0, 0, -1], [0, 0, 1]) == pytest.approx(math.pi)

    def test_clamps_rounding(self):
        n = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
        assert alignment_penalty(n, n) == 0.0


class TestTotalCost:
    def test_weighted_sum(self):
        w = CostWeights(1, 1, 1)
        assert total_cost((2.0, 1.0, 0.5), w) == pytest.approx(3.5)

    def test_zero(self):
        assert total_cost((0, 0, 0), CostWeights()) == 0.0

    def test_quasi_static_reduces_to_alignment(self):
        w = CostWeights(2.0, 3.0, 0.7)
        c_align = 0.4
        assert total_cost((0.0, 0.0, c_align), w) == pytest.approx(w.w_alpha * c_align)

    def test_weights_must_not_all_vanish(self):
        with pytest.raises(InvalidParameterError):
            CostWeights(0, 0, 0)


def static_trajectory(pose, horizon=1.0, samples=11):
    t = np.linspace(0, horizon, samples)
    return Trajectory(times=t, rotations=np.tile(pose.rotation, (samples, 1, 1)),
                      positions=np.tile(pose.translation, (samples, 1)),
                      velocities=np.zeros((samples, 3)),
                      angular_velocities=np.zeros((samples, 3)), horizon=horizon)


class TestAnalyticCost:
    def test_zero_velocity_reduces_to_alignment(self, hammer_scenario):
        scn = hammer_scenario
        cloud = scn.cloud()
        g = scn.candidates(cloud, 101)[0]
        pose = Pose(np.eye(3), scn.omega.c_obj - scn.omega.c_tool
                    + np.array([0, 0, 0.1]))
        traj = static_trajectory(pose)
        b = analytic_cost(g, traj, scn.omega, scn.body, scn.weights)
        assert b.c_tau == 0.0
        assert b.c_slip == 0.0
        expected_align = alignment_penalty(g.finger_normal, scn.omega.n)
        assert b.c_align == pytest.approx(expected_align, abs=1e-12)
        assert b.total == scn.weights.w_alpha * b.c_align

    def test_single_event_matches_direct_composition(self, hammer_scenario):
        """World-frame recomposition of the chain, independent of the
        tool-frame path used by analytic_cost."""
        scn = hammer_scenario
        cloud = scn.cloud()
        traj = scn.trajectory()
        for g in scn.candidates(cloud, 102)[:10]:
            events = contact_events(traj, scn.omega)
            assert len(events) == 1
            ev = events[0]
            R = traj.rotations[ev.sample_index]
            p = traj.positions[ev.sample_index]
            c_tool_w = R @ scn.omega.c_tool + p
            com_w = R @ scn.body.com + p
            v_cp = ev.v + np.cross(ev.omega, c_tool_w - p)
            n = scn.omega.n
            r_w = c_tool_w - com_w
            I_w = R @ scn.body.inertia @ R.T
            denom = 1.0 / scn.body.mass + float(
                n @ np.cross(np.linalg.solve(I_w, np.cross(r_w, n)), r_w))
            j = -(1 + scn.body.restitution) * float(v_cp @ n) / denom
            F_w = (j / scn.impulse_dt) * n
            grasp_w = R @ g.pose.translation + p
            tau_w = np.cross(c_tool_w - grasp_w, F_w)
            a_w = R @ g.closure_axis
            nf_w = R @ g.finger_normal
            c_tau = np.linalg.norm(tau_w - (tau_w @ a_w) * a_w)
            fn = (F_w @ nf_w) * nf_w
            ft = F_w - fn
            c_slip = max(0.0, np.linalg.norm(ft)
                         - scn.body.friction * np.linalg.norm(fn))
            c_align = math.acos(np.clip(nf_w @ n, -1, 1))
            b = analytic_cost(g, traj, scn.omega, scn.body, scn.weights,
                              impulse_dt=scn.impulse_dt)
            assert b.c_tau == pytest.approx(c_tau, abs=1e-9)
            assert b.c_slip == pytest.approx(c_slip, abs=1e-9)
            assert b.c_align == pytest.approx(c_align, abs=1e-9)

    def test_se3_invariance(self, hammer_scenario):
        scn = hammer_scenario
        cloud = scn.cloud()
        cands = scn.candidates(cloud, 103)[:5]
        traj = scn.trajectory()
        base = [analytic_cost(g, traj, scn.omega, scn.body, scn.weights)
                for g in cands]
        rng = np.random.default_rng(31)
        for _ in range(20):
            Q = random_rotation(rng)
            t = rng.uniform(-1, 1, size=3)
            traj_q = Trajectory(
                times=traj.times,
                rotations=np.einsum("ij,njk->nik", Q, traj.rotations),
                positions=traj.positions @ Q.T + t,
                velocities=traj.velocities @ Q.T,
                angular_velocities=traj.angular_velocities @ Q.T,
                horizon=traj.horizon)
            omega_q = ContactParams(scn.omega.c_tool, Q @ scn.omega.c_obj + t,
                                    Q @ scn.omega.n, Q @ scn.omega.d)
            for g, b0 in zip(cands, base):
                b = analytic_cost(g, traj_q, omega_q, scn.body, scn.weights)
                assert b.c_tau == pytest.approx(b0.c_tau, abs=1e-9)
                assert b.c_slip == pytest.approx(b0.c_slip, abs=1e-9)
                assert b.c_align == pytest.approx(b0.c_align, abs=1e-9)

    def test_quasi_static_scaling_monotone(self, hammer_scenario):
        scn = hammer_scenario
        cloud = scn.cloud()
        g = scn.candidates(cloud, 104)[0]
        traj = scn.trajectory()
        taus, slips = [], []
        for s in (1.0, 0.5, 0.1, 0.01):
            b = analytic_cost(g, scale_trajectory(traj, s), scn.omega,
                              scn.body, scn.weights)
            taus.append(b.c_tau)
            slips.append(b.c_slip)
        assert all(a >= b for a, b in zip(taus, taus[1:]))
        assert all(a >= b for a, b in zip(slips, slips[1:]))
        tiny = scale_trajectory(traj, 0.01)
        assert contact_events(tiny, scn.omega) == []
        b = analytic_cost(g, tiny, scn.omega, scn.body, scn.weights)
        assert b.c_tau == 0.0 and b.c_slip == 0.0
        assert b.total == scn.weights.w_alpha * b.c_align

    def test_dt_ranking_invariance(self, hammer_scenario):
        scn = hammer_scenario
        cloud = scn.cloud()
        cands = scn.candidates(cloud, 105)
        traj = scn.trajectory()
        w = CostWeights(1.0, 1.0, 0.0)
        argmins = []
        for dt in (0.001, 0.005, 0.020):
            totals = [analytic_cost(g, traj, scn.omega, scn.body, w,
                                    impulse_dt=dt).total for g in cands]
            argmins.append(int(np.argmin(totals)))
        assert argmins[0] == argmins[1] == argmins[2]

    def test_lever_arm_monotonicity(self):
        # fixed force perpendicular to the lever: penalty grows with distance
        F = np.array([0.0, 0.0, 50.0])
        axis = np.array([1.0, 0.0, 0.0])
        last = -1.0
        for dist in (0.05, 0.1, 0.2, 0.4):
            tau = np.cross(np.array([dist, 0.0, 0.0]), F)
            c = torque_penalty(tau, axis)
            assert c > last
            last = c

    def test_interaction_normal_noise_is_gentle(self, hammer_scenario):
        """Tilting the interaction normal by sigma moves the cost O(sigma)."""
        scn = hammer_scenario
        cloud = scn.cloud()
        cands = scn.candidates(cloud, 106)[:10]
        traj = scn.trajectory()
        base = np.array([analytic_cost(g, traj, scn.omega, scn.body,
                                       scn.weights).total for g in cands])
        rng = np.random.default_rng(77)
        slopes = []
        for sigma_deg in (0.5, 1.0, 2.0):
            sigma = math.radians(sigma_deg)
            deltas = []
            for _ in range(5):
                axis = rng.normal(size=3)
                axis -= (axis @ scn.omega.n) * scn.omega.n
                axis /= np.linalg.norm(axis)
                from wrenchgrasp.spatial import rotation_about_axis
                n2 = rotation_about_axis(axis, sigma) @ scn.omega.n
                omega2 = ContactParams(scn.omega.c_tool, scn.omega.c_obj, n2,
                                       scn.omega.d)
                pert = np.array([analytic_cost(g, traj, omega2, scn.body,
                                               scn.weights).total for g in cands])
                deltas.append(np.mean(np.abs(pert - base)))
            slopes.append(np.mean(deltas) / sigma)
        # slope stays bounded: no blow-up as sigma shrinks toward zero
        assert max(slopes) < 10.0 * max(np.mean(base), 1.0)
        assert np.isfinite(slopes).all()

    def test_selection_stable_under_cloud_normal_noise(self, hammer_scenario):
        scn = hammer_scenario
        cloud = scn.cloud()
        traj = scn.trajectory()
        rng = np.random.default_rng(99)

        def select(c):
            cands = scn.candidates(c, 107)
            totals = [analytic_cost(g, traj, scn.omega, scn.body,
                                    scn.weights).total for g in cands]
            best = cands[int(np.argmin(totals))]
            return (best.contact_pair[0] + best.contact_pair[1]) / 2

        clean = select(cloud)
        sigma = math.radians(0.5)
        from wrenchgrasp.spatial import PointCloud, rotation_about_axis
        normals = cloud.normals.copy()
        for i in range(len(normals)):
            axis = rng.normal(size=3)
            axis -= (axis @ normals[i]) * normals[i]
            axis /= np.linalg.norm(axis)
            normals[i] = rotation_about_axis(axis, sigma) @ normals[i]
        noisy = select(PointCloud(cloud.points, normals))
        assert np.linalg.norm(noisy - clean) < 0.02


class TestClassifyRegime:
    def _traj(self, speed, horizon=1.0):
        omega = ContactParams([0.3, 0, 0], [0.6, 0, 0], [-1, 0, 0], [1, 0, 0])
        return synth_trajectory("knock", {"v_peak_mps": speed}, omega)

    def test_zero_acceleration_quasi_static(self, hammer_scenario):
        pose = Pose.identity()
        traj = static_trajectory(pose)
        assert classify_regime(hammer_scenario.body, traj, 40.0, 1) == \
            REGIME_QUASI_STATIC

    def test_multi_contact_clustered(self, hammer_scenario):
        traj = self._traj(0.5)
        assert classify_regime(hammer_scenario.body, traj, 40.0, 5) == \
            REGIME_CLUSTERED

    def test_inertial_dominance_dynamic(self):
        body = RigidBodyModel(50.0, np.zeros(3), np.eye(3) * 0.5, 0.3, 0.5)
        traj = self._traj(3.0)
        assert classify_regime(body, traj, 1.0, 1) == REGIME_DYNAMIC

    def test_rejects_bad_reaction(self, hammer_scenario):
        with pytest.raises(InvalidParameterError):
            classify_regime(hammer_scenario.body, self._traj(0.5), 0.0, 1)


def test_breakdown_invariant():
    w = CostWeights(2.0, 0.5, 1.5)
    b = CostBreakdown.of(1.0, 2.0, 3.0, w)
    assert b.total == pytest.approx(2.0 * 1.0 + 0.5 * 2.0 + 1.5 * 3.0, abs=1e-12)
