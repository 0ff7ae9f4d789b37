import math

import numpy as np
import pytest

from wrenchgrasp.errors import InvalidParameterError
from wrenchgrasp.spatial import RigidBodyModel
from wrenchgrasp.wrench import (ContactState, WrenchReport, aggregate_contacts,
                                contact_force, contact_velocity,
                                decompose_force, induced_torque, make_report,
                                normal_impulse)
from conftest import random_rotation


def random_body(rng, restitution=None):
    evals = rng.uniform(0.001, 0.05, size=3)
    # enforce the principal-moment triangle inequality
    evals = np.sort(evals)
    evals[2] = min(evals[2], evals[0] + evals[1])
    R = random_rotation(rng)
    inertia = R @ np.diag(evals) @ R.T
    e = rng.uniform(0.0, 1.0) if restitution is None else restitution
    return RigidBodyModel(mass=float(rng.uniform(0.1, 5.0)), com=np.zeros(3),
                          inertia=inertia, restitution=float(e),
                          friction=0.5)


def approaching_state(rng, dt=0.005):
    r = rng.uniform(-0.3, 0.3, size=3)
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    for _ in range(100):
        v = rng.uniform(-2, 2, size=3)
        w = rng.uniform(-5, 5, size=3)
        if (contact_velocity(v, w, r) @ n) < -1e-3:
            return ContactState(r=r, n=n, v=v, omega=w, dt=dt)
    raise AssertionError("could not draw an approaching contact")


def impulse_velocity_update(body, cs, j):
    """Independent free-body update: apply J n at r, return post contact velocity."""
    v_post = cs.v + (j / body.mass) * cs.n
    w_post = cs.omega + np.linalg.solve(body.inertia, np.cross(cs.r, j * cs.n))
    return contact_velocity(v_post, w_post, cs.r)


class TestContactVelocity:
    def test_zero_angular(self):
        assert np.allclose(contact_velocity([1, 0, 0], [0, 0, 0], [0.3, 0.2, 0.1]),
                           [1, 0, 0])

    def test_unit_cross(self):
        assert np.allclose(contact_velocity([0, 0, 0], [0, 0, 1], [1, 0, 0]),
                           [0, 1, 0])

    def test_matches_componentwise_formula(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            v, w, r = rng.normal(size=(3, 3))
            got = contact_velocity(v, w, r)
            expected = np.array([v[0] + w[1] * r[2] - w[2] * r[1],
                                 v[1] + w[2] * r[0] - w[0] * r[2],
                                 v[2] + w[0] * r[1] - w[1] * r[0]])
            assert np.allclose(got, expected, atol=1e-12)


class TestNormalImpulse:
    def test_zero_approach_velocity(self):
        body = RigidBodyModel(1.0, np.zeros(3), np.eye(3) * 0.01, 0.5, 0.5)
        cs = ContactState(r=[0.1, 0, 0], n=[0, 0, 1], v=[1, 0, 0], omega=[0, 0, 0])
        j, no_impact = normal_impulse(body, cs)
        assert j == 0.0 and no_impact

    def test_central_impact(self):
        body = RigidBodyModel(2.0, np.zeros(3), np.eye(3) * 0.01, 0.5, 0.5)
        cs = ContactState(r=[0, 0, 0], n=[0, 0, 1], v=[0, 0, -1], omega=[0, 0, 0])
        j, no_impact = normal_impulse(body, cs)
        assert not no_impact
        assert j == pytest.approx(3.0)

    def test_thin_rod_tip_impact(self):
        body = RigidBodyModel(1.0, np.zeros(3), np.diag([1e-6, 1 / 12, 1 / 12]),
                              0.0, 0.5)
        cs = ContactState(r=[0.5, 0, 0], n=[0, 1, 0], v=[0, -1, 0], omega=[0, 0, 0])
        j, _ = normal_impulse(body, cs)
        # frozen from the restitution oracle: denominator 1/m + r^2/I_zz = 4
        assert j == pytest.approx(0.25, abs=1e-12)
        v_post = impulse_velocity_update(body, cs, j)
        assert float(v_post @ cs.n) == pytest.approx(0.0, abs=1e-12)

    def test_restitution_oracle_1000_random(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            body = random_body(rng)
            cs = approaching_state(rng)
            pre = float(contact_velocity(cs.v, cs.omega, cs.r) @ cs.n)
            j, no_impact = normal_impulse(body, cs)
            assert not no_impact
            assert j > 0
            post = float(impulse_velocity_update(body, cs, j) @ cs.n)
            assert abs(post + body.restitution * pre) < 1e-9

    def test_elastic_central_impact_conserves_energy(self):
        rng = np.random.default_rng(5)
        body = random_body(rng, restitution=1.0)
        cs = ContactState(r=np.zeros(3), n=[0, 0, 1], v=[0.3, -0.2, -1.5],
                          omega=[1.0, 2.0, -0.5])
        j, _ = normal_impulse(body, cs)
        v_post = cs.v + (j / body.mass) * cs.n
        w_post = cs.omega + np.linalg.solve(body.inertia,
                                            np.cross(cs.r, j * cs.n))
        def ke(v, w):
            return 0.5 * body.mass * float(v @ v) + 0.5 * float(w @ body.inertia @ w)
        assert ke(v_post, w_post) == pytest.approx(ke(cs.v, cs.omega), abs=1e-9)

    def test_plastic_impact_kills_normal_velocity(self):
        rng = np.random.default_rng(6)
        body = random_body(rng, restitution=0.0)
        cs = approaching_state(rng)
        j, _ = normal_impulse(body, cs)
        assert float(impulse_velocity_update(body, cs, j) @ cs.n) == \
            pytest.approx(0.0, abs=1e-9)

    def test_frame_covariance(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            body = random_body(rng)
            cs = approaching_state(rng)
            j, _ = normal_impulse(body, cs)
            F = contact_force(j, cs)
            tau = induced_torque(cs.r, F)
            Q = random_rotation(rng)
            body_q = RigidBodyModel(body.mass, Q @ body.com,
                                    Q @ body.inertia @ Q.T, body.restitution,
                                    body.friction)
            cs_q = ContactState(r=Q @ cs.r, n=Q @ cs.n, v=Q @ cs.v,
                                omega=Q @ cs.omega, dt=cs.dt)
            j_q, _ = normal_impulse(body_q, cs_q)
            assert j_q == pytest.approx(j, abs=1e-9 * max(1.0, abs(j)))
            assert np.allclose(contact_force(j_q, cs_q), Q @ F, atol=1e-9)
            assert np.allclose(induced_torque(cs_q.r, Q @ F), Q @ tau, atol=1e-9)

    def test_finite_other_mass_reduces_impulse(self):
        body = RigidBodyModel(2.0, np.zeros(3), np.eye(3) * 0.01, 0.5, 0.5)
        cs = ContactState(r=[0, 0, 0], n=[0, 0, 1], v=[0, 0, -1], omega=[0, 0, 0])
        j_anchored, _ = normal_impulse(body, cs)
        j_free, _ = normal_impulse(body, cs, other_mass=2.0)
        assert j_free == pytest.approx(j_anchored / 2)
        with pytest.raises(InvalidParameterError):
            normal_impulse(body, cs, other_mass=-1.0)


class TestContactForce:
    def test_zero_impulse(self):
        cs = ContactState(r=[0, 0, 0], n=[0, 0, 1], v=[0, 0, -1], omega=[0, 0, 0])
        assert np.allclose(contact_force(0.0, cs), 0.0)

    def test_direct_division(self):
        cs = ContactState(r=[0, 0, 0], n=[0, 0, 1], v=[0, 0, -1], omega=[0, 0, 0],
                          dt=0.005)
        assert np.allclose(contact_force(3.0, cs), [0, 0, 600.0])

    def test_halving_dt_doubles_force(self):
        cs1 = ContactState(r=[0, 0, 0], n=[0, 0, 1], v=[0, 0, -1],
                           omega=[0, 0, 0], dt=0.01)
        cs2 = ContactState(r=[0, 0, 0], n=[0, 0, 1], v=[0, 0, -1],
                           omega=[0, 0, 0], dt=0.005)
        f1 = np.linalg.norm(contact_force(2.0, cs1))
        f2 = np.linalg.norm(contact_force(2.0, cs2))
        assert f2 == pytest.approx(2 * f1)

    def test_rejects_bad_dt(self):
        with pytest.raises(InvalidParameterError):
            ContactState(r=[0, 0, 0], n=[0, 0, 1], v=[0, 0, -1],
                         omega=[0, 0, 0], dt=0.0)


class TestInducedTorque:
    def test_orthogonal_cross(self):
        assert np.allclose(induced_torque([1, 0, 0], [0, 10, 0]), [0, 0, 10])

    def test_parallel_zero(self):
        assert np.allclose(induced_torque([2, 2, 0], [1, 1, 0]), 0.0)

    def test_lever_scaling(self):
        F = np.array([0.0, 3.0, 1.0])
        r = np.array([0.2, 0.0, 0.1])
        for k in (2.0, 5.0):
            assert np.linalg.norm(induced_torque(k * r, F)) == pytest.approx(
                k * np.linalg.norm(induced_torque(r, F)))

    def test_torque_norm_identity(self):
        # |tau| = |r| |F_perp| with F_perp the component of F orthogonal to r
        rng = np.random.default_rng(12)
        for _ in range(100):
            r, F = rng.normal(size=(2, 3))
            tau = induced_torque(r, F)
            r_hat = r / np.linalg.norm(r)
            F_perp = F - float(F @ r_hat) * r_hat
            assert np.linalg.norm(tau) == pytest.approx(
                np.linalg.norm(r) * np.linalg.norm(F_perp), abs=1e-9)


class TestDecomposeForce:
    def test_axis_aligned(self):
        f_n, f_t = decompose_force([3.0, 0.0, 4.0], [0.0, 0.0, 1.0])
        assert np.allclose(f_n, [0, 0, 4])
        assert np.allclose(f_t, [3, 0, 0])

    def test_parallel_force(self):
        f_n, f_t = decompose_force([0.0, 0.0, -2.0], [0.0, 0.0, 1.0])
        assert np.allclose(f_t, 0.0)

    def test_reconstruction_and_orthogonality(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            F = rng.normal(size=3) * 10
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            f_n, f_t = decompose_force(F, n)
            assert np.allclose(f_n + f_t, F, atol=1e-12)
            assert abs(float(f_n @ f_t)) < 1e-12 * max(1.0, float(F @ F))

    def test_rejects_non_unit(self):
        with pytest.raises(InvalidParameterError):
            decompose_force([1, 0, 0], [0, 0, 2])


class TestAggregate:
    def _report(self, scale=1.0):
        return make_report(scale * 2.0, np.array([scale, 0, 0]),
                           np.array([0, scale, 0]), np.array([1.0, 0, 0]))

    def test_single_unchanged(self):
        r = self._report()
        out = aggregate_contacts([r])
        assert out.impulse == r.impulse
        assert np.allclose(out.force, r.force)
        assert np.allclose(out.torque, r.torque)

    def test_cancellation(self):
        r = self._report()
        neg = WrenchReport(-r.impulse, -r.force, -r.torque, -r.f_normal,
                           -r.f_tangent)
        out = aggregate_contacts([r, neg])
        assert out.impulse == 0.0
        assert np.allclose(out.force, 0.0)
        assert np.allclose(out.torque, 0.0)

    def test_linearity(self):
        r = self._report()
        out = aggregate_contacts([r] * 5)
        assert out.impulse == pytest.approx(5 * r.impulse)
        assert np.allclose(out.force, 5 * r.force)

    def test_empty_is_zero(self):
        out = aggregate_contacts([])
        assert out.impulse == 0.0
        assert np.allclose(out.force, 0.0)


def test_report_split_is_consistent():
    rng = np.random.default_rng(8)
    for _ in range(50):
        F = rng.normal(size=3)
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        rep = make_report(1.0, F, np.zeros(3), n)
        assert np.allclose(rep.f_normal + rep.f_tangent, rep.force, atol=1e-9)
        assert abs(float(rep.f_tangent @ n)) < 1e-9
