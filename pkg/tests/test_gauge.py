import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaugemap.errors import ChartError, ContractError, PreconditionError, ResolutionError
from gaugemap.fields import (ConstantField, PerSiteField, RotatingField, ScaledField,
                             SinusoidalField, random_smooth_field)
from gaugemap.gauge import (PHASE_SIGN, GaugeTrajectory, GaussGaugeState, assemble_collective_rotation,
                            assemble_fermion_rotation, assemble_ising_rotation, build_gauge_map,
                            flow_equation_residual, gauge_map_residual, gauge_potential,
                            gauss_to_covariant, integrate_covariant, integrate_gauss, ising_phases,
                            make_integrable_ising_field, make_ising_field, phase_sign_report,
                            resolve_phase_sign)
from gaugemap.linalg import axis_angle_distance, expm_unitary, su2_log, su2_rotation
from gaugemap.models import CouplingGraph, build_fermion, build_heisenberg, build_ising

from oracles import RABI


def su2_dist(u, v):
    return axis_angle_distance(su2_log(u).vector, su2_log(v).vector)


def comm(a, b):
    return a @ b - b @ a


class TestCovariantFlow:
    def test_constant_z(self):
        grid = np.linspace(0, 5, 11)
        tr = integrate_covariant(ConstantField([0, 0, 0.9]), grid, 1e-11)
        for t, s in zip(grid, tr.states):
            assert abs(s.angle - 0.9 * t) <= 1e-9
            if t > 0:
                assert np.allclose(s.axis, [0, 0, 1])

    def test_zero_field_identity(self):
        tr = integrate_covariant(ConstantField([0, 0, 0]), np.linspace(0, 3, 5), 1e-10)
        assert all(s.angle == 0 for s in tr.states)
        assert np.array_equal(tr.su2_at(2.2), np.eye(2))

    def test_rabi_closed_form(self):
        prot = RotatingField(RABI["B1"], RABI["omega"], bz=RABI["B0"])
        tr = integrate_covariant(prot, np.linspace(0, RABI["t"], 9), 1e-12)
        psi = tr.su2_at(RABI["t"]) @ np.array([1, 0])
        assert np.linalg.norm(psi - RABI["state"]) <= 1e-7

    def test_through_many_turns(self):
        # K = t along x: several 2π crossings, spin-1/2 sign included
        grid = np.linspace(0, 20, 41)
        tr = integrate_covariant(ConstantField([1.0, 0, 0]), grid, 1e-11)
        for t in grid:
            assert np.linalg.norm(tr.su2_at(t) - su2_rotation([t, 0, 0])) <= 1e-8
        angles = np.array([s.angle for s in tr.states])
        assert np.max(np.abs(np.diff(angles) - 0.5)) <= 1e-8  # unwrapped, continuous
        assert tr.stats["segments"] > 1

    def test_rows(self):
        tr = integrate_covariant(ConstantField([0, 1, 0]), np.linspace(0, 1, 4), 1e-10)
        rows = tr.rows()
        assert len(rows) == 4 and all(len(r) == len(GaugeTrajectory.CSV_COLUMNS) for r in rows)

    def test_contracts(self):
        with pytest.raises(ContractError):
            integrate_covariant(ConstantField([0, 0, 1]), [0, 1, 1], 1e-10)
        with pytest.raises(ContractError):
            integrate_covariant(ConstantField([0, 0, 1]), [0, 1], 1e-3)
        with pytest.raises(ContractError):
            integrate_covariant(PerSiteField([ConstantField([0, 0, 1])] * 2), [0, 1], 1e-10)


class TestGaussFlow:
    def test_constant_z(self):
        tr = integrate_gauss(ConstantField([0, 0, 0.7]), np.linspace(0, 4, 9), 1e-11)
        for g in tr.gauss_states:
            assert abs(g.xi_plus) <= 1e-12 and abs(g.xi_minus) <= 1e-12
            assert abs(g.xi_z - 0.7j * g.t) <= 1e-9

    def test_zero(self):
        tr = integrate_gauss(ConstantField([0, 0, 0]), np.linspace(0, 4, 5), 1e-11)
        assert all(g.xi_plus == g.xi_z == g.xi_minus == 0 for g in tr.gauss_states)

    def test_chart_blowup(self):
        # U = exp(i t Sx) has a vanishing lower-right entry at t = π
        with pytest.raises(ChartError) as err:
            integrate_gauss(ConstantField([1.0, 0, 0]), np.linspace(0, 4, 9), 1e-10)
        assert abs(err.value.time - np.pi) < 1e-3

    @settings(max_examples=8)
    @given(st.integers(0, 2**31))
    def test_matches_covariant_and_stays_unitary(self, seed):
        prot = random_smooth_field(np.random.default_rng(seed), scale=0.4)
        grid = np.linspace(0, 6, 25)
        try:
            gs = integrate_gauss(prot, grid, 1e-11)
        except ChartError:
            return
        cv = integrate_covariant(prot, grid, 1e-11)
        assert gs.stats["max_unitarity_residual"] <= 1e-8
        for a, b in zip(gs.states, cv.states):
            assert axis_angle_distance(a.vector, b.vector) <= 1e-7


class TestGaussToCovariant:
    def test_trivial(self):
        assert gauss_to_covariant(GaussGaugeState(0, 0, 0, 0)).angle == 0
        c = gauss_to_covariant(GaussGaugeState(0, 0, 1.1j, 0))
        assert np.allclose(c.vector, [0, 0, 1.1])

    def test_random_valid(self, rng):
        for _ in range(50):
            xm = complex(*rng.normal(size=2))
            th = rng.uniform(-3, 3)
            xz = np.log(1 + abs(xm) ** 2) + 1j * th
            xp = -np.conj(xm) * np.exp(1j * th)
            g = GaussGaugeState(0, xp, xz, xm)
            assert g.unitarity_defect() <= 1e-12
            c = gauss_to_covariant(g)
            assert su2_dist(su2_rotation(c.vector), g.matrix()) <= 1e-8


class TestAssembly:
    def test_collective(self, rng):
        m = build_heisenberg(CouplingGraph.chain(3, [0.4, -1.1]))
        assert np.allclose(assemble_collective_rotation(np.zeros(3), m), np.eye(8))
        one = build_heisenberg(CouplingGraph(1))
        k = rng.normal(size=3)
        assert np.allclose(assemble_collective_rotation(k, one), su2_rotation(k))
        u = assemble_collective_rotation(k, m)
        ref = expm_unitary(np.tensordot(k, m.total_spin, axes=(0, 0)), -1.0)
        assert np.linalg.norm(u - ref) <= 1e-9
        assert np.linalg.norm(u.conj().T @ u - np.eye(8)) <= 1e-10
        assert np.linalg.norm(comm(u, m.static)) <= 1e-10

    def test_fermion(self, rng):
        eps = rng.normal(size=(2, 2))
        m = build_fermion(eps + eps.T, np.abs(rng.normal(size=(2, 2))) * np.eye(2) + 0.3)
        th = 0.9
        u = assemble_fermion_rotation([0, 0, th], m)
        sz = np.diag(m.extra["number_up"] - m.extra["number_down"]).real
        assert np.allclose(u, np.diag(np.exp(0.5j * th * sz)), atol=1e-12)
        u = assemble_fermion_rotation(rng.normal(size=3), m)
        assert np.linalg.norm(comm(u, m.extra["number"])) <= 1e-12
        assert np.linalg.norm(u @ m.static @ u.conj().T - m.static) <= 1e-10

    def test_ising(self, rng):
        one = build_ising(CouplingGraph(1))
        assert np.allclose(assemble_ising_rotation([np.pi], one), 1j * np.array([[0, 1], [1, 0]]))
        m = build_ising(CouplingGraph.chain(4, rng.normal(size=3)))
        assert np.allclose(assemble_ising_rotation(np.zeros(4), m), np.eye(16))
        u = assemble_ising_rotation(rng.normal(size=4), m)
        assert np.linalg.norm(comm(u, m.static)) <= 1e-12
        v = assemble_ising_rotation(rng.normal(size=4), m)
        assert np.linalg.norm(comm(u, v)) <= 1e-12
        with pytest.raises(ContractError):
            assemble_ising_rotation([0.1, 0.2], m)


class TestIsingPhases:
    def test_values(self):
        grid = np.linspace(0, 5, 11)
        assert np.all(ising_phases(ConstantField([0, 0, 1]), grid).phases == 0)
        ph = ising_phases(ConstantField([0.7, 0, 0]), grid).phases[:, 0]
        assert np.allclose(ph, PHASE_SIGN * 0.7 * grid, atol=1e-12)
        b, w = 1.3, 0.8
        ph = ising_phases(SinusoidalField([0, 0, 0], [[b, 0, 0]], [w], [np.pi / 2]), grid).phases[:, 0]
        assert np.allclose(ph, PHASE_SIGN * b / w * np.sin(w * grid), atol=1e-10)

    def test_sign_resolution(self):
        assert resolve_phase_sign() == PHASE_SIGN
        rep = phase_sign_report()
        assert rep["residual_plus" if PHASE_SIGN > 0 else "residual_minus"] <= 1e-12
        assert rep["residual_minus" if PHASE_SIGN > 0 else "residual_plus"] >= 1e-2


class TestIsingFields:
    def test_no_drive_is_constant(self):
        p = make_ising_field([ConstantField(0.0)] * 2, [[0.3, 0.5], [-0.2, 1.0]])
        assert np.allclose(p(3.3)[:, 1:], [[0.3, 0.5], [-0.2, 1.0]])
        assert np.allclose(p(3.3)[:, 0], 0)

    def test_constant_drive(self):
        b, h, t = 0.6, 1.2, 2.3
        p = make_ising_field([ConstantField(b)], [[b, 0.0, h]])
        phi = PHASE_SIGN * b * t
        assert np.allclose(p(t)[0], [b, h * np.sin(phi), h * np.cos(phi)])

    def test_mapping_residual(self, rng):
        m = build_ising(CouplingGraph(3, ((0, 1, 0.8), (0, 2, -0.5), (1, 2, 1.1))))
        bx = [SinusoidalField(rng.normal(), [rng.normal()], [rng.uniform(0.5, 2)]) for _ in range(3)]
        gm = build_gauge_map(m, make_ising_field(bx, rng.normal(size=(3, 2))))
        for t in (0.3, 1.7, 4.2):
            assert gauge_map_residual(gm, t, analytic_potential=True) <= 1e-9

    def test_envelope_reduces(self, rng):
        b0 = rng.normal(size=(2, 2))
        bx = [SinusoidalField(0.3, [0.5], [1.0]) for _ in range(2)]
        env = [ConstantField(float(np.linalg.norm(r))) for r in b0]
        a = make_integrable_ising_field(bx, env, b0)
        b = make_ising_field(bx, b0)
        assert np.allclose(a(2.7), b(2.7), atol=1e-14)

    def test_envelope_without_rotation(self):
        p = make_integrable_ising_field([ConstantField(0.0)], [SinusoidalField(1.0, [0.5], [2.0])],
                                        [[0.0, 2.5]])
        t = 0.8
        assert np.allclose(p(t)[0], [0, 0, 1.0 + 0.5 * np.sin(2 * t)])

    def test_envelope_undefined_direction(self):
        with pytest.raises(ContractError):
            make_integrable_ising_field([ConstantField(0.1)], [ConstantField(1.0)], [[0.0, 0.0]])

    def test_envelope_residual(self, rng):
        m = build_ising(CouplingGraph.chain(4, rng.normal(size=3)))
        bx = [SinusoidalField(rng.normal(), [rng.normal()], [1.1]) for _ in range(4)]
        env = [SinusoidalField(1.0, [0.3], [0.7]) for _ in range(4)]
        gm = build_gauge_map(m, make_integrable_ising_field(bx, env, rng.normal(size=(4, 2))))
        assert not gm.static
        for t in (0.5, 2.5):
            assert gauge_map_residual(gm, t, analytic_potential=True) <= 1e-9

    def test_generic_protocol_rejected(self):
        m = build_ising(CouplingGraph.chain(2))
        bad = PerSiteField([RotatingField(1.0, 1.0, bz=0.5)] * 2)
        with pytest.raises(PreconditionError):
            build_gauge_map(m, bad, horizon=3.0)


class TestPotentialAndResiduals:
    def test_constant_field_potential(self):
        m = build_heisenberg(CouplingGraph.chain(2))
        gm = build_gauge_map(m, ConstantField([0, 0, 0.8]), horizon=5.0)
        w = gauge_potential(gm, 2.0, 1e-4)
        assert np.linalg.norm(w.numeric - 0.8 * m.total_spin[2]) <= 1e-8

    def test_heisenberg_potential(self, rng):
        m = build_heisenberg(CouplingGraph.chain(3))
        gm = build_gauge_map(m, random_smooth_field(rng), horizon=10.0, tol=1e-12)
        for t in (1.0, 5.0, 9.0):
            assert gauge_potential(gm, t, 1e-3).difference <= 1e-6

    def test_ising_potential(self, rng):
        m = build_ising(CouplingGraph.chain(3))
        bx = [SinusoidalField(rng.normal(), [1.0], [0.9]) for _ in range(3)]
        gm = build_gauge_map(m, make_ising_field(bx, rng.normal(size=(3, 2))))
        w = gauge_potential(gm, 1.3, 1e-3)
        ref = PHASE_SIGN * sum(float(bx[i](1.3)) * m.site_spin(i)[0] for i in range(3))
        assert np.linalg.norm(w.numeric - ref) <= 1e-7

    def test_resolution_guard(self):
        m = build_heisenberg(CouplingGraph.chain(2))
        gm = build_gauge_map(m, ConstantField([0, 0, 1]), horizon=1.0)
        with pytest.raises(ResolutionError):
            gauge_potential(gm, 0.5, 1e-3)

    def test_flow_residuals(self):
        m = build_heisenberg(CouplingGraph.chain(3))
        gm = build_gauge_map(m, ConstantField([0.2, 0, 0.9]), horizon=10.0)
        assert flow_equation_residual(gm, 4.0, 1e-3).absolute <= 1e-8
        prot = RotatingField(0.9, 1.2, bz=0.3)
        gm = build_gauge_map(m, prot, horizon=10.0, tol=1e-12)
        for t in (2.0, 5.0, 8.0):
            assert flow_equation_residual(gm, t, 1e-3).relative <= 1e-5
        bad = build_gauge_map(m, ScaledField(prot, -1), horizon=10.0, tol=1e-12)
        bad.hamiltonian = m.hamiltonian(prot)
        assert flow_equation_residual(bad, 5.0, 1e-3).relative >= 1e-1

    def test_unitarity_and_invariance_along_trajectory(self, rng):
        m = build_heisenberg(CouplingGraph.chain(3, rng.normal(size=2)), s=1)
        gm = build_gauge_map(m, random_smooth_field(rng), horizon=10.0)
        for t in np.linspace(0, 10, 7):
            u = gm.unitary(t)
            assert np.linalg.norm(u.conj().T @ u - np.eye(27)) <= 1e-9
            assert np.linalg.norm(u @ m.static @ u.conj().T - m.static) <= 1e-10
            assert gauge_map_residual(gm, t, analytic_potential=True) <= 1e-6
