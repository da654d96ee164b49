import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaugemap.dynamics import expectation_values, propagate_td
from gaugemap.errors import ContractError, UnsupportedModelError
from gaugemap.fields import ConstantField, SinusoidalField
from gaugemap.freefermion import (QuadraticCoefficients, check_covariance, covariance_energy,
                                  covariance_observables, even_sector_spectrum, frame_rotation,
                                  ground_covariance, jw_coefficients, jw_from_gauge_map,
                                  physical_observables, product_covariance, propagate_covariance)
from gaugemap.gauge import build_gauge_map, make_integrable_ising_field, make_ising_field
from gaugemap.models import CouplingGraph, build_ising

from oracles import TFIM_CRITICAL_L8


def tfim_ed(couplings, fields):
    """Dense ``Σ J Sx Sx - Σ h Sz`` and its parity ``Π σz`` diagonal."""
    n = len(fields)
    m = build_ising(CouplingGraph.chain(n, couplings))
    b = np.column_stack([np.zeros(n), np.zeros(n), fields])
    h = m.static + m.field_term(b)
    parity = np.prod([np.diag(2 * m.site_spin(i)[2]).real for i in range(n)], axis=0)
    return m, h, parity


def even_ed(h, parity):
    idx = np.where(parity > 0)[0]
    return np.linalg.eigvalsh(h[np.ix_(idx, idx)])


class TestCoefficients:
    def test_free_spins(self):
        c = jw_coefficients(np.zeros(3), np.column_stack([np.zeros(4), np.full(4, 0.7)]))
        a = c.generator(0.0)
        assert np.allclose(a, -a.T)
        for i in range(4):
            assert a[2 * i, 2 * i + 1] == 0.7
        assert np.count_nonzero(a) == 8
        g = ground_covariance(c)
        assert np.allclose(g.gamma, product_covariance([True] * 4))
        assert abs(g.energy + 4 * 0.35) <= 1e-14

    def test_rejects_longitudinal(self):
        with pytest.raises(UnsupportedModelError):
            jw_coefficients([1.0], np.array([[0.1, 0, 1], [0, 0, 1]]))

    def test_rejects_rotating_direction(self):
        trans = lambda t: np.array([[np.sin(t), np.cos(t)], [0, 1.0]])
        with pytest.raises(ContractError):
            jw_coefficients([1.0], trans, check_times=[0.5])

    def test_coupling_count(self):
        with pytest.raises(ContractError):
            jw_coefficients([1.0, 1.0], np.ones((2, 2)))

    def test_not_a_chain(self):
        m = build_ising(CouplingGraph(3, ((0, 2, 1.0),)))
        with pytest.raises(UnsupportedModelError):
            build_gauge_map(m, make_integrable_ising_field([ConstantField(0.0)] * 3,
                                                           [SinusoidalField(1.0, [0.2], [1.0])] * 3,
                                                           np.ones((3, 2))))
        gm = build_gauge_map(m, make_ising_field([ConstantField(0.0)] * 3, np.ones((3, 2))))
        with pytest.raises(UnsupportedModelError):
            jw_from_gauge_map(gm)


class TestGroundState:
    def test_critical_chain_against_frozen_value(self):
        c = jw_coefficients(np.ones(7), np.column_stack([np.zeros(8), np.full(8, 0.5)]))
        g = ground_covariance(c)
        assert abs(g.energy - TFIM_CRITICAL_L8) <= 1e-8
        _, h, parity = tfim_ed(np.ones(7), np.full(8, 0.5))
        assert abs(g.energy - even_ed(h, parity)[0]) <= 1e-8
        assert np.allclose(np.abs(np.linalg.eigvalsh(1j * g.gamma)), 0.5, atol=1e-9)

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_even_spectrum_random(self, seed):
        rng = np.random.default_rng(seed)
        js, hs = rng.normal(size=7), rng.normal(size=8)
        c = jw_coefficients(js, np.column_stack([np.zeros(8), hs]))
        # negative fields are rotated by π about x, so parity is taken in the rotated frame
        m, h_lab, _ = tfim_ed(js, hs)
        v = frame_rotation(m, c.angles)
        _, h, parity = tfim_ed(js, c.magnitudes(0.0))
        assert np.linalg.norm(v.conj().T @ h_lab @ v - h) <= 1e-12
        assert np.max(np.abs(even_sector_spectrum(c) - even_ed(h, parity))) <= 1e-8
        assert abs(ground_covariance(c).energy - even_ed(h, parity)[0]) <= 1e-8

    def test_tilted_directions(self, rng):
        # transverse fields along arbitrary y-z directions reduce to the same spectrum
        js, mags = rng.normal(size=5), rng.uniform(0.3, 1.5, size=6)
        beta = rng.uniform(-np.pi, np.pi, size=6)
        trans = np.column_stack([mags * np.sin(beta), mags * np.cos(beta)])
        c = jw_coefficients(js, trans)
        assert np.allclose(c.angles, beta)
        m = build_ising(CouplingGraph.chain(6, js))
        h = m.static + m.field_term(np.column_stack([np.zeros(6), trans]))
        v = frame_rotation(m, c.angles)
        hp = v.conj().T @ h @ v
        _, h_ref, parity = tfim_ed(js, mags)
        assert np.linalg.norm(hp - h_ref) <= 1e-12
        assert abs(ground_covariance(c).energy - even_ed(h_ref, parity)[0]) <= 1e-8

    def test_zero_mode_flag(self):
        c = jw_coefficients([0.0], np.array([[0.0, 0.0], [0.0, 1.0]]))
        g = ground_covariance(c)
        assert g.degenerate
        check_covariance(g.gamma)

    def test_enumeration_cap(self):
        c = jw_coefficients(np.ones(19), np.column_stack([np.zeros(20), np.ones(20)]))
        with pytest.raises(ContractError):
            even_sector_spectrum(c)


class TestObservables:
    def test_all_up(self):
        obs = covariance_observables(product_covariance([True] * 5))
        assert np.allclose(obs["sz"], 0.5) and np.allclose(obs["sxsx"], 0)

    def test_infinite_temperature(self):
        obs = covariance_observables(np.zeros((8, 8)))
        assert not np.any(obs["sz"]) and not np.any(obs["sxsx"])

    def test_ground_state_vs_ed(self, rng):
        js, hs = rng.normal(size=5), rng.uniform(0.2, 1.0, size=6)
        c = jw_coefficients(js, np.column_stack([np.zeros(6), hs]))
        g = ground_covariance(c)
        m, h, parity = tfim_ed(js, hs)
        idx = np.where(parity > 0)[0]
        w, v = np.linalg.eigh(h[np.ix_(idx, idx)])
        psi = np.zeros(h.shape[0], complex)
        psi[idx] = v[:, 0]
        obs = covariance_observables(g.gamma)
        for i in range(6):
            assert abs(np.vdot(psi, m.site_spin(i)[2] @ psi).real - obs["sz"][i]) <= 1e-8
        for i in range(5):
            op = m.site_spin(i)[0] @ m.site_spin(i + 1)[0]
            assert abs(np.vdot(psi, op @ psi).real - obs["sxsx"][i]) <= 1e-8

    def test_check_covariance(self):
        with pytest.raises(ContractError):
            check_covariance(np.ones((4, 4)))
        with pytest.raises(ContractError):
            check_covariance(2 * product_covariance([True, False]))
        with pytest.raises(ContractError):
            check_covariance(np.zeros((3, 3)))


class TestPropagation:
    def test_zero_generator(self):
        c = QuadraticCoefficients(np.zeros(2), np.zeros(3), lambda t: np.zeros(3))
        g0 = product_covariance([True, False, True])
        out = propagate_covariance(c, g0, np.linspace(0, 3, 4))
        assert all(np.allclose(g, g0, atol=1e-15) for g in out)

    def test_stationary_ground_state(self, rng):
        c = jw_coefficients(rng.normal(size=5), np.column_stack([np.zeros(6), rng.normal(size=6)]))
        g = ground_covariance(c)
        out = propagate_covariance(c, g.gamma, np.linspace(0, 10, 6))
        assert max(np.max(np.abs(x - g.gamma)) for x in out) <= 1e-9

    @settings(max_examples=6)
    @given(st.integers(0, 2**31))
    def test_antisymmetry_and_purity(self, seed):
        rng = np.random.default_rng(seed)
        n = 5
        js = rng.normal(size=n - 1)
        amp, off = rng.normal(size=n), rng.normal(size=n)
        c = QuadraticCoefficients(js, np.zeros(n), lambda t: off + amp * np.sin(1.3 * t))
        g0 = product_covariance(rng.integers(0, 2, size=n).astype(bool))
        g0 = 0.6 * g0  # mixed state: spectrum ±0.3
        spec0 = np.sort(np.linalg.eigvalsh(1j * g0))
        for g in propagate_covariance(c, g0, np.linspace(0, 5, 6)):
            assert np.max(np.abs(g + g.T)) <= 1e-10
            assert np.max(np.abs(np.sort(np.linalg.eigvalsh(1j * g)) - spec0)) <= 1e-8

    def test_driven_chain_vs_ed(self, rng):
        n = 5
        js = rng.normal(size=n - 1)
        bx = [SinusoidalField(rng.normal(), [rng.normal()], [1.2]) for _ in range(n)]
        env = [SinusoidalField(0.8, [0.4], [0.9]) for _ in range(n)]
        prot = make_integrable_ising_field(bx, env, rng.normal(size=(n, 2)))
        model = build_ising(CouplingGraph.chain(n, js))
        gm = build_gauge_map(model, prot, horizon=8.0)
        coeffs = jw_from_gauge_map(gm)
        up = np.zeros(2**n, complex)
        up[0] = 1
        v = frame_rotation(model, coeffs.angles)
        psi0 = v @ up  # all up in the rotated frame
        grid = np.linspace(0, 8, 9)
        direct = propagate_td(model.hamiltonian(prot), psi0, grid, tol=1e-10)
        ops = {f"sz_{i}": model.site_spin(i)[2] for i in range(n)}
        ops.update({f"sxsx_{i}": model.site_spin(i)[0] @ model.site_spin(i + 1)[0] for i in range(n - 1)})
        ed = expectation_values(direct, ops, grid)
        gammas = propagate_covariance(coeffs, product_covariance([True] * n), grid)
        worst = 0.0
        for k, (t, g) in enumerate(zip(grid, gammas)):
            phases = gm.conventions["phase_sign"] * prot.bx_integrals(t)
            obs = physical_observables(g, coeffs.angles, phases)
            worst = max(worst, max(abs(obs["sz"][i] - ed[f"sz_{i}"][k]) for i in range(n)),
                        max(abs(obs["sxsx"][i] - ed[f"sxsx_{i}"][k]) for i in range(n - 1)))
        assert worst <= 1e-6

    def test_energy_helper(self):
        c = jw_coefficients([1.0], np.array([[0.0, 1.0], [0.0, 1.0]]))
        assert abs(covariance_energy(c, product_covariance([True, True])) + 1.0) <= 1e-15
