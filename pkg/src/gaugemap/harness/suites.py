"""Predefined verification scenarios, grouped into suites.

Every scenario is a module-level function ``fn(fault) -> ScenarioResult``
so it can run in a worker process. ``fault=True`` is the negative-control
mode: it flips one sign in the construction under test (the field that
drives the rotation flow, the Ising phase sign, or the parity sector of the
free-fermion spectrum) and the scenario is then expected to fail.
"""

import os
import time
from concurrent.futures import ProcessPoolExecutor
from functools import reduce

import numpy as np

from ..dynamics import (aligned_distance, dynamical_invariant_track, evolve_with_map, expectation_values, floquet_stroboscopic,
                        invariant_relation_residual, normalize, propagate_td,
                        single_site_purity, special_state_evolve)
from ..errors import ConfigError, GaugeMapError
from ..fields import ScaledField, SinusoidalField, random_smooth_field
from ..freefermion import (QuadraticCoefficients, even_sector_spectrum, frame_rotation,
                           ground_covariance, jw_coefficients, jw_from_gauge_map,
                           physical_observables, propagate_covariance)
from ..gauge import (build_gauge_map, flow_equation_residual, gauge_map_residual,
                     integrate_covariant, integrate_gauss, make_integrable_ising_field,
                     make_ising_field, phase_sign_report)
from ..linalg import eigh, su2_log
from ..models import (CouplingGraph, build_fermion, build_heisenberg, build_ising,
                      build_spin_boson)
from .report import Check, ScenarioResult, VerificationReport

__all__ = ["SUITES", "SCENARIOS", "run_scenario", "verify_suite", "default_workers"]

FIDELITY = 1e-6
RESIDUAL = 1e-5
NEGATIVE = 1e-1
WORKERS_ENV = "GAUGEMAP_WORKERS"


# ---------------------------------------------------------------------------
# shared pieces


def _rng(tag):
    return np.random.default_rng(abs(hash_tag(tag)))


def hash_tag(tag):
    """Stable integer seed from a scenario tag (``hash`` is salted per process)."""
    h = 1469598103934665603
    for ch in tag.encode():
        h = ((h ^ ch) * 1099511628211) % (1 << 63)
    return h


def _random_state(rng, dim):
    return normalize(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def _route_checks(gmap, direct, via, prefix=""):
    dists, phases = zip(*(aligned_distance(a, b) for a, b in zip(via, direct)))
    drift = np.angle(np.exp(1j * (np.array(phases) - phases[0])))
    norm = max(abs(np.linalg.norm(s) - 1) for s in list(direct) + list(via))
    return [Check(f"{prefix}fidelity", max(dists), FIDELITY),
            Check(f"{prefix}phase_drift_rad", float(np.max(np.abs(drift))), 1e-6),
            Check(f"{prefix}norm_drift", norm, 1e-9)]


def _residual_checks(gmap, times, prefix=""):
    dt = 1e-4 * (gmap.horizon[1] - gmap.horizon[0])
    out = [Check(f"{prefix}gauge_map_residual", max(gauge_map_residual(gmap, t, dt) for t in times),
                 RESIDUAL)]
    if gmap.static:
        out.append(Check(f"{prefix}flow_residual",
                         max(flow_equation_residual(gmap, t, dt).relative for t in times), RESIDUAL))
    return out


def _rotation_map(model, prot, horizon, fault, tol=1e-11, method="covariant"):
    mapped = ScaledField(prot, -1.0) if fault else prot
    return build_gauge_map(model, mapped, horizon=horizon, tol=tol, method=method)


def _ising_map(model, prot, fault):
    return build_gauge_map(model, prot, phase_sign=-prot.phase_sign if fault else None)


def _direct(model, prot, psi0, grid, tol=1e-9):
    stats = {}
    states = propagate_td(model.hamiltonian(prot), psi0, grid, tol=tol, stats=stats)
    return states, stats


def _timed(name, fn):
    start = time.perf_counter()
    res = ScenarioResult(name)
    try:
        checks, stats = fn()
        res.checks, res.stats = checks, stats
    except GaugeMapError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    res.seconds = time.perf_counter() - start
    return res


# ---------------------------------------------------------------------------
# Heisenberg family


def heisenberg_case(seed, fault=False, L=4, spin=0.5, horizon=10.0):
    """Random smooth homogeneous drive on a Heisenberg chain; both routes compared."""
    def body():
        rng = _rng(f"heisenberg-{L}-{spin}-{seed}")
        model = build_heisenberg(CouplingGraph.chain(L, rng.uniform(0.5, 1.5, L - 1)), spin)
        prot = random_smooth_field(rng, horizon=(0.0, horizon))
        psi0 = _random_state(rng, model.dimension)
        grid = np.linspace(0.0, horizon, 41)
        gmap = _rotation_map(model, prot, horizon, fault)
        direct, stats = _direct(model, prot, psi0, grid)
        via = evolve_with_map(gmap, psi0, grid)
        checks = _route_checks(gmap, direct, via)
        if not fault:
            checks += _residual_checks(gmap, [0.3 * horizon, 0.6 * horizon, 0.9 * horizon])
        return checks, {"propagator_steps": stats["steps"], "gauge_flow": gmap.trajectory.stats}
    return body


def _su2_distance(u, v):
    return su2_log(u.conj().T @ v).angle


def parametrization_case(kind, count, fault=False, horizon=10.0):
    """Covariant vs Gauss flow: axis-angle distance on a dense grid.

    ``kind`` selects the protocol family: ``random`` smooth fields,
    ``zero`` fields along a fixed axis that reverse so ``K`` returns through
    0, ``twopi`` fields strong enough that ``K`` sweeps through 2π.
    """
    def body():
        rng = _rng(f"param-{kind}")
        grid = np.linspace(0.0, horizon, 401)
        worst, witness = 0.0, []
        for _ in range(count):
            if kind == "random":
                prot = random_smooth_field(rng, horizon=(0.0, horizon))
            elif kind == "zero":
                n = rng.normal(size=3)
                n /= np.linalg.norm(n)
                w = rng.uniform(0.6, 1.5)
                prot = SinusoidalField(np.zeros(3), [rng.uniform(0.5, 2.0) * n], [w], [np.pi / 2],
                                       horizon=(0.0, horizon))
            else:
                n = rng.normal(size=3)
                n /= np.linalg.norm(n)
                # mostly along n so that U passes close to -1; the small
                # perpendicular part keeps the axis moving
                wobble = 0.1 * rng.normal() * n + 0.003 * rng.normal(size=3)
                prot = SinusoidalField(rng.uniform(0.7, 1.2) * n, [wobble], [rng.uniform(0.5, 2)],
                                       horizon=(0.0, horizon))
            cov = integrate_covariant(prot, grid, tol=1e-12)
            gmapped = ScaledField(prot, -1.0) if fault else prot
            gau = integrate_gauss(gmapped, grid, tol=1e-12)
            worst = max(worst, max(_su2_distance(cov.su2_at(t), gau.su2_at(t)) for t in grid))
            k = np.array([s.angle for s in cov.states])
            if kind == "zero":
                witness.append(np.min(k[grid > 1.0]))
            elif kind == "twopi":
                witness.append(np.min(np.abs(k - 2 * np.pi)))
        checks = [Check(f"axis_angle_distance[{kind} x{count}]", worst, 1e-7)]
        if witness:
            checks.append(Check(f"closest_approach[{kind}]", float(np.max(witness)), 0.05))
        return checks, {}
    return body


def special_state_case(fault=False, L=4, horizon=10.0):
    """Ferromagnetic product state under a Heisenberg drive stays a product state."""
    def body():
        rng = _rng("special")
        model = build_heisenberg(CouplingGraph.chain(L, rng.uniform(0.5, 1.5, L - 1)))
        prot = random_smooth_field(rng, horizon=(0.0, horizon))
        gmap = _rotation_map(model, prot, horizon, fault)
        psi0 = np.zeros(model.dimension, dtype=complex)
        psi0[0] = 1.0
        energy = float(np.vdot(psi0, gmap.h_tilde() @ psi0).real)
        grid = np.linspace(0.0, horizon, 41)
        closed = special_state_evolve(psi0, energy, gmap, grid)
        direct, _ = _direct(model, prot, psi0, grid, tol=1e-11)
        dims = [2] * L
        purity = max(abs(1 - single_site_purity(s, i, dims)) for s in direct for i in range(L))
        # one spin driven by -B·S
        sx, sy, sz = (np.array(m) for m in ([[0, .5], [.5, 0]], [[0, -.5j], [.5j, 0]], [[.5, 0], [0, -.5]]))
        one = propagate_td(lambda t: -(prot(t)[0] * sx + prot(t)[1] * sy + prot(t)[2] * sz),
                           np.array([1.0, 0.0], dtype=complex), grid, tol=1e-11)
        bloch_err = 0.0
        for s, phi in zip(direct, one):
            ref = np.array([np.vdot(phi, m @ phi).real for m in (sx, sy, sz)])
            for i in range(L):
                got = np.array([np.vdot(s, model.site_spin_stack[i, a] @ s).real for a in range(3)])
                bloch_err = max(bloch_err, np.max(np.abs(got - ref)))
        closed_err = max(aligned_distance(a, b)[0] for a, b in zip(closed, direct))
        return [Check("purity_defect", purity, 1e-8),
                Check("bloch_vs_one_spin", bloch_err, 1e-7),
                Check("closed_form_fidelity", closed_err, FIDELITY)], {}
    return body


def flow_negative_control(fault=False, horizon=10.0):
    """A gauge map built for the sign-flipped field must violate the flow equation."""
    def body():
        rng = _rng("negative")
        model = build_heisenberg(CouplingGraph.chain(3, 1.0))
        prot = random_smooth_field(rng, horizon=(0.0, horizon))
        bad = build_gauge_map(model, ScaledField(prot, -1.0), horizon=horizon, tol=1e-11)
        bad.hamiltonian = model.hamiltonian(prot)
        dt = 1e-4 * horizon
        ts = [2.5, 5.0, 7.5]
        heis = min(flow_equation_residual(bad, t, dt).relative for t in ts)
        imodel = build_ising(CouplingGraph.chain(3, 0.8))
        iprot = _ising_protocol(rng, 3, horizon)
        ibad = build_gauge_map(imodel, iprot, phase_sign=-iprot.phase_sign)
        ising = min(flow_equation_residual(ibad, t, dt).relative for t in ts)
        return [Check("heisenberg_flipped_flow_residual", heis, NEGATIVE, "min"),
                Check("ising_flipped_flow_residual", ising, NEGATIVE, "min")], {}
    return body


# ---------------------------------------------------------------------------
# fermions


def fermion_case(L, fault=False, horizon=10.0, tol=1e-9):
    """Spinful fermions with density interactions under a homogeneous drive."""
    def body():
        rng = _rng(f"fermion-{L}")
        eps = rng.normal(size=(L, L))
        v = rng.uniform(0.0, 1.0, size=(L, L))
        model = build_fermion(eps + eps.T, v + v.T)
        prot = random_smooth_field(rng, horizon=(0.0, horizon))
        number = model.extra["number"]
        w, vec = eigh(number)
        sector = vec[:, np.abs(w - L) < 0.5]
        psi0 = normalize(sector @ (rng.normal(size=sector.shape[1]) + 1j * rng.normal(size=sector.shape[1])))
        grid = np.linspace(0.0, horizon, 41)
        gmap = _rotation_map(model, prot, horizon, fault)
        direct, stats = _direct(model, prot, psi0, grid, tol=tol)
        via = evolve_with_map(gmap, psi0, grid)
        checks = _route_checks(gmap, direct, via)
        for label, states in (("direct", direct), ("gauge", via)):
            leak = max(np.linalg.norm(number @ s - L * s) for s in states)
            checks.append(Check(f"number_conservation[{label}]", leak, 1e-9))
        if not fault:
            checks += _residual_checks(gmap, [0.3 * horizon, 0.6 * horizon])
        return checks, {"dimension": model.dimension, "propagator_steps": stats["steps"]}
    return body


# ---------------------------------------------------------------------------
# Ising family


def _ising_protocol(rng, L, horizon, envelope=False):
    bx = [SinusoidalField(rng.normal(), [rng.normal()], [rng.uniform(0.4, 2.0)], [rng.uniform(0, 6.3)],
                          horizon=(0.0, horizon)) for _ in range(L)]
    b0 = rng.normal(size=(L, 2))
    if envelope:
        env = [SinusoidalField(rng.uniform(0.5, 1.5), [0.5 * rng.normal()], [rng.uniform(0.4, 2.0)],
                               horizon=(0.0, horizon)) for _ in range(L)]
        return make_integrable_ising_field(bx, env, b0)
    return make_ising_field(bx, b0)


def _h_tilde_reconstructed(gmap, t):
    """``U† (H_t + W_t) U`` from the analytic potential; equals ``H̃`` when the map holds."""
    u = gmap.unitary(t)
    return u.conj().T @ (gmap.hamiltonian(t) + gmap.potential_analytic(t)) @ u


def ising_case(graph_kind, fault=False, L=6, horizon=10.0):
    """Inhomogeneous Ising-compatible drive; static ``H̃`` verified from the pieces."""
    def body():
        rng = _rng(f"ising-{graph_kind}-{L}")
        if graph_kind == "chain":
            graph = CouplingGraph.chain(L, rng.uniform(0.5, 1.5, L - 1))
        else:
            edges = tuple((i, j, rng.normal()) for i in range(L) for j in range(i + 1, L))
            graph = CouplingGraph(L, edges)
        model = build_ising(graph)
        prot = _ising_protocol(rng, L, horizon)
        gmap = _ising_map(model, prot, fault)
        psi0 = _random_state(rng, model.dimension)
        grid = np.linspace(0.0, horizon, 41)
        direct, stats = _direct(model, prot, psi0, grid)
        via = evolve_with_map(gmap, psi0, grid)
        h0 = gmap.h_tilde(0.0)
        drift = max(np.linalg.norm(_h_tilde_reconstructed(gmap, t) - h0) for t in grid[1:])
        checks = _route_checks(gmap, direct, via) + [Check("h_tilde_time_dependence", drift, 1e-10)]
        if not fault:
            checks += _residual_checks(gmap, [0.3 * horizon, 0.6 * horizon])
        return checks, {"propagator_steps": stats["steps"]}
    return body


def spin_boson_case(fault=False, horizon=10.0, n_max=12, n_low=10):
    """Spin-boson model: fidelity, truncation convergence and the polaron energy."""
    def body():
        rng = _rng("spin-boson")
        f, omega = 0.4, 1.1
        model = build_spin_boson([f], [omega], n_max)
        prot = _ising_protocol(rng, 1, horizon)
        gmap = _ising_map(model, prot, fault)
        psi0 = np.zeros(model.dimension, dtype=complex)
        psi0[0] = 1.0
        grid = np.linspace(0.0, horizon, 41)
        direct, stats = _direct(model, prot, psi0, grid)
        via = evolve_with_map(gmap, psi0, grid)
        checks = _route_checks(gmap, direct, via)
        series = []
        for nm in (n_low, n_max):
            m = build_spin_boson([f], [omega], nm)
            gm = _ising_map(m, prot, fault)
            p0 = np.zeros(m.dimension, dtype=complex)
            p0[0] = 1.0
            states = evolve_with_map(gm, p0, grid)
            ops = {f"s{a}": m.site_spin_stack[0, i] for i, a in enumerate("xyz")}
            ops["n"] = m.extra["boson_number"]
            obs = expectation_values(states, ops, grid)
            series.append(np.array([obs[k] for k in ops]))
        checks.append(Check(f"truncation_{n_low}_to_{n_max}", float(np.max(np.abs(series[0] - series[1]))),
                            1e-7))
        e0 = np.linalg.eigvalsh(model.static)[0]
        checks.append(Check("polaron_ground_energy", abs(e0 + f**2 / (4 * omega)), 1e-8))
        if not fault:
            checks += _residual_checks(gmap, [0.3 * horizon, 0.6 * horizon])
        return checks, {"propagator_steps": stats["steps"]}
    return body


def floquet_case(fault=False, L=4, period=2.0, n_periods=5):
    """Drive with ``∫_0^T Bx = 4π`` per spin: stroboscopic closed form and no heating."""
    def body():
        rng = _rng("floquet")
        model = build_ising(CouplingGraph.chain(L, rng.uniform(0.5, 1.5, L - 1)))
        horizon = n_periods * period
        w = 2 * np.pi / period
        bx = [SinusoidalField(4 * np.pi / period, [rng.normal()], [w], [rng.uniform(0, 6.3)],
                              horizon=(0.0, horizon)) for _ in range(L)]
        prot = make_ising_field(bx, rng.normal(size=(L, 2)))
        gmap = _ising_map(model, prot, fault)
        psi0 = _random_state(rng, model.dimension)
        grid = period * np.arange(n_periods + 1)
        direct, stats = _direct(model, prot, psi0, grid, tol=1e-11)
        worst, defect = 0.0, 0.0
        for n in range(1, n_periods + 1):
            res = floquet_stroboscopic(gmap, period, psi0, n)
            defect = max(defect, res.defect)
            worst = max(worst, aligned_distance(res.state, direct[n])[0])
        h_tilde = gmap.h_tilde()
        energies = [np.vdot(s, h_tilde @ s).real for s in direct]
        residual = max(gauge_map_residual(gmap, t, analytic_potential=True) for t in (0.3, 1.1, 1.7))
        return [Check("periodicity_defect", defect, 1e-7),
                Check("gauge_map_residual", residual, RESIDUAL),
                Check("stroboscopic_fidelity", worst, 1e-5),
                Check("stroboscopic_energy_spread", float(np.ptp(energies)), 1e-8)], \
            {"propagator_steps": stats["steps"]}
    return body


def invariants_case(fault=False, L=4, horizon=10.0):
    """``⟨U Ĩ U†⟩`` is conserved along direct solutions.

    Heisenberg: ``Ĩ ∈ {H_H, S_tot², Sz_tot}`` (the last one is rotated by
    ``U_t``, so ``I(t)`` genuinely moves). Ising chain: ``Ĩ = H̃``.
    """
    def body():
        rng = _rng("invariants")
        model = build_heisenberg(CouplingGraph.chain(L, rng.uniform(0.5, 1.5, L - 1)))
        prot = random_smooth_field(rng, horizon=(0.0, horizon))
        gmap = _rotation_map(model, prot, horizon, fault)
        psi0 = _random_state(rng, model.dimension)
        grid = np.linspace(0.0, horizon, 41)
        direct, _ = _direct(model, prot, psi0, grid, tol=1e-11)
        tot = model.total_spin
        cases = [(gmap, direct, "H_H", model.static),
                 (gmap, direct, "S_tot^2", sum(tot[a] @ tot[a] for a in range(3))),
                 (gmap, direct, "Sz_tot", tot[2])]
        imodel = build_ising(CouplingGraph.chain(L, rng.uniform(0.5, 1.5, L - 1)))
        iprot = _ising_protocol(rng, L, horizon)
        imap = _ising_map(imodel, iprot, fault)
        idirect, _ = _direct(imodel, iprot, psi0, grid, tol=1e-11)
        cases.append((imap, idirect, "ising_H~", imap.h_tilde()))
        checks = []
        for gm, states, name, op in cases:
            track = dynamical_invariant_track(op, gm, states, grid, name)
            checks.append(Check(f"invariant_spread[{name}]", float(np.ptp(track[name])), 1e-7))
            rel = max(invariant_relation_residual(op, gm, t, 1e-4 * horizon)[0] for t in (2.5, 7.5))
            checks.append(Check(f"invariant_relation[{name}]", rel, 1e-5))
        return checks, {}
    return body


# ---------------------------------------------------------------------------
# integrable chain and free fermions


def _chain_observables(model):
    sp = model.site_spin_stack
    L = model.n_sites
    ops = {f"sz_{i}": sp[i, 2] for i in range(L)}
    ops.update({f"sxsx_{i}": sp[i, 0] @ sp[i + 1, 0] for i in range(L - 1)})
    return ops


def ising_chain_case(fault=False, L=8, horizon=10.0):
    """Three routes on the enveloped chain: direct, gauge + ``H̃_t``, gauge + covariance."""
    def body():
        rng = _rng(f"ising-chain-{L}")
        model = build_ising(CouplingGraph.chain(L, rng.uniform(0.5, 1.5, L - 1)))
        prot = _ising_protocol(rng, L, horizon, envelope=True)
        gmap = _ising_map(model, prot, fault)
        coeffs = jw_from_gauge_map(gmap)
        ground = ground_covariance(coeffs, 0.0)
        w, v = eigh(gmap.h_tilde(0.0))
        psi0 = v[:, 0]
        grid = np.linspace(0.0, horizon, 21)
        direct, stats = _direct(model, prot, psi0, grid, tol=1e-8)
        via = evolve_with_map(gmap, psi0, grid, tol=1e-8)
        gammas = propagate_covariance(coeffs, ground.gamma, grid, tol=1e-10)
        ops = _chain_observables(model)
        a = expectation_values(direct, ops, grid)
        b = expectation_values(via, ops, grid)
        ab = max(np.max(np.abs(a[k] - b[k])) for k in ops)
        ac = 0.0
        for k, t in enumerate(grid):
            phases = prot.phase_sign * prot.bx_integrals(t)
            if fault:
                phases = -phases
            obs = physical_observables(gammas[k], coeffs.angles, phases)
            ref_z = np.array([a[f"sz_{i}"][k] for i in range(L)])
            ref_xx = np.array([a[f"sxsx_{i}"][k] for i in range(L - 1)])
            ac = max(ac, np.max(np.abs(obs["sz"] - ref_z)), np.max(np.abs(obs["sxsx"] - ref_xx)))
        bc = max(ac, ab)
        checks = [Check("direct_vs_gauge_ed", ab, FIDELITY),
                  Check("direct_vs_covariance", ac, FIDELITY),
                  Check("three_way_max", bc, FIDELITY),
                  Check("ground_energy_vs_ed", abs(ground.energy - w[0]), 1e-8)]
        if not fault:
            checks += _residual_checks(gmap, [0.3 * horizon, 0.6 * horizon])
        return checks, {"propagator_steps": stats["steps"]}
    return body


def freefermion_static_case(kind, fault=False, L=8):
    """Even-sector spectrum of the transverse chain from fermions vs ED."""
    def body():
        rng = _rng(f"ff-static-{kind}")
        if kind == "uniform":
            js, h = np.full(L - 1, 1.0), np.column_stack([np.zeros(L), np.full(L, 0.5)])
        else:
            js, h = rng.normal(size=L - 1), rng.normal(size=(L, 2))
        model = build_ising(CouplingGraph.chain(L, js))
        coeffs = jw_coefficients(js, h)
        ham = model.static + model.field_term(np.column_stack([np.zeros(L), h]))
        rot = frame_rotation(model, coeffs.angles)
        hp = rot.conj().T @ ham @ rot
        parity = reduce(lambda x, y: x @ y, [2 * model.site_spin_stack[i, 2] for i in range(L)])
        w, v = eigh(hp)
        par = np.einsum("ij,ik,kj->j", v.conj(), parity, v).real
        sector = -1 if fault else 1
        ed = np.sort(w[par * sector > 0])
        ff = even_sector_spectrum(coeffs)
        ground = ground_covariance(coeffs)
        gammas = propagate_covariance(coeffs, ground.gamma, np.linspace(0.0, 5.0, 6), tol=1e-11)
        stationarity = max(np.max(np.abs(g - ground.gamma)) for g in gammas)
        return [Check("even_spectrum_vs_ed", float(np.max(np.abs(ed - ff))) if len(ed) == len(ff) else np.inf,
                      1e-8),
                Check("ground_energy_vs_ed", abs(ground.energy - w[0]), 1e-8),
                Check("ground_stationarity", stationarity, 1e-9)], {}
    return body


def freefermion_scaling_case(fault=False, L=64, horizon=10.0, budget=60.0):
    """Covariance propagation of a driven L=64 chain over 10/J within the time budget."""
    def body():
        rng = _rng("ff-scaling")
        js = rng.uniform(0.5, 1.5, L - 1)
        env = [SinusoidalField(rng.uniform(0.5, 1.5), [0.5 * rng.normal()], [rng.uniform(0.4, 2.0)],
                               horizon=(0.0, horizon)) for _ in range(L)]
        dirs = rng.normal(size=(L, 2))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        mags = lambda t: np.array([float(e(t)) for e in env])
        coeffs = QuadraticCoefficients(js, np.arctan2(dirs[:, 0], dirs[:, 1]), mags)
        start = time.perf_counter()
        ground = ground_covariance(coeffs)
        stats = {}
        gammas = propagate_covariance(coeffs, ground.gamma, np.linspace(0.0, horizon, 11),
                                      tol=1e-8, stats=stats)
        elapsed = time.perf_counter() - start
        spec0 = np.sort(np.linalg.eigvalsh(1j * gammas[0]))
        spec1 = np.sort(np.linalg.eigvalsh(1j * gammas[-1]))
        anti = max(np.max(np.abs(g + g.T)) for g in gammas)
        return [Check("wall_seconds", elapsed, budget),
                Check("purity_spectrum_drift", float(np.max(np.abs(spec0 - spec1))), 1e-8),
                Check("antisymmetry", anti, 1e-10)], {"steps": stats.get("steps")}
    return body


# ---------------------------------------------------------------------------
# registry


def _build_registry():
    reg = {}
    for seed in range(10):
        reg[f"heisenberg/L4-s0.5-seed{seed}"] = ("heisenberg", heisenberg_case, (seed,), {})
    reg["heisenberg/L3-s1"] = ("heisenberg", heisenberg_case, (0,), {"L": 3, "spin": 1.0})
    reg["heisenberg/parametrization-random"] = ("heisenberg", parametrization_case, ("random", 20), {})
    reg["heisenberg/parametrization-through-zero"] = ("heisenberg", parametrization_case, ("zero", 15), {})
    reg["heisenberg/parametrization-through-2pi"] = ("heisenberg", parametrization_case, ("twopi", 15), {})
    reg["heisenberg/special-state"] = ("heisenberg", special_state_case, (), {})
    reg["heisenberg/negative-control"] = ("heisenberg", flow_negative_control, (), {})
    reg["fermion/L2"] = ("fermion", fermion_case, (2,), {})
    reg["fermion/L4-dim256"] = ("fermion", fermion_case, (4,), {"tol": 1e-8})
    reg["ising/chain-L6"] = ("ising", ising_case, ("chain",), {})
    reg["ising/all-to-all-L5"] = ("ising", ising_case, ("all",), {"L": 5})
    reg["ising-chain/L8-three-way"] = ("ising-chain", ising_chain_case, (), {})
    reg["spin-boson/one-mode"] = ("spin-boson", spin_boson_case, (), {})
    reg["floquet/L4"] = ("floquet", floquet_case, (), {})
    reg["invariants/heisenberg-L4"] = ("invariants", invariants_case, (), {})
    reg["freefermion/static-uniform-L8"] = ("freefermion", freefermion_static_case, ("uniform",), {})
    reg["freefermion/static-random-L8"] = ("freefermion", freefermion_static_case, ("random",), {})
    reg["freefermion/scaling-L64"] = ("freefermion", freefermion_scaling_case, (), {})
    return reg


SCENARIOS = _build_registry()
SUITES = ("heisenberg", "fermion", "ising", "ising-chain", "spin-boson", "floquet", "invariants",
          "freefermion", "all")


def run_scenario(name, fault=False):
    _, factory, args, kwargs = SCENARIOS[name]
    return _timed(name, factory(*args, fault=fault, **kwargs))


def scenario_names(suite):
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    return sorted(n for n, (s, *_rest) in SCENARIOS.items() if suite == "all" or s == suite)


def default_workers():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be positive")
    return n


def verify_suite(suite, workers=None, fault=False) -> VerificationReport:
    """Run every scenario of ``suite``; results are sorted by scenario id."""
    names = scenario_names(suite)
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ConfigError("workers must be positive")
    if workers == 1 or len(names) == 1:
        results = [run_scenario(n, fault) for n in names]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_scenario, names, [fault] * len(names)))
    conventions = {"phase": phase_sign_report(),
                   "rotation": "U_t restricted to one spin 1/2 propagates -B_t.S",
                   "ising_transverse_components": "(By, Bz) rotated about x by phi_i"}
    return VerificationReport(suite, sorted(results, key=lambda r: r.scenario), conventions, fault)
