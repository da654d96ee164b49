"""Propagators, observables and the gauge-mapped evolution.

``propagate_td`` is the brute-force reference for every verification: it
integrates ``i ∂_t Ψ = H_t Ψ`` with exponential integrators whose every step
is an exact unitary, and refines the step until doubling the number of
steps per grid interval changes the solution by at most ``tol``.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .errors import ContractError, IntegrationError, PeriodicityError, PreconditionError
from .gauge import GaugeMap, build_gauge_map
from .linalg import eigh, is_hermitian

__all__ = [
    "ObservableSeries",
    "FloquetResult",
    "normalize",
    "propagate_td",
    "propagate_ti",
    "evolve_via_gauge",
    "evolve_with_map",
    "aligned_distance",
    "expectation_values",
    "single_site_rdm",
    "single_site_purity",
    "special_state_evolve",
    "eigenspace_projection",
    "floquet_stroboscopic",
    "dynamical_invariant_track",
    "invariant_relation_residual",
]

SCHEMES = ("magnus4", "midpoint")
_SQRT3 = np.sqrt(3.0)
_MAX_STEPS_PER_INTERVAL = 2**18


def normalize(psi):
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ContractError("zero state vector")
    return psi / nrm


def _check_state(psi, dim=None):
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ContractError("state vector must be normalized to 1e-9")
    if dim is not None and psi.shape[0] != dim:
        raise ContractError(f"state dimension {psi.shape[0]} != {dim}")
    return psi


# ---------------------------------------------------------------------------
# exponential integrators


def step_generator(hamiltonian: Callable, t, h, scheme="magnus4"):
    """Hermitian ``G`` with ``exp(-i G)`` the one-step propagator over ``[t, t+h]``.

    ``midpoint`` is the second-order exponential midpoint rule; ``magnus4`` is
    the fourth-order Magnus expansion on the two Gauss–Legendre nodes.
    """
    if scheme == "midpoint":
        return h * hamiltonian(t + 0.5 * h)
    if scheme == "magnus4":
        c = _SQRT3 / 6
        h1 = hamiltonian(t + (0.5 - c) * h)
        h2 = hamiltonian(t + (0.5 + c) * h)
        comm = h1 @ h2 - h2 @ h1
        return 0.5 * h * (h1 + h2) + 1j * (_SQRT3 / 12) * h * h * comm
    raise ContractError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")


def _advance(hamiltonian, x, t0, t1, n, scheme):
    h = (t1 - t0) / n
    for k in range(n):
        g = step_generator(hamiltonian, t0 + k * h, h, scheme)
        w, v = np.linalg.eigh(0.5 * (g + g.conj().T))
        x = (v * np.exp(-1j * w)) @ (v.conj().T @ x)
    return x


def propagate_adaptive(hamiltonian: Callable, x0, grid, tol=1e-9, scheme="magnus4", stats=None):
    """Propagate a state (vector) or a set of columns (matrix) across ``grid``.

    On each grid interval the number of equal steps ``n`` is doubled until the
    ``n``- and ``2n``-step results differ by at most ``tol`` (2-norm, or the
    largest column norm for matrices); the finer result is kept.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ContractError("grid must be strictly increasing")
    if tol <= 0:
        raise ContractError("tol must be positive")
    x = np.array(x0, dtype=complex)
    out = [x.copy()]
    n = 1
    total = 0
    for a, b in zip(grid[:-1], grid[1:]):
        coarse = _advance(hamiltonian, x, a, b, n, scheme)
        total += n
        while True:
            fine = _advance(hamiltonian, x, a, b, 2 * n, scheme)
            total += 2 * n
            diff = fine - coarse
            err = np.linalg.norm(diff) if diff.ndim == 1 else np.max(np.linalg.norm(diff, axis=0))
            if err <= tol:
                break
            n *= 2
            if n > _MAX_STEPS_PER_INTERVAL:
                raise IntegrationError(f"step underflow on [{a}, {b}] (error {err:.3e} > tol {tol:.1e})")
            coarse = fine
        x = fine
        out.append(x.copy())
        # both n and 2n met tol with margin: try fewer steps next interval
        order = 4 if scheme == "magnus4" else 2
        if err < tol / 2 ** (order + 1) and n > 1:
            n //= 2
    if stats is not None:
        stats["steps"] = total
    return out


def propagate_td(hamiltonian: Callable, psi0, grid, tol=1e-9, scheme="magnus4", stats=None):
    """States ``Ψ(t)`` on ``grid`` for ``i ∂_t Ψ = H(t) Ψ`` with ``Ψ(grid[0]) = psi0``.

    ``hamiltonian`` is a callable ``t -> H(t)`` (see
    :meth:`HamiltonianModel.hamiltonian`). The result preserves the norm to
    rounding error, independently of ``tol``.
    """
    psi0 = _check_state(psi0)
    return propagate_adaptive(hamiltonian, psi0, grid, tol, scheme, stats)


def propagate_ti(h, psi0, t):
    """``exp(-i H t) psi0`` via the spectrum; ``t`` may be a scalar or an array of times."""
    psi0 = _check_state(psi0)
    w, v = eigh(h)
    c = v.conj().T @ psi0
    if np.ndim(t) == 0:
        return v @ (np.exp(-1j * w * t) * c)
    return [v @ (np.exp(-1j * w * tt) * c) for tt in np.asarray(t, dtype=float)]


# ---------------------------------------------------------------------------
# gauge-mapped evolution


def evolve_with_map(gmap: GaugeMap, psi0, grid, tol=1e-9, scheme="magnus4"):
    """``Ψ_t = U_t Ψ̃_t`` with ``Ψ̃`` propagated by ``H̃`` (exactly when it is static)."""
    psi0 = _check_state(psi0, gmap.model.dimension)
    grid = np.asarray(grid, dtype=float)
    if gmap.static:
        tilde = propagate_ti(gmap.h_tilde(), psi0, grid - grid[0])
    else:
        tilde = propagate_td(gmap.h_tilde, psi0, grid, tol, scheme)
    return [gmap.unitary(t) @ s for t, s in zip(grid, tilde)]


def evolve_via_gauge(model, protocol, psi0, grid, tol=1e-9, gauge_tol=1e-11, method="covariant"):
    """Build the gauge map for ``model`` and ``protocol`` and evolve ``psi0`` through it."""
    grid = np.asarray(grid, dtype=float)
    gmap = build_gauge_map(model, protocol, horizon=grid[-1], tol=gauge_tol, method=method)
    return evolve_with_map(gmap, psi0, grid, tol)


def aligned_distance(a, b):
    """``min_θ ‖a - e^{iθ} b‖`` and the optimal ``θ``.

    The difference is formed explicitly, so distances far below 1e-8 are resolved.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    overlap = np.vdot(b, a)
    theta = float(np.angle(overlap)) if abs(overlap) > 0 else 0.0
    return float(np.linalg.norm(a - np.exp(1j * theta) * b)), theta


# ---------------------------------------------------------------------------
# observables


@dataclass
class ObservableSeries:
    """Named real expectation values on a time grid."""

    times: np.ndarray
    values: Dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name):
        return self.values[name]

    @property
    def names(self):
        return list(self.values)

    def columns(self):
        return ["t"] + self.names

    def rows(self):
        return [[float(t)] + [float(self.values[k][i]) for k in self.names]
                for i, t in enumerate(self.times)]

    def to_dict(self):
        return {"times": [float(t) for t in self.times],
                "values": {k: [float(x) for x in v] for k, v in self.values.items()}}


def single_site_rdm(psi, site, dims):
    """Reduced density matrix of tensor factor ``site`` of a pure state on ``dims``."""
    psi = np.asarray(psi).reshape(dims)
    m = np.moveaxis(psi, site, 0).reshape(dims[site], -1)
    return m @ m.conj().T


def single_site_purity(psi, site, dims):
    rho = single_site_rdm(psi, site, dims)
    return float(np.real(np.trace(rho @ rho)))


def expectation_values(states, operators: Dict[str, np.ndarray], times=None,
                       purity_dims: Optional[Sequence[int]] = None, purity_sites=()):
    """``⟨ψ|A|ψ⟩`` for every named Hermitian ``A`` and every state.

    ``purity_sites`` adds the derived observables ``purity_<i>``, the purity of
    the single-site reduced density matrix, for a tensor structure ``purity_dims``.
    """
    states = [np.asarray(s) for s in states]
    if times is None:
        times = np.arange(len(states), dtype=float)
    values = {}
    for name, op in operators.items():
        op = np.asarray(op)
        if not is_hermitian(op):
            raise ContractError(f"observable {name!r} is not Hermitian")
        if op.shape[0] != states[0].shape[0]:
            raise ContractError(f"observable {name!r} has dimension {op.shape[0]}")
        values[name] = np.array([np.vdot(s, op @ s).real for s in states])
    for i in purity_sites:
        if purity_dims is None:
            raise ContractError("purity needs the tensor structure (purity_dims)")
        values[f"purity_{i}"] = np.array([single_site_purity(s, i, purity_dims) for s in states])
    return ObservableSeries(np.asarray(times, dtype=float), values)


# ---------------------------------------------------------------------------
# special states, Floquet, invariants


def eigenspace_projection(h, psi, energy, atol=1e-9):
    """Normalized projection of ``psi`` onto the eigenspace of ``h`` at ``energy``.

    Any vector of a degenerate multiplet is a valid eigenstate, so the
    projection onto the whole multiplet is returned.
    """
    w, v = eigh(h)
    mask = np.abs(w - energy) <= atol * max(1.0, abs(energy))
    if not np.any(mask):
        raise PreconditionError(f"{energy} is not an eigenvalue")
    sub = v[:, mask]
    return normalize(sub @ (sub.conj().T @ psi))


def special_state_evolve(psi0, energy, gmap: GaugeMap, grid):
    """``Ψ_t = e^{-iẼt} U_t Ψ_0`` for an eigenstate ``Ψ_0`` of a static ``H̃``."""
    if not gmap.static:
        raise PreconditionError("closed-form special-state evolution needs a static H̃")
    psi0 = _check_state(psi0, gmap.model.dimension)
    residual = float(np.linalg.norm(gmap.h_tilde() @ psi0 - energy * psi0))
    if residual > 1e-8:
        raise PreconditionError(f"initial state is not an eigenstate (residual {residual:.3e})",
                                residual=residual)
    grid = np.asarray(grid, dtype=float)
    return [np.exp(-1j * energy * (t - grid[0])) * (gmap.unitary(t) @ psi0) for t in grid]


@dataclass(frozen=True)
class FloquetResult:
    state: np.ndarray
    defect: float
    theta: float
    period: float
    n: int


def floquet_stroboscopic(gmap: GaugeMap, period, psi0, n, atol=1e-7):
    """Stroboscopic state ``Ψ_{nT} = e^{inθ} e^{-inH̃T} Ψ_0``.

    The gauge unitary is checked to be ``e^{iθ}·1`` at ``t = T``; the measured
    defect ``‖U_T - e^{iθ} 1‖_F`` and ``θ`` are reported.
    """
    if not gmap.static:
        raise PreconditionError("stroboscopic closed form needs a static H̃")
    psi0 = _check_state(psi0, gmap.model.dimension)
    t0 = gmap.horizon[0]
    u_t = gmap.unitary(t0 + period)
    d = u_t.shape[0]
    theta = float(np.angle(np.trace(u_t) / d))
    defect = float(np.linalg.norm(u_t - np.exp(1j * theta) * np.eye(d)))
    if defect > atol:
        raise PeriodicityError(f"U_T is not a multiple of the identity (defect {defect:.3e})",
                               residual=defect)
    state = np.exp(1j * n * theta) * propagate_ti(gmap.h_tilde(), psi0, n * period)
    return FloquetResult(state, defect, theta, float(period), int(n))


def _commutator_check(i_tilde, gmap):
    h = gmap.h_tilde()
    comm = np.linalg.norm(i_tilde @ h - h @ i_tilde)
    if comm > 1e-9 * max(1.0, np.linalg.norm(i_tilde) * np.linalg.norm(h)):
        raise PreconditionError(f"Ĩ does not commute with H̃ (‖[Ĩ, H̃]‖ = {comm:.3e})", residual=comm)


def dynamical_invariant_track(i_tilde, gmap: GaugeMap, states, times, name="invariant"):
    """``⟨Ψ_t| U_t Ĩ U_t† |Ψ_t⟩`` along given states (constant for true solutions)."""
    if not gmap.static:
        raise PreconditionError("invariants are tracked for a static H̃")
    _commutator_check(i_tilde, gmap)
    vals = []
    for t, psi in zip(times, states):
        u = gmap.unitary(t)
        inv = u @ i_tilde @ u.conj().T
        vals.append(np.vdot(psi, inv @ psi).real)
    return ObservableSeries(np.asarray(times, dtype=float), {name: np.array(vals)})


def invariant_relation_residual(i_tilde, gmap: GaugeMap, t, dt=1e-3):
    """Residual of ``i ∂_t I = [H_t, I]`` for ``I(t) = U_t Ĩ U_t†``.

    Returns ``(relative, absolute)``; the relative value is scaled by
    ``‖H_t‖_F ‖I‖_F``, which bounds the commutator and stays meaningful
    when ``I`` happens to be constant (e.g. rotation-invariant ``Ĩ``).
    """
    _commutator_check(i_tilde, gmap)
    offs = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * dt
    weights = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12 * dt)
    t0, t1 = gmap.horizon
    if t + offs[0] < t0 or t + offs[-1] > t1:
        raise ContractError("t too close to the horizon edge for central differences")
    us = gmap.unitaries_near(t, offs)
    inv = [u @ i_tilde @ u.conj().T for u in us]
    d_inv = sum(w * m for w, m in zip(weights, inv))
    i_t = inv[2]
    h = gmap.hamiltonian(t)
    res = float(np.linalg.norm(1j * d_inv - (h @ i_t - i_t @ h)))
    scale = np.linalg.norm(h) * np.linalg.norm(i_t)
    return res / max(scale, 1e-300), res
