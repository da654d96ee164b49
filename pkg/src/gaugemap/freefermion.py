"""Free-fermion dynamics of the transverse-field Ising chain.

The chain ``H̃_t = Σ_i J_i Sx_i Sx_{i+1} - Σ_i m_i(t) (d_i·S_i)``, with static
unit transverse directions ``d_i = (dy, dz)`` in the y–z plane, is first
rotated site-wise about x so that every ``d_i`` becomes ``z``:
``H' = V† H̃ V`` with ``V = Π_i exp(iβ_i Sx_i)``, ``β_i = atan2(dy_i, dz_i)``.

Jordan–Wigner with Majoranas ``γ_{2i} = (Π_{j<i} σz_j) σx_i``,
``γ_{2i+1} = (Π_{j<i} σz_j) σy_i`` then gives ``H' = (i/4) γᵀ A(t) γ`` with the
real antisymmetric generator

    A[2i, 2i+1] = m_i,      A[2i+1, 2i+2] = -J_i / 2.

The Heisenberg picture is ``γ(t) = O(t) γ``, ``Ȯ = A O``. The covariance
matrix ``Γ_ab = (i/2)⟨[c_a, c_b]⟩`` uses ``c = γ/√2``, so the spectrum of
``iΓ`` lies in ``[-1/2, 1/2]`` and ``Γ(t) = O Γ0 Oᵀ``.
"""

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import schur

from .dynamics import propagate_adaptive
from .errors import ContractError, UnsupportedModelError

__all__ = [
    "QuadraticCoefficients",
    "GroundCovariance",
    "jw_coefficients",
    "jw_from_gauge_map",
    "ground_covariance",
    "product_covariance",
    "propagate_covariance",
    "covariance_energy",
    "covariance_observables",
    "physical_observables",
    "even_sector_spectrum",
    "check_covariance",
    "frame_rotation",
]


@dataclass(frozen=True)
class QuadraticCoefficients:
    """Time-dependent Majorana generator of the rotated chain.

    Attributes
    ----------
    couplings : ndarray
        Bond couplings ``J_i`` (length ``L - 1``).
    angles : ndarray
        Static rotation angles ``β_i`` about x (recorded for the observables).
    magnitudes : callable
        ``t -> m(t)``, the signed transverse field along ``d_i``.
    """

    couplings: np.ndarray
    angles: np.ndarray
    magnitudes: Callable

    @property
    def n_sites(self):
        return len(self.angles)

    def generator(self, t):
        """Real antisymmetric ``A(t)`` of size ``2L x 2L``."""
        n = self.n_sites
        a = np.zeros((2 * n, 2 * n))
        m = np.asarray(self.magnitudes(t), dtype=float)
        idx = np.arange(n)
        a[2 * idx, 2 * idx + 1] = m
        b = np.arange(n - 1)
        a[2 * b + 1, 2 * b + 2] = -0.5 * self.couplings
        return a - a.T

    def is_static(self):
        return getattr(self.magnitudes, "static", False)


def jw_coefficients(couplings: Sequence[float], transverse, directions=None, t0=0.0, check_times=()):
    """Build the Majorana generator for an open chain with transverse fields.

    Parameters
    ----------
    couplings : sequence of float
        ``J_i`` for bonds ``(i, i+1)``.
    transverse : callable or array
        ``t -> (L, 2)`` array of ``(h_y, h_z)`` or ``(L, 3)`` with a zero x
        column; a constant array is accepted for static fields.
    directions : array, optional
        Static unit directions ``(L, 2)``. Taken from ``transverse(t0)`` when omitted.
    check_times : sequence of float
        Times at which the fields are checked to be longitudinal-free and
        parallel to ``directions``.

    Raises
    ------
    UnsupportedModelError
        If a longitudinal (x) field component is present.
    ContractError
        If the transverse direction of a site is not static.
    """
    couplings = np.asarray(couplings, dtype=float).reshape(-1)
    static = not callable(transverse)
    if static:
        value = np.asarray(transverse, dtype=float)
        transverse = lambda t: value

    def fields(t):
        v = np.asarray(transverse(t), dtype=float)
        if v.ndim != 2 or v.shape[1] not in (2, 3):
            raise ContractError("transverse fields must have shape (L, 2) or (L, 3)")
        if v.shape[1] == 3:
            if np.max(np.abs(v[:, 0])) > 0:
                raise UnsupportedModelError("longitudinal field in H̃; it belongs in the gauge unitary")
            v = v[:, 1:]
        return v

    f0 = fields(t0)
    n = f0.shape[0]
    if len(couplings) != n - 1:
        raise ContractError(f"expected {n - 1} couplings for {n} sites, got {len(couplings)}")
    if directions is None:
        norms = np.linalg.norm(f0, axis=1)
        directions = np.where(norms[:, None] > 0, f0 / np.where(norms > 0, norms, 1)[:, None], [0.0, 1.0])
    directions = np.asarray(directions, dtype=float)
    if directions.shape != (n, 2) or np.max(np.abs(np.linalg.norm(directions, axis=1) - 1)) > 1e-12:
        raise ContractError("directions must be unit vectors of shape (L, 2)")
    angles = np.arctan2(directions[:, 0], directions[:, 1])

    def magnitudes(t):
        v = fields(t)
        perp = directions[:, 0] * v[:, 1] - directions[:, 1] * v[:, 0]
        if np.max(np.abs(perp)) > 1e-10 * max(1.0, np.max(np.abs(v))):
            raise ContractError(f"transverse direction is not static at t={t}")
        return np.sum(directions * v, axis=1)

    magnitudes.static = static
    for t in check_times:
        magnitudes(t)
    return QuadraticCoefficients(couplings, angles, magnitudes)


def jw_from_gauge_map(gmap):
    """Coefficients of ``H̃_t`` for an Ising-chain gauge map (static or enveloped)."""
    model = gmap.model
    if model.family != "ising-chain":
        raise UnsupportedModelError("the free-fermion route needs a spin-1/2 open Ising chain")
    couplings = model.graph.chain_couplings()
    prot = gmap.protocol
    if hasattr(prot, "direction0") and not gmap.static:
        direction = prot.direction0
        mags = prot.magnitudes
        return QuadraticCoefficients(np.asarray(couplings, dtype=float),
                                     np.arctan2(direction[:, 0], direction[:, 1]), mags)
    trans = prot.transverse0 if hasattr(prot, "transverse0") else np.asarray(prot(prot.horizon[0]))[:, 1:]
    return jw_coefficients(couplings, np.asarray(trans, dtype=float))


# ---------------------------------------------------------------------------
# covariance matrices


def check_covariance(gamma, atol=1e-8):
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1] or gamma.shape[0] % 2:
        raise ContractError("covariance must be a real 2L x 2L matrix")
    if np.max(np.abs(gamma + gamma.T)) > 1e-10:
        raise ContractError("covariance must be antisymmetric")
    ev = np.linalg.eigvalsh(1j * gamma)
    if np.max(np.abs(ev)) > 0.5 + atol:
        raise ContractError("spectrum of iΓ exceeds [-1/2, 1/2]")
    return gamma


_J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class GroundCovariance:
    gamma: np.ndarray
    energy: float
    degenerate: bool
    parity: int
    single_particle: np.ndarray


def _real_blocks(a):
    """Orthogonal ``Q`` and block coefficients with ``a = Q (⊕ λ_k J2) Qᵀ``."""
    t, q = schur(a, output="real")
    n = a.shape[0]
    pairs, loose = [], []
    i = 0
    while i < n:
        if i + 1 < n and t[i + 1, i] != 0:
            pairs.append((i, i + 1))
            i += 2
        else:
            loose.append(i)
            i += 1
    # zero modes come as isolated 1x1 blocks; pair them in order
    pairs += [(loose[k], loose[k + 1]) for k in range(0, len(loose), 2)]
    q = q[:, [j for pair in pairs for j in pair]]
    blocks = q.T @ a @ q
    lam = np.array([blocks[2 * k, 2 * k + 1] for k in range(len(pairs))])
    return q, lam


def ground_covariance(coeffs: QuadraticCoefficients, t=0.0, zero_tol=1e-10) -> GroundCovariance:
    """Covariance matrix of the ground state of ``A(t)``.

    Zero modes make the ground state degenerate; they are filled with the
    ``+`` convention (as for a positive field) and ``degenerate`` is set.
    """
    a = coeffs.generator(t)
    q, lam = _real_blocks(a)
    scale = max(1.0, np.max(np.abs(a)))
    zero = np.abs(lam) <= zero_tol * scale
    sgn = np.where(zero, 1.0, np.sign(lam))
    n = len(lam)
    blocks = np.zeros((2 * n, 2 * n))
    for k in range(n):
        blocks[2 * k:2 * k + 2, 2 * k:2 * k + 2] = -0.5 * sgn[k] * _J2
    gamma = q @ blocks @ q.T
    gamma = 0.5 * (gamma - gamma.T)
    parity = int(round(np.linalg.det(q))) * int(np.prod(sgn))
    eps = np.sort(np.abs(lam))
    return GroundCovariance(gamma, covariance_energy(coeffs, gamma, t), bool(np.any(zero)),
                            parity, eps)


def product_covariance(up):
    """Covariance of a product of ``Sz'`` eigenstates (``True`` = up) in the rotated frame."""
    up = np.asarray(up, dtype=bool)
    n = len(up)
    gamma = np.zeros((2 * n, 2 * n))
    for i, u in enumerate(up):
        s = 1.0 if u else -1.0
        gamma[2 * i:2 * i + 2, 2 * i:2 * i + 2] = -0.5 * s * _J2
    return gamma


def covariance_energy(coeffs: QuadraticCoefficients, gamma, t=0.0):
    """``⟨H'⟩ = (1/2) Σ_ab A_ab Γ_ab``."""
    return float(0.5 * np.sum(coeffs.generator(t) * gamma))


def even_sector_spectrum(coeffs: QuadraticCoefficients, t=0.0, max_sites=16):
    """Many-body energies of the parity-even sector, ascending.

    Parity is ``Π_i σz_i`` in the rotated frame. States are built by filling
    Bogoliubov modes above the ground state, whose parity is tracked
    explicitly.
    """
    n = coeffs.n_sites
    if n > max_sites:
        raise ContractError(f"enumerating 2^{n} states is beyond the cap of {max_sites} sites")
    g = ground_covariance(coeffs, t)
    e0 = -0.5 * np.sum(g.single_particle)
    energies = []
    for k in range(n + 1):
        if g.parity * (-1) ** k != 1:
            continue
        for occ in combinations(range(n), k):
            energies.append(e0 + sum(g.single_particle[j] for j in occ))
    return np.sort(np.array(energies))


def propagate_covariance(coeffs: QuadraticCoefficients, gamma0, grid, tol=1e-10, scheme="magnus4",
                         stats=None):
    """``Γ(t) = O(t) Γ0 O(t)ᵀ`` on ``grid`` with ``Ȯ = A(t) O``, ``O(grid[0]) = 1``.

    ``O`` is advanced by exponential steps, so it stays orthogonal to rounding
    error and the spectrum of ``iΓ`` is conserved.
    """
    gamma0 = check_covariance(gamma0)
    n2 = gamma0.shape[0]
    if n2 != 2 * coeffs.n_sites:
        raise ContractError("covariance size does not match the chain")
    os_ = propagate_adaptive(lambda t: 1j * coeffs.generator(t), np.eye(n2, dtype=complex), grid,
                             tol=tol, scheme=scheme, stats=stats)
    out = []
    for o in os_:
        o = o.real
        g = o @ gamma0 @ o.T
        out.append(0.5 * (g - g.T))
    return out


def covariance_observables(gamma):
    """Rotated-frame ``⟨Sz'_i⟩ = -Γ_{2i,2i+1}`` and ``⟨Sx_i Sx_{i+1}⟩ = -Γ_{2i+1,2i+2}/2``."""
    gamma = np.asarray(gamma)
    n = gamma.shape[0] // 2
    i = np.arange(n)
    b = np.arange(n - 1)
    return {"sz": -gamma[2 * i, 2 * i + 1], "sxsx": -0.5 * gamma[2 * b + 1, 2 * b + 2]}


def physical_observables(gamma, angles, phases=None):
    """Lab-frame ``⟨Sz_i⟩`` and ``⟨Sx_i Sx_{i+1}⟩`` of ``U_t V Ψ'``.

    ``V`` rotates site ``i`` by ``β_i`` about x and ``U_t`` by ``φ_i``; the
    total angle ``θ = β + φ`` gives ``⟨Sz⟩ = cos θ ⟨Sz'⟩ - sin θ ⟨Sy'⟩`` and
    ``⟨Sy'⟩`` vanishes for every Gaussian (parity-definite) state.
    Bond correlators commute with the rotations.
    """
    obs = covariance_observables(gamma)
    theta = np.asarray(angles, dtype=float)
    if phases is not None:
        theta = theta + np.asarray(phases, dtype=float)
    return {"sz": np.cos(theta) * obs["sz"], "sxsx": obs["sxsx"]}


def frame_rotation(model, angles):
    """Dense ``V = Π_i exp(iβ_i Sx_i)`` on the chain's Hilbert space."""
    from .gauge import assemble_ising_rotation
    return assemble_ising_rotation(np.asarray(angles, dtype=float), model)
