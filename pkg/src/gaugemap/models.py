"""Hamiltonian builders for the driven spin, fermion and spin-boson families.

Every model stores the field-free part of its Hamiltonian as a dense
matrix together with the spin operators the external magnetic field
couples to, so that ``H_t = H0 - Σ_i B_i(t)·S_i`` can be assembled
cheaply at any time.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError
from .fields import FieldProtocol
from .linalg import MAX_DIM, check_dimension, kron_chain, spin_matrices

__all__ = [
    "CouplingGraph",
    "HamiltonianModel",
    "spin_operators",
    "build_heisenberg",
    "build_ising",
    "build_fermion",
    "build_spin_boson",
    "boson_operators",
    "fermion_operators",
]

FAMILIES = ("heisenberg", "ising", "ising-chain", "fermion", "spin-boson")


@dataclass(frozen=True)
class CouplingGraph:
    """Sites ``0..L-1`` and weighted edges ``(i, j, J_ij)`` with ``i < j``."""

    n_sites: int
    edges: tuple = ()

    def __post_init__(self):
        if self.n_sites < 1:
            raise ContractError("graph needs at least one site")
        seen = set()
        clean = []
        for i, j, coupling in self.edges:
            i, j, coupling = int(i), int(j), float(coupling)
            if not (0 <= i < j < self.n_sites):
                raise ContractError(f"bad edge ({i}, {j}) for L={self.n_sites}")
            if (i, j) in seen:
                raise ContractError(f"duplicate edge ({i}, {j})")
            if not np.isfinite(coupling):
                raise ContractError("couplings must be finite")
            seen.add((i, j))
            clean.append((i, j, coupling))
        object.__setattr__(self, "edges", tuple(clean))

    @classmethod
    def chain(cls, n_sites, couplings=1.0):
        """Open nearest-neighbour chain; ``couplings`` is a scalar or ``L-1`` values."""
        js = np.broadcast_to(np.asarray(couplings, dtype=float), (n_sites - 1,))
        return cls(n_sites, tuple((i, i + 1, js[i]) for i in range(n_sites - 1)))

    @property
    def is_chain(self):
        return all(j == i + 1 for i, j, _ in self.edges)

    def chain_couplings(self):
        if not self.is_chain:
            raise ContractError("graph is not a nearest-neighbour chain")
        js = np.zeros(max(self.n_sites - 1, 0))
        for i, _, coupling in self.edges:
            js[i] = coupling
        return js

    def to_dict(self):
        return {"n_sites": self.n_sites, "edges": [list(e) for e in self.edges]}


def spin_operators(s, site, n_sites, cap=MAX_DIM):
    """``(Sx, Sy, Sz)`` of spin ``s`` acting on ``site`` of an ``n_sites`` lattice."""
    if not 0 <= site < n_sites:
        raise ContractError(f"site {site} outside 0..{n_sites - 1}")
    local = spin_matrices(s)
    d = local[0].shape[0]
    check_dimension(d**n_sites, cap)
    eye = np.eye(d)
    return tuple(
        kron_chain([op if k == site else eye for k in range(n_sites)])
        for op in local
    )


def boson_operators(n_max):
    """Truncated annihilation operator on occupations ``0..n_max``."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def fermion_operators(n_modes):
    """Jordan–Wigner annihilators ``c_m`` for ``n_modes`` modes.

    Local basis is ``(empty, occupied)``; ``c_m`` carries a parity string on
    modes ``< m``.
    """
    check_dimension(2**n_modes)
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    return [kron_chain([z] * m + [a] + [eye] * (n_modes - m - 1)) for m in range(n_modes)]


class HamiltonianModel:
    """A Hamiltonian family together with its dense field-free matrix.

    Attributes
    ----------
    family : str
        One of ``heisenberg``, ``ising``, ``ising-chain``, ``fermion``, ``spin-boson``.
    graph : CouplingGraph
        Lattice geometry (a single site for spin-boson).
    spin : float
        Spin quantum number of the lattice spins (1/2 for fermions).
    static : ndarray
        Field-free Hamiltonian ``H0``.
    extra : dict
        Family data (``eps``, ``V`` for fermions; ``f``, ``omega``, ``n_max`` for bosons).
    """

    def __init__(self, family, graph, spin, static, site_spins, extra=None):
        if family not in FAMILIES:
            raise ContractError(f"unknown family {family!r}")
        self.family = family
        self.graph = graph
        self.spin = spin
        self.static = static
        self._site_spins = site_spins  # callable i -> (3, d, d)
        self.extra = dict(extra or {})
        self.static.setflags(write=False)

    @property
    def dimension(self):
        return self.static.shape[0]

    @property
    def n_sites(self):
        return self.graph.n_sites

    @property
    def n_field_sites(self):
        """Number of independently driven spins (1 for spin-boson)."""
        return 1 if self.family == "spin-boson" else self.n_sites

    @property
    def local_dim(self):
        return int(round(2 * self.spin + 1))

    def site_spin(self, i):
        """Stacked ``(Sx, Sy, Sz)`` of field site ``i`` on the full space."""
        return self.site_spin_stack[i]

    @cached_property
    def site_spin_stack(self):
        ops = np.stack([self._site_spins(i) for i in range(self.n_field_sites)])
        ops.setflags(write=False)
        return ops

    @cached_property
    def total_spin(self):
        tot = self.site_spin_stack.sum(axis=0)
        tot.setflags(write=False)
        return tot

    def field_term(self, b):
        """``-Σ_i B_i·S_i`` for a homogeneous ``(3,)`` or per-site ``(L, 3)`` field."""
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            return -np.tensordot(b, self.total_spin, axes=(0, 0))
        if b.shape != (self.n_field_sites, 3):
            raise ContractError(f"field shape {b.shape} does not match {self.n_field_sites} sites")
        return -np.tensordot(b, self.site_spin_stack, axes=([0, 1], [0, 1]))

    def hamiltonian(self, protocol: Optional[FieldProtocol] = None):
        """Return ``t -> H_t = H0 - Σ_i B_i(t)·S_i``."""
        if protocol is None:
            return lambda t: self.static
        return lambda t: self.static + self.field_term(protocol(t))

    def __repr__(self):
        return f"HamiltonianModel({self.family!r}, L={self.n_sites}, s={self.spin}, dim={self.dimension})"


def _spin_site_factory(s, n_sites, tail_dim=1):
    def make(i):
        ops = spin_operators(s, i, n_sites)
        if tail_dim > 1:
            eye = np.eye(tail_dim)
            ops = tuple(np.kron(o, eye) for o in ops)
        return np.stack(ops)
    return make


def _pair_sum(graph, s, components):
    d = int(round(2 * s + 1))
    dim = check_dimension(d**graph.n_sites)
    h = np.zeros((dim, dim), dtype=complex)
    cache = {}

    def site(i):
        if i not in cache:
            cache[i] = spin_operators(s, i, graph.n_sites)
        return cache[i]

    for i, j, coupling in graph.edges:
        si, sj = site(i), site(j)
        for a in components:
            h += coupling * (si[a] @ sj[a])
    return h


def build_heisenberg(graph: CouplingGraph, s=0.5):
    """Isotropic Heisenberg model ``Σ_{i<j} J_ij S_i·S_j``."""
    h = _pair_sum(graph, s, (0, 1, 2))
    return HamiltonianModel("heisenberg", graph, s, h, _spin_site_factory(s, graph.n_sites))


def build_ising(graph: CouplingGraph, s=0.5):
    """Ising coupling ``Σ_{i<j} J_ij Sx_i Sx_j``.

    Chain graphs get family ``ising-chain``; they are the ones the free-fermion
    reduction accepts.
    """
    h = _pair_sum(graph, s, (0,))
    family = "ising-chain" if (graph.is_chain and s == 0.5) else "ising"
    return HamiltonianModel(family, graph, s, h, _spin_site_factory(s, graph.n_sites))


def build_fermion(eps, v):
    """Spin-1/2 lattice fermions.

    ``H_e = -1/2 Σ_{σij} ε_ij c†_{σi} c_{σj} + 1/2 Σ_ij V_ij n_i n_j`` with
    ``n_i = n_{i↑} + n_{i↓}``. Modes are ordered site-major, spin-minor
    (mode ``2i`` is ``i↑``, ``2i+1`` is ``i↓``).
    """
    eps = np.asarray(eps, dtype=complex)
    v = np.asarray(v, dtype=float)
    n = eps.shape[0]
    if eps.shape != (n, n) or v.shape != (n, n):
        raise ContractError("eps and V must be L x L")
    if np.linalg.norm(eps - eps.conj().T) > 1e-12 * max(1.0, np.linalg.norm(eps)):
        raise ContractError("eps must be Hermitian")
    if np.linalg.norm(v - v.T) > 1e-12 * max(1.0, np.linalg.norm(v)):
        raise ContractError("V must be symmetric")
    check_dimension(4**n)
    c = fermion_operators(2 * n)
    cd = [x.conj().T for x in c]
    num = [cd[m] @ c[m] for m in range(2 * n)]
    dens = [num[2 * i] + num[2 * i + 1] for i in range(n)]
    dim = 4**n
    h = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        for j in range(n):
            if eps[i, j] != 0:
                for sg in (0, 1):
                    h += -0.5 * eps[i, j] * (cd[2 * i + sg] @ c[2 * j + sg])
            if v[i, j] != 0:
                h += 0.5 * v[i, j] * (dens[i] @ dens[j])
    half = spin_matrices(0.5)

    def site_spins(i):
        out = np.zeros((3, dim, dim), dtype=complex)
        for a in range(3):
            s_a = half[a]
            for st in (0, 1):
                for sg in (0, 1):
                    if s_a[st, sg] != 0:
                        out[a] += s_a[st, sg] * (cd[2 * i + st] @ c[2 * i + sg])
        return out

    model = HamiltonianModel("fermion", CouplingGraph(n), 0.5, h, site_spins,
                             {"eps": eps, "V": v})
    model.extra["number"] = sum(num)
    model.extra["number_up"] = sum(num[0::2])
    model.extra["number_down"] = sum(num[1::2])
    return model


def build_spin_boson(f: Sequence[float], omega: Sequence[float], n_max, s=0.5):
    """One spin coupled to bosonic modes: ``Sx Σ_k f_k (a_k + a_k†) + Σ_k ω_k a_k† a_k``.

    Tensor order is spin ⊗ mode 1 ⊗ mode 2 ⊗ ...; each mode is truncated at
    occupation ``n_max``.
    """
    f = np.atleast_1d(np.asarray(f, dtype=float))
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if f.shape != omega.shape:
        raise ContractError("f and omega must have equal length")
    k = len(f)
    if not 1 <= k <= 2:
        raise ContractError("spin-boson supports one or two modes")
    if not 1 <= n_max <= 16:
        raise ContractError("n_max must lie in 1..16")
    d_spin = int(round(2 * s + 1))
    nb = n_max + 1
    check_dimension(d_spin * nb**k)
    a = boson_operators(n_max)
    eye_b = np.eye(nb)
    modes = [kron_chain([a if q == m else eye_b for q in range(k)]) for m in range(k)]
    bdim = nb**k
    coupling = np.zeros((bdim, bdim), dtype=complex)
    energy = np.zeros((bdim, bdim), dtype=complex)
    for fk, wk, am in zip(f, omega, modes):
        coupling += fk * (am + am.conj().T)
        energy += wk * (am.conj().T @ am)
    sx, sy, sz = spin_matrices(s)
    h = np.kron(sx, coupling) + np.kron(np.eye(d_spin), energy)

    def site_spins(i):
        return np.stack([np.kron(o, np.eye(bdim)) for o in (sx, sy, sz)])

    model = HamiltonianModel("spin-boson", CouplingGraph(1), s, h, site_spins,
                             {"f": f, "omega": omega, "n_max": n_max})
    model.extra["boson_number"] = np.kron(np.eye(d_spin), sum(m.conj().T @ m for m in modes))
    model.extra["boson_energy"] = np.kron(np.eye(d_spin), energy)
    return model
