"""Dense complex linear algebra used throughout the package.

Everything here is a pure function of its arguments. Exponentials of
Hermitian generators go through the eigendecomposition so that the result
is unitary to working precision; callers that propagate with the same
generator repeatedly should keep the spectrum from :func:`eigh` and call
:func:`expm_from_spectrum`.
"""

from functools import lru_cache, reduce
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, ContractError

__all__ = [
    "MAX_DIM",
    "kron",
    "kron_chain",
    "check_dimension",
    "is_hermitian",
    "eigh",
    "expm_unitary",
    "expm_from_spectrum",
    "spin_matrices",
    "su2_rotation",
    "su2_log",
    "AxisAngle",
    "axis_angle_distance",
    "rodrigues_rotate",
]

#: Largest Hilbert-space dimension any builder will assemble.
MAX_DIM = 2**20

_HERMITIAN_RTOL = 1e-10
_BRANCH_WINDOW = 1e-9


def check_dimension(dim, cap=MAX_DIM):
    if dim > cap:
        raise CapacityError(f"Hilbert-space dimension {dim} exceeds cap {cap}")
    return dim


def kron(a, b, cap=MAX_DIM):
    """Kronecker product ``a ⊗ b`` with a dimension guard."""
    a = np.asarray(a)
    b = np.asarray(b)
    check_dimension(a.shape[0] * b.shape[0], cap)
    check_dimension(a.shape[-1] * b.shape[-1], cap)
    return np.kron(a, b)


def kron_chain(ops: Sequence[np.ndarray], cap=MAX_DIM):
    """Left-folded Kronecker product ``((o0 ⊗ o1) ⊗ o2) ⊗ ...``.

    The evaluation order is fixed so repeated assembly is bitwise reproducible.
    """
    if not ops:
        raise ContractError("kron_chain needs at least one operator")
    rows = int(np.prod([np.shape(o)[0] for o in ops]))
    check_dimension(rows, cap)
    return reduce(lambda x, y: np.kron(x, y), [np.asarray(o) for o in ops])


def is_hermitian(h, rtol=_HERMITIAN_RTOL):
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    scale = max(np.linalg.norm(h), 1e-300)
    return np.linalg.norm(h - h.conj().T) <= rtol * scale


def eigh(h):
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    w : ndarray
        Real eigenvalues in ascending order.
    v : ndarray
        Unitary matrix whose columns are the eigenvectors.

    Raises
    ------
    ContractError
        If ``h`` is not square or not Hermitian to relative tolerance 1e-10.
    """
    h = np.asarray(h)
    if not np.all(np.isfinite(h)):
        raise ContractError("matrix has non-finite entries")
    if not is_hermitian(h):
        raise ContractError("eigh requires a Hermitian matrix")
    h = 0.5 * (h + h.conj().T)
    return np.linalg.eigh(h)


def expm_from_spectrum(w, v, s):
    """``exp(-i s H)`` from a precomputed spectrum ``H = v diag(w) v†``."""
    phases = np.exp(-1j * s * np.asarray(w))
    return (v * phases) @ v.conj().T


def expm_unitary(h, s=1.0):
    """Return ``exp(-i s H)`` for Hermitian ``H``."""
    w, v = eigh(h)
    return expm_from_spectrum(w, v, s)


@lru_cache(maxsize=32)
def _spin_matrices_cached(two_s):
    s = two_s / 2.0
    m = s - np.arange(two_s + 1)  # basis ordered m = s, s-1, ..., -s
    sz = np.diag(m).astype(complex)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    off = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    sp = np.diag(off, k=1).astype(complex)
    sx = 0.5 * (sp + sp.conj().T)
    sy = -0.5j * (sp - sp.conj().T)
    for a in (sx, sy, sz):
        a.setflags(write=False)
    return sx, sy, sz


def _two_s(s):
    two_s = 2 * s
    if not np.isfinite(two_s) or abs(two_s - round(two_s)) > 1e-12 or round(two_s) < 1:
        raise ContractError(f"spin quantum number must be a positive half-integer, got {s}")
    return int(round(two_s))


def spin_matrices(s):
    """Single-site spin matrices ``(Sx, Sy, Sz)`` for spin ``s``.

    The basis is ordered by decreasing magnetic quantum number, so for
    ``s = 1/2`` the first basis vector is spin up and ``Sz = diag(1/2, -1/2)``.
    The returned arrays are read-only.
    """
    return _spin_matrices_cached(_two_s(s))


def su2_rotation(k, s=0.5):
    """Site factor ``exp(i K·S)`` for axis-angle vector ``k`` and spin ``s``.

    For spin 1/2 the closed form ``cos(K/2) 1 + i sin(K/2) n·σ`` is used; for
    larger spins the Hermitian generator ``K·S`` is diagonalised.
    """
    k = np.asarray(k, dtype=float)
    two_s = _two_s(s)
    if two_s == 1:
        angle = np.linalg.norm(k)
        c = np.cos(0.5 * angle)
        # sin(K/2)/K written so the K -> 0 limit is exact
        sinc = 0.5 * np.sinc(0.5 * angle / np.pi)
        x, y, z = sinc * k
        return np.array([[c + 1j * z, y + 1j * x], [-y + 1j * x, c - 1j * z]])
    sx, sy, sz = spin_matrices(s)
    gen = k[0] * sx + k[1] * sy + k[2] * sz
    return expm_unitary(gen, -1.0)


class AxisAngle(NamedTuple):
    """Principal axis-angle vector returned by :func:`su2_log`."""

    vector: np.ndarray
    near_cut: bool

    @property
    def angle(self):
        return float(np.linalg.norm(self.vector))

    @property
    def axis(self):
        a = self.angle
        if a == 0.0:
            return np.array([0.0, 0.0, 1.0])
        return self.vector / a


def su2_log(u):
    """Inverse of :func:`su2_rotation` on spin 1/2.

    ``u`` may carry an arbitrary global phase; it is removed through the
    principal square root of the determinant. The returned angle lies in
    ``[0, 2π]`` and ``near_cut`` is set when it is within 1e-9 of ``2π``,
    where the axis is ill defined.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ContractError("su2_log expects a 2x2 matrix")
    if np.linalg.norm(u.conj().T @ u - np.eye(2)) > 1e-10:
        raise ContractError("su2_log expects a unitary matrix")
    v = u / np.sqrt(np.linalg.det(u))
    c = 0.5 * (v[0, 0] + v[1, 1]).real
    vx = 0.5 * (v[0, 1] + v[1, 0]).imag
    vy = 0.5 * (v[0, 1] - v[1, 0]).real
    vz = 0.5 * (v[0, 0] - v[1, 1]).imag
    sin_half = np.array([vx, vy, vz])
    norm = np.linalg.norm(sin_half)
    half = np.arctan2(norm, c)
    if norm == 0.0:
        vec = np.zeros(3) if c > 0 else np.array([0.0, 0.0, 2 * np.pi])
    else:
        vec = (2 * half / norm) * sin_half
    return AxisAngle(vec, bool(2 * np.pi - 2 * half < _BRANCH_WINDOW))


def axis_angle_distance(k1, k2):
    """Rotation angle of ``R(k1)† R(k2)`` on spin 1/2, in ``[0, 2π]``.

    Zero iff the two axis-angle vectors describe the same SU(2) element,
    including its sign; ``k`` and ``k + 4π k̂`` are at distance zero.
    """
    ua = su2_rotation(k1, 0.5)
    ub = su2_rotation(k2, 0.5)
    return su2_log(ua.conj().T @ ub).angle


def rodrigues_rotate(a, b):
    """Vector ``c`` with ``exp(i a·S)(b·S)exp(-i a·S) = c·S`` for any spin."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    angle = np.linalg.norm(a)
    if angle == 0.0:
        return b.copy()
    n = a / angle
    return n * (n @ b) * (1 - np.cos(angle)) + b * np.cos(angle) - np.cross(n, b) * np.sin(angle)
