"""Time-dependent magnetic-field protocols.

A protocol is a callable ``p(t)`` returning a numpy array: shape ``(3,)`` for a
homogeneous field, ``(L, 3)`` for a per-site field, or a scalar for the
per-site scalar drives (longitudinal components, envelopes) that the Ising
constructions consume. Every protocol carries a finite or semi-infinite
horizon and refuses to evaluate outside it.

Field units are energy with ħ = 1.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import ContractError, FieldRangeError

__all__ = [
    "FieldProtocol",
    "FieldSample",
    "ConstantField",
    "LinearRampField",
    "RotatingField",
    "SinusoidalField",
    "SampledField",
    "PerSiteField",
    "ScaledField",
    "eval_field",
    "integral",
    "random_smooth_field",
    "protocol_from_dict",
    "register_kind",
]


class FieldProtocol:
    """Base class. Subclasses implement ``_value`` and optionally ``_antiderivative``."""

    kind = "abstract"

    def __init__(self, horizon=(0.0, np.inf)):
        t0, t1 = float(horizon[0]), float(horizon[1])
        if not t1 > t0:
            raise ContractError(f"empty horizon {horizon}")
        self.horizon = (t0, t1)

    # per-site protocols override
    n_sites: Optional[int] = None

    @property
    def homogeneous(self):
        return self.n_sites is None

    def _check(self, t):
        t0, t1 = self.horizon
        if not (t0 <= t <= t1):
            raise FieldRangeError(f"t={t} outside horizon [{t0}, {t1}]")

    def __call__(self, t):
        t = float(t)
        self._check(t)
        return self._value(t)

    def antiderivative(self, t):
        """``∫_{t0}^t p(t') dt'`` in closed form, or ``None`` if unavailable."""
        t = float(t)
        self._check(t)
        return self._antiderivative(t)

    def _value(self, t):
        raise NotImplementedError

    def _antiderivative(self, t):
        return None

    def with_horizon(self, horizon):
        """Shallow copy with a different horizon."""
        import copy

        other = copy.copy(self)
        FieldProtocol.__init__(other, horizon)
        return other

    def to_dict(self):
        raise NotImplementedError(f"{type(self).__name__} is not serialisable")


@dataclass(frozen=True)
class FieldSample:
    t: float
    value: np.ndarray

    @property
    def homogeneous(self):
        return self.value.ndim == 1


def eval_field(p: FieldProtocol, t: float) -> FieldSample:
    """Evaluate ``p`` at ``t``; raises :class:`FieldRangeError` outside the horizon."""
    return FieldSample(float(t), np.asarray(p(t), dtype=float))


def integral(p: FieldProtocol, t: float, epsabs=1e-13, epsrel=1e-12):
    """``∫_{t0}^t p`` using the closed form when the protocol has one."""
    exact = p.antiderivative(t)
    if exact is not None:
        return np.asarray(exact, dtype=float)
    return _quad_integral(p, t, epsabs, epsrel)


def _quad_integral(p, t, epsabs=1e-13, epsrel=1e-12):
    t0 = p.horizon[0]
    shape = np.shape(p(t0))
    out = np.zeros(shape)
    for idx in np.ndindex(shape) if shape else [()]:
        val, _ = quad(lambda s: p(s)[idx] if shape else p(s), t0, t,
                      epsabs=epsabs, epsrel=epsrel, limit=200)
        if shape:
            out[idx] = val
        else:
            out = np.asarray(val)
    return out


class ConstantField(FieldProtocol):
    kind = "constant"

    def __init__(self, value, horizon=(0.0, np.inf)):
        super().__init__(horizon)
        self.value = np.asarray(value, dtype=float)

    def _value(self, t):
        return self.value.copy()

    def _antiderivative(self, t):
        return self.value * (t - self.horizon[0])

    def to_dict(self):
        return {"kind": self.kind, "value": self.value.tolist()}


class LinearRampField(FieldProtocol):
    """``B(t) = start + rate (t - t0)``."""

    kind = "linear-ramp"

    def __init__(self, start, rate, horizon=(0.0, np.inf)):
        super().__init__(horizon)
        self.start = np.asarray(start, dtype=float)
        self.rate = np.asarray(rate, dtype=float)

    def _value(self, t):
        return self.start + self.rate * (t - self.horizon[0])

    def _antiderivative(self, t):
        dt = t - self.horizon[0]
        return self.start * dt + 0.5 * self.rate * dt**2

    def to_dict(self):
        return {"kind": self.kind, "start": self.start.tolist(), "rate": self.rate.tolist()}


class RotatingField(FieldProtocol):
    """``B(t) = (A cos(ωt + φ), A sin(ωt + φ), Bz)``."""

    kind = "rotating"

    def __init__(self, amplitude, omega, bz=0.0, phase=0.0, horizon=(0.0, np.inf)):
        super().__init__(horizon)
        if omega == 0:
            raise ContractError("rotating field needs a nonzero frequency")
        self.amplitude = float(amplitude)
        self.omega = float(omega)
        self.bz = float(bz)
        self.phase = float(phase)

    def _value(self, t):
        arg = self.omega * t + self.phase
        return np.array([self.amplitude * np.cos(arg), self.amplitude * np.sin(arg), self.bz])

    def _antiderivative(self, t):
        t0 = self.horizon[0]
        a, w, ph = self.amplitude, self.omega, self.phase
        return np.array([
            a / w * (np.sin(w * t + ph) - np.sin(w * t0 + ph)),
            -a / w * (np.cos(w * t + ph) - np.cos(w * t0 + ph)),
            self.bz * (t - t0),
        ])

    def to_dict(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "omega": self.omega,
                "bz": self.bz, "phase": self.phase}


class SinusoidalField(FieldProtocol):
    """``B(t) = offset + Σ_k amp_k sin(ω_k t + φ_k)``.

    ``offset`` and every ``amp_k`` share one shape (scalar or 3-vector).
    """

    kind = "sinusoidal"

    def __init__(self, offset, amplitudes=(), omegas=(), phases=None, horizon=(0.0, np.inf)):
        super().__init__(horizon)
        self.offset = np.asarray(offset, dtype=float)
        self.amplitudes = np.asarray(amplitudes, dtype=float).reshape((-1,) + self.offset.shape)
        self.omegas = np.asarray(omegas, dtype=float).reshape(-1)
        if phases is None:
            phases = np.zeros_like(self.omegas)
        self.phases = np.asarray(phases, dtype=float).reshape(-1)
        if not (len(self.amplitudes) == len(self.omegas) == len(self.phases)):
            raise ContractError("amplitudes, omegas and phases must have equal length")
        if np.any(self.omegas == 0):
            raise ContractError("harmonic frequencies must be nonzero")

    def _bcast(self, v):
        return v.reshape((-1,) + (1,) * self.offset.ndim)

    def _value(self, t):
        s = np.sin(self.omegas * t + self.phases)
        return self.offset + np.sum(self._bcast(s) * self.amplitudes, axis=0)

    def _antiderivative(self, t):
        t0 = self.horizon[0]
        w = self.omegas
        c = (np.cos(w * t0 + self.phases) - np.cos(w * t + self.phases)) / w
        return self.offset * (t - t0) + np.sum(self._bcast(c) * self.amplitudes, axis=0)

    def to_dict(self):
        return {"kind": self.kind, "offset": self.offset.tolist(),
                "amplitudes": self.amplitudes.tolist(), "omegas": self.omegas.tolist(),
                "phases": self.phases.tolist()}


class SampledField(FieldProtocol):
    """Cubic-spline interpolation of tabulated values; reproduces every knot exactly."""

    kind = "sampled-table"

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or len(times) < 4:
            raise ContractError("sampled table needs at least four time points")
        if np.any(np.diff(times) <= 0):
            raise ContractError("sampled table times must be strictly increasing")
        super().__init__((times[0], times[-1]))
        self.times = times
        self.values = values
        self._spline = CubicSpline(times, values, axis=0)
        self._integral = self._spline.antiderivative()

    def _value(self, t):
        return np.asarray(self._spline(t))

    def _antiderivative(self, t):
        return np.asarray(self._integral(t) - self._integral(self.horizon[0]))

    def to_dict(self):
        return {"kind": self.kind, "times": self.times.tolist(), "values": self.values.tolist()}


class PerSiteField(FieldProtocol):
    """Stack of homogeneous protocols, one per site; evaluates to shape ``(L, 3)``."""

    kind = "per-site"

    def __init__(self, sites: Sequence[FieldProtocol]):
        sites = list(sites)
        if not sites:
            raise ContractError("per-site field needs at least one site")
        t0 = max(p.horizon[0] for p in sites)
        t1 = min(p.horizon[1] for p in sites)
        super().__init__((t0, t1))
        self.sites = sites
        self.n_sites = len(sites)

    def _value(self, t):
        return np.stack([np.asarray(p(t), dtype=float) for p in self.sites])

    def _antiderivative(self, t):
        parts = [p.antiderivative(t) for p in self.sites]
        if any(x is None for x in parts):
            return None
        return np.stack(parts)

    def to_dict(self):
        return {"kind": self.kind, "sites": [p.to_dict() for p in self.sites]}


class ScaledField(FieldProtocol):
    """``factor * base(t)``; ``factor = -1`` gives the sign-flipped negative controls."""

    kind = "scaled"

    def __init__(self, base: FieldProtocol, factor):
        super().__init__(base.horizon)
        self.base = base
        self.factor = float(factor)
        self.n_sites = base.n_sites

    def _value(self, t):
        return self.factor * np.asarray(self.base(t))

    def _antiderivative(self, t):
        inner = self.base.antiderivative(t)
        return None if inner is None else self.factor * np.asarray(inner)

    def with_horizon(self, horizon):
        return ScaledField(self.base.with_horizon(horizon), self.factor)

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict(), "factor": self.factor}


def random_smooth_field(rng, n_harmonics=3, scale=1.0, omega_range=(0.2, 2.0), shape=(3,),
                        horizon=(0.0, np.inf)):
    """Random :class:`SinusoidalField` with O(``scale``) amplitudes."""
    offset = scale * rng.normal(size=shape) * 0.7
    amps = scale * rng.normal(size=(n_harmonics,) + tuple(shape)) * 0.7
    omegas = rng.uniform(*omega_range, size=n_harmonics)
    phases = rng.uniform(0, 2 * np.pi, size=n_harmonics)
    return SinusoidalField(offset, amps, omegas, phases, horizon=horizon)


_KINDS = {
    "constant": lambda d: ConstantField(d["value"]),
    "linear-ramp": lambda d: LinearRampField(d["start"], d["rate"]),
    "rotating": lambda d: RotatingField(d["amplitude"], d["omega"], d.get("bz", 0.0), d.get("phase", 0.0)),
    "sinusoidal": lambda d: SinusoidalField(d["offset"], d.get("amplitudes", ()), d.get("omegas", ()),
                                            d.get("phases")),
    "sampled-table": lambda d: SampledField(d["times"], d["values"]),
    "per-site": lambda d: PerSiteField([protocol_from_dict(s) for s in d["sites"]]),
    "scaled": lambda d: ScaledField(protocol_from_dict(d["base"]), d["factor"]),
}


def protocol_from_dict(d, horizon=None):
    """Build a protocol from its ``to_dict`` form (used by the experiment configs).

    The Ising-compatible kinds live in :mod:`gaugemap.gauge` and register
    themselves here on import.
    """
    try:
        maker = _KINDS[d["kind"]]
    except KeyError:
        raise ContractError(f"unknown field kind {d.get('kind')!r}") from None
    p = maker(d)
    if horizon is not None and p.kind != "sampled-table":
        p = p.with_horizon(horizon)
    return p


def register_kind(name, maker):
    _KINDS[name] = maker
