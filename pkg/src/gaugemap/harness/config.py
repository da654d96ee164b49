"""Experiment configuration: JSON documents validated against a published schema."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from ..errors import CapacityError, ConfigError, ContractError
from ..fields import protocol_from_dict
from ..linalg import MAX_DIM
from ..models import (CouplingGraph, build_fermion, build_heisenberg, build_ising,
                      build_spin_boson)

__all__ = ["SCHEMA_VERSION", "SCHEMA", "ExperimentConfig", "load_config", "build_model",
           "build_protocol", "tensor_dims", "initial_state"]

SCHEMA_VERSION = 1

_NUMBER_OR_LIST = {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}}]}
_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "gaugemap experiment",
    "type": "object",
    "required": ["schemaVersion", "model", "protocol", "horizon"],
    "additionalProperties": False,
    "properties": {
        "schemaVersion": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "model": {
            "type": "object",
            "required": ["family"],
            "properties": {
                "family": {"enum": ["heisenberg", "ising", "fermion", "spin-boson"]},
                "L": {"type": "integer", "minimum": 1},
                "spin": {"type": "number", "exclusiveMinimum": 0},
                "couplings": _NUMBER_OR_LIST,
                "edges": {"type": "array", "items": {"type": "array", "minItems": 3, "maxItems": 3}},
                "eps": _MATRIX,
                "V": _MATRIX,
                "f": _NUMBER_OR_LIST,
                "omega": _NUMBER_OR_LIST,
                "n_max": {"type": "integer", "minimum": 1},
            },
        },
        "protocol": {"type": "object", "required": ["kind"]},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "grid": {"type": "integer", "minimum": 2},
        "method": {"enum": ["covariant", "gauss"]},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0}
                           for k in ("ode", "propagator", "comparison", "residual")},
        },
        "initialState": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["product", "eigenstate", "random"]},
                "factors": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "all": {"type": "integer", "minimum": 0},
                "index": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer"},
            },
        },
        "observables": {"type": "array", "items": {"enum": [
            "sx", "sy", "sz", "sxsx", "energy", "purity", "stot2", "number", "boson_number"]}},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "format": {"enum": ["csv", "json"]}},
        },
    },
}

_DEFAULT_TOL = {"ode": 1e-11, "propagator": 1e-9, "comparison": 1e-6, "residual": 1e-5}


@dataclass
class ExperimentConfig:
    model: dict
    protocol: dict
    horizon: float
    name: str = "experiment"
    grid: int = 41
    method: str = "covariant"
    tolerances: dict = field(default_factory=lambda: dict(_DEFAULT_TOL))
    initial_state: dict = field(default_factory=lambda: {"kind": "product", "all": 0})
    observables: list = field(default_factory=lambda: ["sz", "energy"])
    output: dict = field(default_factory=dict)

    @property
    def times(self):
        return np.linspace(0.0, self.horizon, self.grid)


def load_config(source) -> ExperimentConfig:
    """Read and validate a config from a path, JSON string or dict."""
    if isinstance(source, dict):
        doc = source
    else:
        path = Path(source)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from None
    init = doc.get("initialState", {"kind": "product", "all": 0})
    if init["kind"] == "random" and "seed" not in init:
        raise ConfigError("random initial states need an explicit seed")
    cfg = ExperimentConfig(
        model=doc["model"], protocol=doc["protocol"], horizon=float(doc["horizon"]),
        name=doc.get("name", "experiment"), grid=doc.get("grid", 41),
        method=doc.get("method", "covariant"),
        tolerances={**_DEFAULT_TOL, **doc.get("tolerances", {})},
        initial_state=init, observables=list(doc.get("observables", ["sz", "energy"])),
        output=doc.get("output", {}))
    _check_capacity(cfg.model)
    return cfg


def _model_dimension(m):
    fam = m["family"]
    if fam in ("heisenberg", "ising"):
        d = int(round(2 * m.get("spin", 0.5) + 1))
        return d ** _n_sites(m)
    if fam == "fermion":
        return 4 ** len(m.get("eps", []))
    f = np.atleast_1d(m.get("f", [0.0]))
    return int(round(2 * m.get("spin", 0.5) + 1)) * (m.get("n_max", 8) + 1) ** len(f)


def _n_sites(m):
    if "L" in m:
        return m["L"]
    if "edges" in m:
        return 1 + max(max(int(e[0]), int(e[1])) for e in m["edges"])
    raise ConfigError("spin models need L or edges")


def _check_capacity(m):
    dim = _model_dimension(m)
    if dim > MAX_DIM:
        raise ConfigError(f"Hilbert-space dimension {dim} exceeds the cap {MAX_DIM}")


def build_model(m):
    """Model from its descriptor; capacity and contract failures become config errors."""
    try:
        fam = m["family"]
        if fam in ("heisenberg", "ising"):
            n = _n_sites(m)
            if "edges" in m:
                graph = CouplingGraph(n, tuple((int(i), int(j), float(c)) for i, j, c in m["edges"]))
            else:
                graph = CouplingGraph.chain(n, m.get("couplings", 1.0))
            builder = build_heisenberg if fam == "heisenberg" else build_ising
            return builder(graph, m.get("spin", 0.5))
        if fam == "fermion":
            return build_fermion(np.asarray(m["eps"]), np.asarray(m["V"]))
        return build_spin_boson(m["f"], m["omega"], m.get("n_max", 8), m.get("spin", 0.5))
    except KeyError as exc:
        raise ConfigError(f"model descriptor is missing {exc}") from None
    except (CapacityError, ContractError) as exc:
        raise ConfigError(str(exc)) from None


def build_protocol(p, horizon):
    try:
        prot = protocol_from_dict(p, horizon=(0.0, horizon))
    except KeyError as exc:
        raise ConfigError(f"protocol descriptor is missing {exc}") from None
    except ContractError as exc:
        raise ConfigError(str(exc)) from None
    if prot.horizon[1] < horizon:
        raise ConfigError(f"protocol ends at {prot.horizon[1]} before the horizon {horizon}")
    return prot


def tensor_dims(model):
    """Local dimensions of the tensor factors, in kron order."""
    if model.family == "fermion":
        return [2] * (2 * model.n_sites)
    if model.family == "spin-boson":
        k = len(model.extra["f"])
        return [model.local_dim] + [model.extra["n_max"] + 1] * k
    return [model.local_dim] * model.n_sites


def initial_state(desc, model, gmap=None):
    """State vector for an initial-state descriptor.

    ``product`` takes local basis indices per tensor factor (``factors``) or
    one index for all factors (``all``); index 0 is spin up, an empty fermion
    mode, or the boson vacuum. ``eigenstate`` picks eigenvector ``index`` of
    ``H̃`` at t = 0 (of ``H_0`` when no map is given).
    """
    dims = tensor_dims(model)
    kind = desc["kind"]
    if kind == "product":
        idx = desc.get("factors")
        if idx is None:
            idx = [desc.get("all", 0)] * len(dims)
        if len(idx) != len(dims) or any(i >= d for i, d in zip(idx, dims)):
            raise ConfigError(f"product state indices {idx} do not fit factors {dims}")
        psi = np.zeros(model.dimension, dtype=complex)
        psi[np.ravel_multi_index(tuple(idx), dims)] = 1.0
        return psi
    if kind == "eigenstate":
        h = gmap.h_tilde(0.0) if gmap is not None else model.static
        w, v = np.linalg.eigh(h)
        i = desc.get("index", 0)
        if i >= len(w):
            raise ConfigError(f"eigenstate index {i} out of range")
        return v[:, i].astype(complex)
    rng = np.random.default_rng(desc["seed"])
    psi = rng.normal(size=model.dimension) + 1j * rng.normal(size=model.dimension)
    return psi / np.linalg.norm(psi)
