"""Flat, typed key-value run configuration.

A config file holds one ``section.key = value`` assignment per line; ``#``
starts a comment.  Unknown keys are rejected and every value is checked
against the type of its default.  Times (``time.t_max``, ``integrator.dt``)
are given in rescaled units ``g1 * t`` where ``g1`` is ``hamiltonian.g1``
(or 1 when that is zero).

Example::

    hamiltonian.variant = rotating-wave
    hamiltonian.g2 = 2.1
    bath.M = 10
    grid.N = 101
    time.t_max = 3
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .baths import BathSpec, parse_bath
from .channels import ThermalSampler
from .dynamics import GridInit, IntegratorConfig
from .hamiltonian import VARIANTS, HamiltonianSpec
from .hilbert import basis_state

SWEEP_PARAMETERS = {"g2": "hamiltonian.g2", "beta": "temperature.beta", "N": "grid.N", "comp": "grid.comp"}

DEFAULTS: dict[str, object] = {
    "seed": 0,
    "hamiltonian.variant": "rotating-wave",
    "hamiltonian.epsilon": 0.0,
    "hamiltonian.delta1": 0.0,
    "hamiltonian.delta2": 0.0,
    "hamiltonian.g1": 1.0,
    "hamiltonian.g2": 1.9,
    "hamiltonian.pauli_plus": "half",
    "hamiltonian.bath_file": "",
    "bath.kind": "linear",
    "bath.M": 10,
    "bath.spacing": 0.1,
    "bath.kondo": 0.09,
    "bath.omega_c": 2.5,
    "bath.omega_max": 0.0,
    "grid.N": 101,
    "grid.comp": 8.0,
    "grid.conjugate_pairs": True,
    "integrator.method": "rk4",
    "integrator.dt": 0.02,
    "integrator.abs_tol": 1e-8,
    "integrator.rel_tol": 1e-6,
    "integrator.gram_reg": 1e-8,
    "time.t_max": 3.0,
    "time.output_stride": 5,
    "temperature.beta": math.inf,
    "temperature.N_T": 64,
    "sweep.parameter": "g2",
    "sweep.values": (),
    "channel.inputs": "overlap",
    "channel.dump": False,
    "simulate.initial": "4",
    "oracle.n_max": 2,
    "oracle.n_total": 2,
    "oracle.bound": 0.02,
    "oracle.max_dim": 12000,
}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key."""


def _coerce(key: str, raw):
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            s = str(raw).strip().lower()
            if s in ("true", "yes", "1"):
                return True
            if s in ("false", "no", "0"):
                return False
            raise ValueError(f"expected a boolean, got {raw!r}")
        if isinstance(default, int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(f"expected an integer, got {raw!r}")
            return int(str(raw).strip()) if not isinstance(raw, (int, float)) else int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            if isinstance(raw, str):
                return tuple(float(x) for x in raw.replace(",", " ").split())
            return tuple(float(x) for x in raw)
        return str(raw).strip()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return str(value)


class SimConfig:
    """Resolved run configuration; behaves like a read-only mapping of keys."""

    def __init__(self, values: dict | None = None, base_dir: str | Path | None = None):
        merged = dict(DEFAULTS)
        for key, raw in (values or {}).items():
            if key not in DEFAULTS:
                raise ConfigError(f"{key}: unknown configuration key")
            merged[key] = _coerce(key, raw)
        self._v = merged
        self.base_dir = Path(base_dir) if base_dir is not None else None
        self._validate()

    # ---- construction
    @classmethod
    def from_text(cls, text: str, base_dir=None) -> "SimConfig":
        vals = {}
        for n, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {n}: expected 'key = value', got {line!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            vals[k] = v
        return cls(vals, base_dir)

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        path = Path(path)
        return cls.from_text(path.read_text(), path.parent)

    @classmethod
    def from_header(cls, text: str) -> "SimConfig":
        """Recover the configuration from the ``#`` header of an emitted CSV."""
        body = []
        for line in text.splitlines():
            if not line.startswith("#"):
                break
            body.append(line[1:])
        return cls.from_text("\n".join(body))

    def with_overrides(self, overrides: dict) -> "SimConfig":
        vals = dict(self._v)
        for k, v in overrides.items():
            if k not in DEFAULTS:
                raise ConfigError(f"{k}: unknown configuration key")
            vals[k] = v
        return SimConfig(vals, self.base_dir)

    def with_sets(self, assignments) -> "SimConfig":
        """Apply ``key=value`` strings (as given to ``--set``)."""
        over = {}
        for a in assignments:
            if "=" not in a:
                raise ConfigError(f"--set expects key=value, got {a!r}")
            k, v = (s.strip() for s in a.split("=", 1))
            over[k] = v
        return self.with_overrides(over)

    # ---- mapping access
    def __getitem__(self, key):
        return self._v[key]

    def __eq__(self, other):
        return isinstance(other, SimConfig) and self._v == other._v

    def __repr__(self):
        return f"SimConfig({len(self._v)} keys, seed={self['seed']})"

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self._v.items())

    def header(self) -> str:
        return "".join(f"# {line}\n" for line in self.to_text().splitlines())

    # ---- validation
    def _validate(self):
        v = self._v

        def need(ok, key, msg):
            if not ok:
                raise ConfigError(f"{key}: {msg} (got {v[key]!r})")

        need(0 <= v["seed"] < 2**64, "seed", "must be an unsigned 64-bit integer")
        need(v["hamiltonian.variant"] in VARIANTS, "hamiltonian.variant", f"must be one of {VARIANTS}")
        need(v["hamiltonian.pauli_plus"] in ("half", "full"), "hamiltonian.pauli_plus", "must be 'half' or 'full'")
        need(v["bath.kind"] in ("linear", "degenerate-double", "ohmic"), "bath.kind",
             "must be linear, degenerate-double or ohmic")
        need(v["bath.M"] >= 1, "bath.M", "must be >= 1")
        need(v["grid.N"] >= 1, "grid.N", "must be >= 1")
        need(v["grid.comp"] > 0, "grid.comp", "must be positive")
        need(v["integrator.method"] in ("rk4", "rk45"), "integrator.method", "must be rk4 or rk45")
        need(v["integrator.dt"] > 0, "integrator.dt", "must be positive")
        need(0 <= v["integrator.gram_reg"] <= 1e-3, "integrator.gram_reg", "must lie in [0, 1e-3]")
        need(v["time.t_max"] > 0, "time.t_max", "must be positive")
        need(v["time.output_stride"] >= 1, "time.output_stride", "must be >= 1")
        need(v["temperature.beta"] > 0, "temperature.beta", "must be positive (inf for zero temperature)")
        need(v["temperature.N_T"] >= 1, "temperature.N_T", "must be >= 1")
        need(v["sweep.parameter"] in SWEEP_PARAMETERS, "sweep.parameter",
             f"must be one of {sorted(SWEEP_PARAMETERS)}")
        need(v["channel.inputs"] in ("overlap", "full", "pairs"), "channel.inputs", "must be overlap, full or pairs")
        need(v["oracle.n_max"] >= 1, "oracle.n_max", "must be >= 1")
        need(v["oracle.n_total"] >= 0, "oracle.n_total", "must be >= 0 (0 disables the total cap)")
        need(v["oracle.bound"] > 0, "oracle.bound", "must be positive")
        self.qubit_state()  # validates simulate.initial

    # ---- builders
    @property
    def time_unit(self) -> float:
        """Reference coupling ``g1`` converting rescaled to physical time."""
        g1 = abs(self["hamiltonian.g1"])
        return g1 if g1 > 0 else 1.0

    def output_times(self) -> np.ndarray:
        """Rescaled output times ``0, s*dt, 2*s*dt, ...`` up to ``t_max``."""
        h = self["integrator.dt"] * self["time.output_stride"]
        n = int(math.floor(self["time.t_max"] / h + 1e-9))
        return h * np.arange(n + 1)

    def physical_times(self) -> np.ndarray:
        return self.output_times() / self.time_unit

    def bath_spec(self) -> BathSpec:
        p = {"spacing": self["bath.spacing"], "kondo": self["bath.kondo"], "omega_c": self["bath.omega_c"]}
        if self["bath.omega_max"] > 0:
            p["omega_max"] = self["bath.omega_max"]
        return BathSpec(self["bath.kind"], self["bath.M"], p)

    def modes(self):
        """``(frequencies, couplings)`` of the configured mode set."""
        path = self["hamiltonian.bath_file"]
        if path:
            p = Path(path)
            if not p.is_absolute() and self.base_dir is not None:
                p = self.base_dir / p
            try:
                return parse_bath(p.read_text())
            except (OSError, ValueError) as exc:
                raise ConfigError(f"hamiltonian.bath_file: {exc}") from None
        try:
            w, g = self.bath_spec().build()
        except ValueError as exc:
            raise ConfigError(f"bath: {exc}") from None
        if g is None:
            g = np.column_stack([np.full_like(w, self["hamiltonian.g1"]), np.full_like(w, self["hamiltonian.g2"])])
        return w, g

    def hamiltonian(self) -> HamiltonianSpec:
        w, g = self.modes()
        return HamiltonianSpec(self["hamiltonian.variant"], self["hamiltonian.epsilon"],
                               (self["hamiltonian.delta1"], self["hamiltonian.delta2"]), w, g,
                               pauli_plus=self["hamiltonian.pauli_plus"])

    def grid(self) -> GridInit:
        return GridInit(self["grid.N"], self["grid.comp"], self["grid.conjugate_pairs"], self["seed"])

    def integrator(self) -> IntegratorConfig:
        """Integrator settings with the step converted to physical time."""
        return IntegratorConfig(self["integrator.dt"] / self.time_unit, self["integrator.method"],
                                self["integrator.abs_tol"], self["integrator.rel_tol"], self["integrator.gram_reg"])

    def sampler(self) -> ThermalSampler | None:
        if math.isinf(self["temperature.beta"]):
            return None
        w = self.modes()[0]
        return ThermalSampler(self["temperature.beta"], w, self["temperature.N_T"], self["seed"])

    def qubit_state(self) -> np.ndarray:
        """``simulate.initial``: a basis label 1..4 or four comma-separated complex amplitudes."""
        raw = self["simulate.initial"]
        try:
            parts = [p for p in raw.replace(" ", "").split(",") if p]
            if len(parts) == 1:
                return basis_state(int(parts[0]))
            if len(parts) != 4:
                raise ValueError("expected one label or four amplitudes")
            q = np.array([complex(p.replace("i", "j")) for p in parts])
            nrm = np.linalg.norm(q)
            if nrm == 0:
                raise ValueError("amplitudes are all zero")
            return q / nrm
        except ValueError as exc:
            raise ConfigError(f"simulate.initial: {exc}") from None

    def sweep_key(self) -> str:
        return SWEEP_PARAMETERS[self["sweep.parameter"]]
