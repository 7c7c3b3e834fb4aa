"""
Descriptions:
1. Run configuration models (pydantic, unknown fields rejected)
2. Named presets for the benchmark boundaries, observables, wavefunctions and KD bases
3. Builders that turn a validated RunConfig into domain objects (kets, ProtocolSpec,
   SamplerConfig, GridState)

Example config (weak-value):
    {
      "protocol": {"kind": "modified_weak", "xi": 1.0},
      "boundary": {"preset": "anomalous"},
      "observable": "sigma_z",
      "sampler": {"seed": 7, "total_shots": 30000, "repetitions": 10},
      "exact": false,
      "output": {"dir": "runs/weak_value"}
    }

Complex numbers are written as [re, im] pairs.
"""

import json
import math
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator, model_validator

import linalg
from exceptions import ConfigError
from framework import ProbeSetting
from protocols import (
    ConventionalWeak,
    ExpandedHilbert,
    ModifiedWeak,
    ModularValue,
    ProtocolSpec,
    StrongPauli,
    StrongProjector,
)
from sampling import SamplerConfig
from wavefunction import GridState, make_test_state

ComplexPair = tuple[float, float]

XI_KINDS = {"conventional_weak", "modified_weak", "modular_value"}
DEFAULT_TOTAL_SHOTS = 30000


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProtocolConfig(StrictModel):
    kind: Literal[
        "conventional_weak", "modified_weak", "strong_projector", "strong_pauli", "modular_value", "expanded_hilbert"
    ]
    xi: float | None = Field(default=None, ge=0)
    axis: Literal["x", "y", "z"] = "z"

    @field_validator("xi")
    @classmethod
    def _xi_positive(cls, xi: float | None, info: ValidationInfo):
        # the modular value is defined at xi = 0, every weak coupling needs xi > 0
        if xi == 0 and info.data.get("kind") != "modular_value":
            raise ValueError("xi must be greater than 0")
        return xi

    @model_validator(mode="after")
    def _xi_present(self):
        if self.kind in XI_KINDS and self.xi is None:
            raise ValueError(f"{self.kind} needs xi")
        return self


class BoundaryConfig(StrictModel):
    preset: Literal["anomalous", "plus_zero"] | None = None
    psi_i: list[ComplexPair] | None = None
    psi_f: list[ComplexPair] | None = None
    normalize: bool = False

    @model_validator(mode="after")
    def _one_source(self):
        explicit = self.psi_i is not None or self.psi_f is not None
        if (self.preset is None) == (not explicit):
            raise ValueError("give either a preset or both psi_i and psi_f")
        if explicit and (self.psi_i is None or self.psi_f is None):
            raise ValueError("explicit boundaries need both psi_i and psi_f")
        return self


class SamplerSection(StrictModel):
    seed: int = Field(default=0, ge=0, lt=2**64)
    shots: dict[Literal["X", "Y", "Z"], int] | None = None
    total_shots: int | None = Field(default=None, gt=0)
    repetitions: int = Field(default=1, gt=0)
    bootstrap: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _shots_positive(self):
        if self.shots is not None and self.total_shots is not None:
            raise ValueError("give shots or total_shots, not both")
        if self.shots is not None and any(m <= 0 for m in self.shots.values()):
            raise ValueError("shots must be positive")
        return self


class OutputConfig(StrictModel):
    dir: str = "runs"


class StateConfig(StrictModel):
    preset: Literal["gaussian64"] | None = None
    kind: Literal["gaussian", "two_peak", "random_smooth", "uniform"] | None = None
    n: int = Field(default=64, ge=2)
    params: dict[str, float] = Field(default_factory=dict)
    amps: list[ComplexPair] | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if sum(x is not None for x in (self.preset, self.kind, self.amps)) != 1:
            raise ValueError("give exactly one of preset, kind or amps")
        return self


class WavefunctionConfig(StrictModel):
    state: StateConfig = Field(default_factory=lambda: StateConfig(preset="gaussian64"))
    method: Literal["scan_free", "scanning", "compare"] = "scan_free"
    xi: float = Field(default=0.1, gt=0, le=math.pi / 2)
    target_fidelity: float = Field(default=0.95, ge=0, lt=1)
    repetitions: int = Field(default=20, gt=0)
    max_total_shots: int = Field(default=2**30, gt=0)


class KDConfig(StrictModel):
    rho_preset: Literal["ket0", "ket1", "plus", "plus_i", "maximally_mixed"] | None = "ket0"
    rho: list[list[ComplexPair]] | None = None
    dim: int = Field(default=2, ge=2)
    basis_a: Literal["Z", "X", "Y", "fourier"] = "Z"
    basis_b: Literal["Z", "X", "Y", "fourier"] = "X"


class RunConfig(StrictModel):
    protocol: ProtocolConfig | None = None
    boundary: BoundaryConfig = Field(default_factory=lambda: BoundaryConfig(preset="anomalous"))
    observable: Literal["sigma_x", "sigma_y", "sigma_z", "identity", "proj0", "proj1"] | list[list[ComplexPair]] = "sigma_z"
    xi_grid: list[float] | None = Field(default=None, min_length=1)
    sampler: SamplerSection = Field(default_factory=SamplerSection)
    exact: bool = False
    output: OutputConfig = Field(default_factory=OutputConfig)
    wavefunction: WavefunctionConfig = Field(default_factory=WavefunctionConfig)
    kd: KDConfig = Field(default_factory=KDConfig)


# --------------------------
# Loading
# --------------------------
def _field_of(error: ValidationError) -> str:
    first = error.errors()[0]
    loc = [str(part) for part in first.get("loc", ()) if not str(part).startswith("function-")]
    return ".".join(loc) or "config"


def validate_config(doc: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(doc)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(first.get("msg", "invalid config"), field=_field_of(exc)) from exc


def read_config_doc(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}", field="config")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc.msg} (line {exc.lineno})", field="config") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", field="config")
    return doc


# --------------------------
# Presets
# --------------------------
def anomalous_boundary() -> tuple:
    """sigma_z weak value -2 with overlap -1/2."""
    c, s = math.cos(math.pi / 3), math.sin(math.pi / 3)
    return linalg.ket([c, s]), linalg.ket([c, -s])


BOUNDARY_PRESETS = {
    "anomalous": anomalous_boundary,
    "plus_zero": lambda: (linalg.KET_PLUS.copy(), linalg.KET0.copy()),
}


def gaussian64() -> GridState:
    return make_test_state("gaussian", 64, x0=24, sigma=6, k=2 * math.pi * 3 / 64)


def _ket_from_pairs(pairs: list, normalize: bool = False) -> np.ndarray:
    return linalg.ket([complex(re, im) for re, im in pairs], normalize=normalize)


def _operator_from_pairs(rows: list) -> np.ndarray:
    return linalg.operator([[complex(re, im) for re, im in row] for row in rows])


def named_observable(name: str, dim: int) -> np.ndarray:
    if name in ("sigma_x", "sigma_y", "sigma_z"):
        if dim != 2:
            raise ConfigError(f"{name} needs a qubit boundary, got dim {dim}", field="observable")
        return linalg.PAULIS[name[-1]].copy()
    if name == "identity":
        return linalg.identity(dim)
    return linalg.projector(linalg.basis_ket(dim, 0 if name == "proj0" else 1))


def named_basis(name: str, dim: int) -> np.ndarray:
    """Columns are the basis kets."""
    if name == "Z":
        return linalg.identity(dim)
    if name == "fourier":
        return linalg.dagger(linalg.dft_matrix(dim))
    if dim != 2:
        raise ConfigError(f"basis {name} is defined for qubits only", field="kd.basis")
    if name == "X":
        return np.column_stack([linalg.KET_PLUS, linalg.KET_MINUS])
    return np.column_stack([linalg.KET_PLUS_I, linalg.KET_MINUS_I])


# --------------------------
# Builders
# --------------------------
def build_boundary(cfg: RunConfig) -> tuple:
    b = cfg.boundary
    if b.preset is not None:
        return BOUNDARY_PRESETS[b.preset]()
    return _ket_from_pairs(b.psi_i, b.normalize), _ket_from_pairs(b.psi_f, b.normalize)


def build_observable(cfg: RunConfig, dim: int) -> np.ndarray:
    if isinstance(cfg.observable, str):
        return named_observable(cfg.observable, dim)
    return _operator_from_pairs(cfg.observable)


def build_spec(cfg: RunConfig, xi: float | None = None) -> ProtocolSpec:
    if cfg.protocol is None:
        raise ConfigError("config has no protocol section", field="protocol")
    p = cfg.protocol
    xi = p.xi if xi is None else xi
    psi_i, psi_f = build_boundary(cfg)
    if p.kind == "strong_pauli":
        return ProtocolSpec(StrongPauli(p.axis), None, psi_i, psi_f)
    variant = {
        "conventional_weak": lambda: ConventionalWeak(xi),
        "modified_weak": lambda: ModifiedWeak(xi),
        "modular_value": lambda: ModularValue(xi),
        "strong_projector": StrongProjector,
        "expanded_hilbert": ExpandedHilbert,
    }[p.kind]()
    return ProtocolSpec(variant, build_observable(cfg, psi_i.size), psi_i, psi_f)


def build_sampler(cfg: RunConfig, settings: tuple) -> SamplerConfig:
    s = cfg.sampler
    if s.shots is not None:
        shots = {ProbeSetting(k): v for k, v in s.shots.items()}
        missing = [x.value for x in settings if x not in shots]
        if missing:
            raise ConfigError(f"no shot budget for settings {missing}", field="sampler.shots")
        return SamplerConfig(s.seed, {x: shots[x] for x in settings}, s.repetitions, s.bootstrap)
    total = DEFAULT_TOTAL_SHOTS if s.total_shots is None else s.total_shots
    return SamplerConfig.equal_split(s.seed, total, settings, s.repetitions, s.bootstrap)


def build_state(state: StateConfig) -> GridState:
    if state.preset == "gaussian64":
        return gaussian64()
    if state.kind is not None:
        params = dict(state.params)
        if "seed" in params:
            params["seed"] = int(params["seed"])
        return make_test_state(state.kind, state.n, **params)
    return GridState.from_amps([complex(re, im) for re, im in state.amps])


def build_kd(kd: KDConfig) -> tuple:
    if kd.rho is not None:
        rho = _operator_from_pairs(kd.rho)
    else:
        dim = kd.dim
        kets = {
            "ket0": lambda: linalg.basis_ket(dim, 0),
            "ket1": lambda: linalg.basis_ket(dim, 1),
            "plus": lambda: np.full(dim, 1 / math.sqrt(dim), dtype=complex),
            "plus_i": lambda: linalg.ket(np.exp(1j * math.pi / 2 * np.arange(dim)), normalize=True),
        }
        if kd.rho_preset == "maximally_mixed":
            rho = linalg.identity(dim) / dim
        else:
            rho = linalg.projector(kets[kd.rho_preset]())
    dim = rho.shape[0]
    return rho, named_basis(kd.basis_a, dim), named_basis(kd.basis_b, dim)
