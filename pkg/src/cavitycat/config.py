"""Scenario documents (TOML) and their validation.

Frequencies in a scenario are ordinary frequencies in Hz; they are turned
into angular frequencies (multiplied by 2π) when model parameters are built.
Times are in seconds, phases in radians.

Example::

    protocol = "cat"

    [model]            # Hz
    delta1 = 2.0e6
    delta2 = 3.66e6
    omega_c = 2.0e4
    omega_rf = 1.0e5
    N = 10000

    [alpha]
    magnitude = 2.0
    phase = 0.0

    [sweep]
    parameter = "delta_t"
    start = 0.0
    stop = 1e-4
    num = 64

    [[outputs]]
    kind = "table"
    path = "cat.csv"
"""
from __future__ import annotations

import math
import re
import sys
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, field_validator, model_validator

from . import hilbert as hb
from .errors import ConfigParseError, ConfigValidationError
from .hamiltonians import DISPERSIVE_THRESHOLD, ModelParams, derive_params
from .evolution import LEAKAGE_TOL

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TWO_PI = 2.0 * math.pi

SWEEPABLE = {
    "delta_t",
    "t_star",
    "alpha_magnitude",
    "alpha_phase",
    "delta_prime",
    "t_r",
    "delta1",
    "delta2",
    "omega_c",
    "omega_rf",
    "N",
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _finite(v, name):
    if v is not None and not math.isfinite(v):
        raise ValueError(f"{name} must be finite")
    return v


class ModelSection(_Strict):
    delta1: float
    delta2: float
    omega_c: float = Field(ge=0)
    omega_rf: float = Field(ge=0)
    N: int = Field(ge=1)

    @field_validator("delta1", "delta2", "omega_c", "omega_rf")
    @classmethod
    def _is_finite(cls, v, info):
        return _finite(v, info.field_name)

    @field_validator("delta1")
    @classmethod
    def _nonzero(cls, v):
        if v == 0:
            raise ValueError("delta1 must be nonzero")
        return v


class AlphaSection(_Strict):
    magnitude: float = Field(ge=0)
    phase: float = 0.0

    @property
    def value(self) -> complex:
        return complex(self.magnitude * np.exp(1j * self.phase))


class CutoffSection(_Strict):
    atom_cutoff: Optional[int] = Field(default=None, ge=1)
    photon_cutoff: int = Field(default=1, ge=1)


class ToleranceSection(_Strict):
    dispersive_threshold: float = Field(default=DISPERSIVE_THRESHOLD, gt=0)
    leakage: float = Field(default=LEAKAGE_TOL, gt=0)


class SweepSection(_Strict):
    parameter: str
    values: Optional[list[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    num: Optional[int] = Field(default=None, ge=1)

    @field_validator("parameter")
    @classmethod
    def _known(cls, v):
        if v not in SWEEPABLE:
            raise ValueError(f"unknown sweep parameter {v!r}; choose from {sorted(SWEEPABLE)}")
        return v

    @model_validator(mode="after")
    def _expand(self):
        ranged = (self.start, self.stop, self.num)
        if self.values is None:
            if any(x is None for x in ranged):
                raise ValueError("sweep needs either values or start/stop/num")
            object.__setattr__(self, "values", [float(x) for x in np.linspace(self.start, self.stop, self.num)])
        elif any(x is not None for x in ranged):
            raise ValueError("give either values or start/stop/num, not both")
        if not self.values:
            raise ValueError("sweep values are empty")
        return self


class HPSection(_Strict):
    N_list: list[int] = Field(default_factory=lambda: [50, 100, 200, 400])
    t: Optional[float] = None


class GridSection(_Strict):
    kind: Literal["wigner", "husimi"] = "wigner"
    state: Literal["cat", "compass", "coherent"] = "cat"
    branch: int = Field(default=2, ge=1, le=2)
    half_width: Optional[float] = Field(default=None, gt=0)
    points: int = Field(default=201, ge=3)


class OutputSpec(_Strict):
    kind: Literal["report", "table", "grid"]
    path: str


class ScenarioConfig(_Strict):
    """Validated scenario. ``cutoffs.atom_cutoff`` is filled from the cutoff rule when absent."""

    protocol: Literal["cat", "detection", "compass", "hp_convergence", "wigner"]
    model: ModelSection
    alpha: AlphaSection
    delta_prime: float = 0.0
    t_r: float = Field(default=1.0, gt=0)
    delta_t: float = Field(default=0.0, ge=0)
    t_star: Optional[float] = Field(default=None, ge=0)
    seed_branch: int = Field(default=1, ge=1, le=2)
    switching: Literal["adiabatic", "sudden"] = "adiabatic"
    cutoffs: CutoffSection = CutoffSection()
    tolerances: ToleranceSection = ToleranceSection()
    sweep: Optional[SweepSection] = None
    hp: HPSection = HPSection()
    grid: GridSection = GridSection()
    outputs: list[OutputSpec] = Field(default_factory=list)
    _auto_cutoff: bool = PrivateAttr(default=False)

    @field_validator("delta_prime")
    @classmethod
    def _dp_finite(cls, v):
        return _finite(v, "delta_prime")

    @model_validator(mode="after")
    def _fill_defaults(self):
        if self.cutoffs.atom_cutoff is None:
            cut = CutoffSection(atom_cutoff=hb.default_cutoff(self.alpha.value), photon_cutoff=self.cutoffs.photon_cutoff)
            object.__setattr__(self, "cutoffs", cut)
            self._auto_cutoff = True
        return self

    @property
    def auto_cutoff(self) -> bool:
        """True when the atom cutoff came from the cutoff rule rather than the document."""
        return self._auto_cutoff

    # ---- derived quantities -------------------------------------------

    def params(self) -> ModelParams:
        m = self.model
        return derive_params(TWO_PI * m.delta1, TWO_PI * m.delta2, TWO_PI * m.omega_c, TWO_PI * m.omega_rf, m.N)

    @property
    def delta_prime_rad(self) -> float:
        return TWO_PI * self.delta_prime

    def runs(self) -> list:
        """One config per sweep point (a single run without a sweep)."""
        if self.sweep is None:
            return [self]
        return [self.with_value(self.sweep.parameter, v) for v in self.sweep.values]

    def with_value(self, name: str, value: float) -> "ScenarioConfig":
        data = self.model_dump()
        data["sweep"] = None
        if name in ("delta1", "delta2", "omega_c", "omega_rf", "N"):
            data["model"][name] = int(value) if name == "N" else value
        elif name == "alpha_magnitude":
            data["alpha"]["magnitude"] = value
        elif name == "alpha_phase":
            data["alpha"]["phase"] = value
        else:
            data[name] = value
        if self.auto_cutoff:
            data["cutoffs"]["atom_cutoff"] = None
        return _build(data)


def _build(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigValidationError(_describe(exc)) from None


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<document>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a TOML scenario.

    Raises
    ------
    ConfigParseError
        Malformed TOML; the message carries the line and column.
    ConfigValidationError
        Unknown keys or invalid values; the message names the field.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        msg = str(exc)
        if not re.search(r"line \d+", msg):
            msg += " (line unknown)"
        raise ConfigParseError(msg) from None
    return _build(data)


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
