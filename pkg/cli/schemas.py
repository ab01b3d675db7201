import math
import typing
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import config


class RunConfig(BaseModel):
    """Flat key = value run configuration; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="before")
    @classmethod
    def split_lists(cls, data):
        if not isinstance(data, dict):
            return data
        out = dict(data)
        for name, info in cls.model_fields.items():
            value = out.get(name)
            annotation = info.annotation
            if typing.get_origin(annotation) is typing.Union:
                annotation = next(a for a in typing.get_args(annotation) if a is not type(None))
            if isinstance(value, str) and typing.get_origin(annotation) in (list, List):
                out[name] = [v.strip() for v in value.split(",") if v.strip()]
        return out


class GridConfig(RunConfig):
    n: int = Field(2, description="Dimension, 2 or 3")
    N: int = Field(64, description="Points per axis")
    L: float = Field(8 * math.pi, description="Box side length")


class PotentialConfig(GridConfig):
    potential: Optional[str] = Field(None, description="CFLD file of V1; a synthetic potential otherwise")
    kind: Literal["gaussian", "bump", "singular", "zero"] = "gaussian"
    amplitude: float = 0.1
    sigma: float = 0.8
    radius: Optional[float] = Field(None, description="Bump or singular radius; defaults to L/8")
    alpha: float = 0.5
    q: str = Field("3/2", description="Declared integrability exponent")


class ExponentsConfig(RunConfig):
    n: int = 3
    q: str = "3/2"


class VerifyResolventConfig(GridConfig):
    n: int = 3
    N: int = 32
    estimate: Literal["krs", "refined", "both"] = "both"
    p: Optional[str] = Field(None, description="KRS exponent; q_n when unset")
    ladder: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    draws: int = Field(20, ge=1)
    bumps: int = Field(4, ge=1)
    width: Optional[float] = None
    eps_factor: float = Field(config.EPSILON_FACTOR, gt=0)
    slope_max: float = 0.1
    growth_max: float = 4.0


class StationaryConfig(PotentialConfig):
    lam: float = Field(1.0, gt=0)
    omega: Optional[List[float]] = Field(None, description="Unit direction; e_1 in n dimensions when unset")
    mode: Literal["nonendpoint", "endpoint"] = "nonendpoint"
    tol: float = Field(config.NEUMANN_TOL, gt=0)
    max_iter: int = Field(config.NEUMANN_MAX_ITER, ge=1)
    ladder: Optional[List[float]] = Field(None, description="Energies of a decay study")

    @model_validator(mode="after")
    def default_direction(self):
        if self.omega is None:
            self.omega = [1.0] + [0.0] * (self.n - 1)
        return self


class EvolveConfig(PotentialConfig):
    state: Optional[str] = Field(None, description="CFLD initial state; a Gaussian packet otherwise")
    packet_width: float = Field(1.0, gt=0)
    T: float = Field(1.0, gt=0)
    steps: Optional[int] = Field(None, ge=1)
    keep: int = Field(1, ge=1)
    refine: int = Field(0, ge=0, description="Levels of a grid-refinement study; 0 disables it")
    xi_band: Optional[float] = Field(None, gt=0, description="Record U_T on the input waves of this band")
    ladder: Optional[List[int]] = Field(None, description="Rungs of the recorded input waves")

    @model_validator(mode="after")
    def ladder_needs_band(self):
        if self.ladder is not None and self.xi_band is None:
            raise ValueError("ladder records data only together with xi_band")
        if self.ladder is not None and (not self.ladder or min(self.ladder) < 1):
            raise ValueError("ladder needs positive integer rungs")
        return self


class OrthogonalityConfig(PotentialConfig):
    potential2: Optional[str] = Field(None, description="CFLD file of V2; zero otherwise")
    packet_width: float = Field(1.0, gt=0)
    g_wavevector: Optional[List[float]] = Field(None, description="Wavevector of g; zero when unset")
    T: float = Field(1.0, gt=0)
    steps: int = Field(256, ge=1)
    keep: int = Field(1, ge=1)
    refine_factor: int = Field(4, ge=2)

    @model_validator(mode="after")
    def default_wavevector(self):
        if self.g_wavevector is None:
            self.g_wavevector = [0.0] * self.n
        return self


class ReconstructConfig(PotentialConfig):
    potential2: Optional[str] = None
    source: Literal["direct", "data"] = "direct"
    data: Optional[str] = Field(None, description="Table of recorded input and final-state CFLD pairs")
    xi_band: float = Field(4.0, gt=0)
    ladder: List[int] = Field(default_factory=lambda: [2, 4, 8, 16])
    mode: Literal["nonendpoint", "endpoint"] = "nonendpoint"
    extrapolate: bool = False
    T: float = Field(1.0, gt=0)
    steps: Optional[int] = Field(None, ge=1)
    tol: float = Field(config.NEUMANN_TOL, gt=0)

    @field_validator("ladder")
    @classmethod
    def positive_rungs(cls, v):
        if not v or min(v) < 1:
            raise ValueError("ladder needs positive integer rungs")
        return v

    @model_validator(mode="after")
    def data_needs_data_source(self):
        if self.data is not None and self.source != "data":
            raise ValueError("data is read only with source = data")
        return self


COMMAND_CONFIGS = {
    "exponents": ExponentsConfig,
    "verify-resolvent": VerifyResolventConfig,
    "stationary": StationaryConfig,
    "evolve": EvolveConfig,
    "orthogonality": OrthogonalityConfig,
    "reconstruct": ReconstructConfig,
}


# --------------------------------------------------
# CSV rows
# --------------------------------------------------
class ResolventRow(BaseModel):
    estimate: str
    n: int
    p: str
    lam: float
    epsilon: float
    ratio: float
    seed: int

    def cells(self):
        return (self.estimate, self.n, self.p, self.lam, self.epsilon, self.ratio, self.seed)


class OrthogonalityRow(BaseModel):
    case: str
    lhs_re: float
    lhs_im: float
    rhs_re: float
    rhs_im: float
    gap: float

    def cells(self):
        return (self.case, self.lhs_re, self.lhs_im, self.rhs_re, self.rhs_im, self.gap)
