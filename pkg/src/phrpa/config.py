"""Run configuration: one JSON document plus ``key=value`` overrides."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError, model_validator

from .errors import ConfigError

__all__ = ["RunConfig", "load_config", "apply_overrides", "ALIGN_MARGIN"]

#: Required distance (bohr) between the outermost nucleus and the box edge.
ALIGN_MARGIN = 25.0


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Section):
    half_extent: PositiveFloat = 45.0
    n_points: int = Field(451, ge=3)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / (self.n_points - 1)


class PotentialConfig(_Section):
    kind: Literal["soft-coulomb", "gaussian-well"] = "soft-coulomb"
    charge: float = Field(1.0, ge=0.0)
    softening: PositiveFloat = 1.0


class InteractionConfig(_Section):
    softening: PositiveFloat = 1.0
    # multiplies w; 0 switches the interaction off
    scale: float = Field(1.0, ge=0.0)


class QuadratureConfig(_Section):
    n_nodes: int = Field(64, ge=4)
    scale: PositiveFloat = 1.0
    refine: bool = True


class LadderConfig(_Section):
    R_values: list[float] = Field(default_factory=lambda: [6.0, 8.0, 12.0, 16.0, 20.0])


class Tolerances(_Section):
    eig: PositiveFloat = 1e-10
    quad: PositiveFloat = 1e-6
    residual: PositiveFloat = 1e-8


class OracleConfig(_Section):
    grid: GridConfig = Field(default_factory=lambda: GridConfig(half_extent=45.2, n_points=227))
    R_values: list[float] = Field(default_factory=lambda: [6.0, 8.0, 12.0, 16.0, 20.0])
    pair_grid: GridConfig = Field(default_factory=lambda: GridConfig(half_extent=10.0, n_points=101))
    pair_R: float = Field(1.0, ge=0.0)
    tol: PositiveFloat = 1e-8

    @model_validator(mode="before")
    @classmethod
    def _merge_grid_defaults(cls, data: Any) -> Any:
        # a partial grid section fills in from this section's defaults, not GridConfig's
        if isinstance(data, dict):
            data = dict(data)
            for name in ("grid", "pair_grid"):
                part = data.get(name)
                if isinstance(part, dict):
                    base = cls.model_fields[name].default_factory().model_dump()
                    data[name] = {**base, **part}
        return data


class VerifyConfig(_Section):
    backend_R: float = Field(2.0, ge=0.0)
    backend_omegas: list[float] = Field(default_factory=lambda: [0.0, 0.1, 1.0, 10.0])
    split_R: float = Field(6.0, ge=0.0)
    hs_ladder: list[float] = Field(default_factory=lambda: [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0])
    sherman_morrison_trials: int = Field(100, ge=1)
    log_lemma_trials: int = Field(500, ge=1)
    rank1_trials: int = Field(30, ge=1)


class DebugConfig(_Section):
    # replaces the prefactor of the spectral backend and of the direct E_c
    fault_prefactor: Optional[float] = None


def _check_alignment(name: str, R_values: list[float], grid: GridConfig) -> None:
    dx = grid.spacing
    for R in R_values:
        ratio = R / dx
        if abs(ratio - round(ratio)) > 1e-8 * max(1.0, abs(ratio)):
            raise ValueError(f"{name}: R={R} is not a multiple of the grid spacing {dx}")
    if R_values and grid.half_extent < max(R_values) + ALIGN_MARGIN:
        raise ValueError(
            f"{name}: half_extent {grid.half_extent} must be >= max R + {ALIGN_MARGIN} = {max(R_values) + ALIGN_MARGIN}"
        )


class RunConfig(_Section):
    grid: GridConfig = Field(default_factory=GridConfig)
    potential: PotentialConfig = Field(default_factory=PotentialConfig)
    interaction: InteractionConfig = Field(default_factory=InteractionConfig)
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    ladder: LadderConfig = Field(default_factory=LadderConfig)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    verify: VerifyConfig = Field(default_factory=VerifyConfig)
    debug: DebugConfig = Field(default_factory=DebugConfig)
    seed: int = 20240229
    nuclear_repulsion: bool = True
    threads: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _consistency(self) -> "RunConfig":
        for name, g in (("grid", self.grid), ("oracle.grid", self.oracle.grid), ("oracle.pair_grid", self.oracle.pair_grid)):
            if g.n_points % 2 == 0:
                raise ValueError(f"{name}.n_points must be odd so that x = 0 is a grid point")
        R = self.ladder.R_values
        if not R:
            raise ValueError("ladder.R_values is empty")
        if any(b <= a for a, b in zip(R, R[1:])):
            raise ValueError("ladder.R_values must be strictly increasing")
        if min(R) < 0:
            raise ValueError("ladder.R_values must be nonnegative")
        _check_alignment("ladder", R, self.grid)
        _check_alignment("verify", [self.verify.backend_R, self.verify.split_R], self.grid)
        if not self.oracle.R_values:
            raise ValueError("oracle.R_values is empty")
        _check_alignment("oracle", sorted(self.oracle.R_values), self.oracle.grid)
        if self.oracle.grid.n_points**2 > 100_000:
            raise ValueError("oracle.grid exceeds the two-electron size budget n^2 <= 1e5")
        if self.oracle.pair_grid.n_points > 120:
            raise ValueError("oracle.pair_grid.n_points must be <= 120")
        pr = self.oracle.pair_R / self.oracle.pair_grid.spacing
        if abs(pr - round(pr)) > 1e-8 * max(1.0, pr):
            raise ValueError("oracle.pair_R is not a multiple of the pair grid spacing")
        return self


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.key=value`` overrides; values are parsed as JSON when possible."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"override {item!r} has an empty key")
        node = data
        for p in parts[:-1]:
            child = node.get(p)
            if child is None:
                child = node[p] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"override {item!r}: {p} is not a section")
            node = child
        node[parts[-1]] = _parse_value(raw)
    return data


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    """Read the JSON config (defaults when ``path`` is None), apply overrides, validate."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
    data = apply_overrides(data, list(overrides or []))
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
