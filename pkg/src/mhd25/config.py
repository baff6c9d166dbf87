"""Experiment configuration: JSON schema, validation, and shipped presets."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .initial import InitialDataError, InitialSpec
from .grid import Grid, GridError
from .solver import SolverConfig, SolverConfigError
from .system import ParameterError, Params

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema_version", "grid", "params", "solver", "initial", "diagnostics"}


class ConfigError(ValueError):
    """Unparseable or invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    grid: Grid
    params: Params
    solver: SolverConfig
    initial: InitialSpec
    sigma: float = 1.0
    gamma_list: tuple[float, ...] = (0.0,)
    fit_window: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "grid": {"n": self.grid.n, "length": self.grid.length},
            "params": self.params.to_dict(),
            "solver": self.solver.to_dict(),
            "initial": self.initial.to_dict(),
            "diagnostics": {
                "sigma": self.sigma,
                "gamma_list": list(self.gamma_list),
                "fit_window": list(self.fit_window) if self.fit_window else None,
            },
        }


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a JSON object")
    _require_keys(raw, _TOP_KEYS, "configuration root")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}"
        )
    try:
        gsec = dict(raw["grid"])
        _require_keys(gsec, {"n", "length", "length_over_pi"}, "grid")
        if "length_over_pi" in gsec:
            if "length" in gsec:
                raise ConfigError("give grid.length or grid.length_over_pi, not both")
            gsec["length"] = float(gsec.pop("length_over_pi")) * np.pi
        grid = Grid(int(gsec["n"]), float(gsec["length"]))

        psec = dict(raw.get("params", {}))
        _require_keys(psec, {"mu", "lam", "c_v", "kappa", "R"}, "params")
        params = Params(**{k: float(v) for k, v in psec.items()})

        ssec = dict(raw["solver"])
        _require_keys(
            ssec,
            {
                "dt",
                "t_end",
                "formulation",
                "dealias",
                "snapshot_stride",
                "diag_stride",
                "seed",
                "linear_only",
                "halt_on_smallness",
            },
            "solver",
        )
        solver = SolverConfig(**ssec)

        isec = dict(raw.get("initial", {}))
        _require_keys(
            isec,
            {
                "kind",
                "amplitude",
                "spectral_slope",
                "seed",
                "band",
                "mode",
                "calibrate_x0",
                "path",
            },
            "initial",
        )
        if isec.get("band") is not None:
            isec["band"] = tuple(float(v) for v in isec["band"])
        if isec.get("mode") is not None:
            isec["mode"] = tuple(int(v) for v in isec["mode"])
        initial = InitialSpec(**isec)

        dsec = dict(raw.get("diagnostics", {}))
        _require_keys(dsec, {"sigma", "gamma_list", "fit_window"}, "diagnostics")
        sigma = float(dsec.get("sigma", 1.0))
        gamma_list = tuple(float(g) for g in dsec.get("gamma_list", [0.0]))
        fw = dsec.get("fit_window")
        fit_window = (float(fw[0]), float(fw[1])) if fw else None
    except KeyError as exc:
        raise ConfigError(f"missing required configuration key: {exc}") from exc
    except (TypeError, ValueError, GridError, ParameterError, SolverConfigError, InitialDataError) as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(grid, params, solver, initial, sigma, gamma_list, fit_window)


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def preset_names() -> list[str]:
    pkg = resources.files("mhd25") / "presets"
    return sorted(p.name.removesuffix(".json") for p in pkg.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> ExperimentConfig:
    pkg = resources.files("mhd25") / "presets" / f"{name}.json"
    try:
        raw = json.loads(pkg.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from exc
    return config_from_dict(raw)
