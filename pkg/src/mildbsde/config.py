"""Experiment configuration: INI files with sections, presets, and defaults.

Schema (all keys optional unless noted):

    [experiment]
    preset = spin-chain | reaction-diffusion-1d   (required unless --preset given)
    seed = 1234                                   (required: reproducibility)
    out = runs/spin

    [model]          ; overrides forwarded to the preset spec, e.g.
    half_width = 2   ; spin-chain
    modes = 6        ; reaction-diffusion-1d

    [discretization]
    paths = 10000
    steps = 100
    noise_dim =      ; defaults to the model's state dimension
    basis_degree = 2
    basis_coords =   ; defaults to all noise coordinates
    ridge = 1e-8

    [solver]
    tol = / tol_outer = / max_iter = / min_iter = / max_outer =
    safety_margin = 1.2
    window_override =
    require_validated = true
    auto_refine = true

    [validation]
    suite = dissipativity,growth-lipschitz,smoothing-bound,interpolation-inequality,gronwall,gaussian-regression
    trials = 2000
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import BsdeProblem, ValidationError, build_preset
from .solver import SolverConfig
from .wiener import RegressionBasis, TimeGrid, WienerEnsemble, sample_ensemble

__all__ = ["ExperimentConfig", "load_config", "VALIDATION_SUITE"]

VALIDATION_SUITE = (
    "dissipativity",
    "growth-lipschitz",
    "smoothing-bound",
    "interpolation-inequality",
    "gronwall",
    "gaussian-regression",
)

_DISCRETIZATION_DEFAULTS = {
    "spin-chain": {"paths": 10000, "steps": 100},
    "reaction-diffusion-1d": {"paths": 4000, "steps": 80},
}


def _convert(text: str):
    text = text.strip()
    if text == "":
        return None
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if "," in text:
        parts = [p.strip() for p in text.split(",") if p.strip()]
        try:
            return [float(p) for p in parts]
        except ValueError:
            return parts
    return text


@dataclass
class ExperimentConfig:
    preset: str
    seed: int
    out_dir: str = "mildbsde-out"
    model_overrides: dict = field(default_factory=dict)
    paths: int | None = None
    steps: int | None = None
    noise_dim: int | None = None
    basis_degree: int = 2
    basis_coords: int | None = None
    ridge: float = 1e-8
    solver: SolverConfig = field(default_factory=SolverConfig)
    validation_suite: tuple = VALIDATION_SUITE
    validation_trials: int = 2000

    def __post_init__(self):
        if self.seed is None:
            raise ValidationError("config", "a seed is required (reproducibility contract)")

    # -- builders ----------------------------------------------------------
    def make_problem(self) -> BsdeProblem:
        return build_preset(self.preset, **self.model_overrides)

    def resolved_discretization(self, problem: BsdeProblem) -> tuple[int, int, int]:
        defaults = _DISCRETIZATION_DEFAULTS.get(self.preset, {"paths": 4000, "steps": 80})
        paths = self.paths if self.paths is not None else defaults["paths"]
        steps = self.steps if self.steps is not None else defaults["steps"]
        noise = self.noise_dim if self.noise_dim is not None else problem.noise_dim
        return paths, steps, noise

    def make_ensemble(self, problem: BsdeProblem) -> WienerEnsemble:
        paths, steps, noise = self.resolved_discretization(problem)
        grid = TimeGrid.uniform(problem.horizon, steps)
        return sample_ensemble(grid, noise, paths, self.seed)

    def make_basis(self) -> RegressionBasis:
        return RegressionBasis(
            degree=self.basis_degree, n_coords=self.basis_coords, ridge=self.ridge
        )

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "model_overrides": dict(self.model_overrides),
            "paths": self.paths,
            "steps": self.steps,
            "noise_dim": self.noise_dim,
            "basis_degree": self.basis_degree,
            "basis_coords": self.basis_coords,
            "ridge": self.ridge,
            "solver": self.solver.to_dict(),
            "validation_suite": list(self.validation_suite),
            "validation_trials": self.validation_trials,
        }


def load_config(path: str | Path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(str(path))
    if not read:
        raise ValidationError("config", f"cannot read config file {path}")
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    exp = {k: _convert(v) for k, v in sections.get("experiment", {}).items()}
    model = {k: _convert(v) for k, v in sections.get("model", {}).items()}
    disc = {k: _convert(v) for k, v in sections.get("discretization", {}).items()}
    solver_raw = {k: _convert(v) for k, v in sections.get("solver", {}).items()}
    val = {k: _convert(v) for k, v in sections.get("validation", {}).items()}

    preset = exp.get("preset")
    if preset is None:
        raise ValidationError("config", "[experiment] preset is required")
    seed = exp.get("seed")
    if seed is None:
        raise ValidationError("config", "[experiment] seed is required")

    if "coefficients" in model and isinstance(model["coefficients"], list):
        model["coefficients"] = np.asarray(model["coefficients"], dtype=float)

    solver = SolverConfig(
        tol=solver_raw.get("tol"),
        tol_outer=solver_raw.get("tol_outer"),
        max_iter=solver_raw.get("max_iter", 50),
        min_iter=solver_raw.get("min_iter", 2),
        max_outer=solver_raw.get("max_outer", 25),
        safety_margin=solver_raw.get("safety_margin", 1.2),
        window_override=solver_raw.get("window_override"),
        require_validated=solver_raw.get("require_validated", True),
        auto_refine_grid=solver_raw.get("auto_refine", True),
    )

    if "suite" not in val:
        suite_tuple = VALIDATION_SUITE
    else:
        suite = val["suite"]
        if suite is None:
            suite_tuple = ()  # explicitly empty selection
        elif isinstance(suite, list):
            suite_tuple = tuple(suite)
        elif isinstance(suite, str):
            suite_tuple = tuple(s.strip() for s in suite.split(",") if s.strip())
        else:
            suite_tuple = ()

    return ExperimentConfig(
        preset=str(preset),
        seed=int(seed),
        out_dir=str(exp.get("out", "mildbsde-out")),
        model_overrides=model,
        paths=disc.get("paths"),
        steps=disc.get("steps"),
        noise_dim=disc.get("noise_dim"),
        basis_degree=disc.get("basis_degree", 2),
        basis_coords=disc.get("basis_coords"),
        ridge=disc.get("ridge", 1e-8),
        solver=solver,
        validation_suite=suite_tuple,
        validation_trials=val.get("trials", 2000),
    )
