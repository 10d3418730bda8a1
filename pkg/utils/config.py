"""
Experiment configuration: built-in defaults < environment (.env) < TOML file < CLI flags.
"""
import logging
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import toml
from dotenv import find_dotenv, load_dotenv

from operators.exceptions import ConfigValidationError
from operators.pnorm import DEFAULT_SEED
from utils.validators import DEFAULT_MEM_CAP, grid_points

logger = logging.getLogger(__name__)

EXPERIMENTS = (
    "dimscan",
    "factor-check",
    "contraction",
    "sector-sup",
    "hermite-check",
    "eps-limit",
    "square-function",
    "ddstar-check",
)
SETTINGS = ("cyclic", "hermite")
MEASURES = ("g0", "lazy")

ENV_KEYS = {
    "seed": "RIESZ_SEED",
    "mem_cap": "RIESZ_MEM_CAP",
    "jobs": "RIESZ_JOBS",
}

LIST_KEYS = ("experiment", "K", "d", "N", "p", "r", "sigma", "epsilon", "t", "phi")


@dataclass
class ExperimentConfig:
    experiment: List[str] = field(default_factory=lambda: ["dimscan"])
    setting: str = "cyclic"
    K: List[int] = field(default_factory=lambda: [4])
    d: List[int] = field(default_factory=lambda: [1, 2, 3])
    N: List[int] = field(default_factory=lambda: [8])
    p: List[float] = field(default_factory=lambda: [2.0])
    # axes to scan; an empty list means every axis 1..d
    r: List[int] = field(default_factory=lambda: [1])
    sigma: List[float] = field(default_factory=lambda: [0.5])
    g0: int = 1
    measure: str = "g0"
    epsilon: List[float] = field(default_factory=lambda: [1.0, 0.1, 0.01, 0.001])
    t: List[float] = field(default_factory=lambda: [0.1, 1.0, 10.0])
    phi: List[float] = field(default_factory=lambda: [math.pi / 4])
    restarts: int = 16
    seed: int = DEFAULT_SEED
    tol: float = 1e-9
    maxiter: int = 1000
    samples: int = 100
    quad_nodes: Optional[int] = None
    out: str = "results/riesz.csv"
    mem_cap: int = DEFAULT_MEM_CAP
    jobs: int = 1

    @classmethod
    def from_sources(cls, path: Optional[Union[str, Path]] = None,
                     overrides: Optional[Mapping[str, Any]] = None,
                     env_file: Optional[str] = None) -> "ExperimentConfig":
        """Layer the sources and validate the result"""
        values: Dict[str, Any] = {}
        values.update(_environment(env_file))
        if path is not None:
            values.update(_read_file(path))
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})

        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigValidationError(f"unknown configuration keys: {', '.join(unknown)}")

        config = cls(**{k: _normalise(k, v) for k, v in values.items()})
        config.validate()
        logger.info(f"Configuration: experiments={config.experiment} setting={config.setting} seed={config.seed}")
        return config

    def axes(self, d: int) -> List[int]:
        return list(range(1, d + 1)) if not self.r else [r for r in self.r if r <= d]

    def nodes_for(self, N: int) -> int:
        return self.quad_nodes if self.quad_nodes is not None else 4 * N

    def validate(self) -> "ExperimentConfig":
        """Reject the configuration before anything is allocated"""
        problems: List[str] = []

        for name in self.experiment:
            if name not in EXPERIMENTS:
                problems.append(f"unknown experiment {name!r}")
        if not self.experiment:
            problems.append("no experiment selected")
        if self.setting not in SETTINGS:
            problems.append(f"unknown setting {self.setting!r}")
        if self.measure not in MEASURES:
            problems.append(f"unknown measure {self.measure!r}")

        for key, lower in (("K", 2), ("d", 1), ("N", 1)):
            values = getattr(self, key)
            if not values:
                problems.append(f"{key} must not be empty")
            if any(isinstance(v, bool) or not isinstance(v, int) or v < lower for v in values):
                problems.append(f"every {key} must be an integer >= {lower}")
        if any(isinstance(v, bool) or not isinstance(v, int) or v < 1 for v in self.r):
            problems.append("axes r must be integers >= 1")

        if not self.p:
            problems.append("p must not be empty")
        for p in self.p:
            if math.isnan(p) or p < 1:
                problems.append(f"exponent p = {p} is below 1")
        if any(not (s > 0 and math.isfinite(s)) for s in self.sigma):
            problems.append("sigma must be positive")
        if any(not (e >= 0 and math.isfinite(e)) for e in self.epsilon):
            problems.append("epsilon must be non-negative")
        if any(not (t >= 0 and math.isfinite(t)) for t in self.t):
            problems.append("t must be non-negative")
        if any(not 0 < phi <= math.pi / 2 for phi in self.phi):
            problems.append("sector angles phi must lie in (0, pi/2]")

        for key, lower in (("restarts", 1), ("maxiter", 1), ("samples", 1), ("jobs", 1), ("mem_cap", 1)):
            if getattr(self, key) < lower:
                problems.append(f"{key} must be >= {lower}")
        if not self.tol > 0:
            problems.append("tol must be positive")
        if self.quad_nodes is not None and self.quad_nodes < 1:
            problems.append("quad_nodes must be positive")

        problems.extend(self._experiment_problems())
        problems.extend(self._budget_problems())

        if problems:
            raise ConfigValidationError("; ".join(problems))
        return self

    def _experiment_problems(self) -> List[str]:
        problems = []
        if self.setting == "cyclic" and self.measure == "g0":
            for K in self.K:
                if math.gcd(self.g0, K) != 1:
                    problems.append(f"g0 = {self.g0} does not generate Z_{K}")
        if "square-function" in self.experiment and any(math.isinf(p) for p in self.p):
            problems.append("square-function needs finite p")
        if self.setting == "hermite":
            if "contraction" in self.experiment and any(p != 2 for p in self.p):
                problems.append("hermite contraction is measured in coefficient space, so only p = 2")
            if {"ddstar-check", "square-function"} & set(self.experiment):
                problems.append("ddstar-check and square-function live on the cyclic setting")
            if "dimscan" in self.experiment and any(math.isinf(p) for p in self.p):
                problems.append("hermite dimscan needs finite p")
            for N in self.N:
                if any(p != 2 for p in self.p) and self.nodes_for(N) < 2 * N:
                    problems.append(f"quad_nodes must be at least 2N = {2 * N}")
        return problems

    def _budget_problems(self) -> List[str]:
        problems = []
        hermite = self.setting == "hermite"
        # hermite-check runs on Hermite truncations whatever the setting
        truncations = hermite or "hermite-check" in self.experiment
        grids = not hermite and set(self.experiment) - {"hermite-check"}
        for d in self.d:
            if grids:
                for K in self.K:
                    if grid_points(K, d) > self.mem_cap:
                        problems.append(f"K^d = {K}^{d} exceeds the memory cap {self.mem_cap}")
            if truncations:
                for N in self.N:
                    if grid_points(N + 1, d) > self.mem_cap:
                        problems.append(f"(N+1)^d = {N + 1}^{d} exceeds the memory cap {self.mem_cap}")
            if hermite:
                for N in self.N:
                    if any(p != 2 for p in self.p) and grid_points(self.nodes_for(N), d) > self.mem_cap:
                        problems.append(f"quadrature grid {self.nodes_for(N)}^{d} exceeds the memory cap {self.mem_cap}")
        return problems


def _environment(env_file: Optional[str]) -> Dict[str, Any]:
    load_dotenv(env_file or find_dotenv(usecwd=True))
    values = {}
    for key, variable in ENV_KEYS.items():
        raw = os.getenv(variable)
        if raw:
            try:
                values[key] = int(raw)
            except ValueError:
                raise ConfigValidationError(f"{variable} must be an integer, got {raw!r}")
    return values


def _read_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        return dict(toml.load(path))
    except FileNotFoundError:
        raise ConfigValidationError(f"configuration file {path} does not exist")
    except toml.TomlDecodeError as e:
        raise ConfigValidationError(f"configuration file {path} is not valid TOML: {e}")


def _as_number(key: str, value: Any, kind):
    try:
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigValidationError(f"{key} has a non-numeric entry {value!r}")


def _normalise(key: str, value: Any) -> Any:
    """Coerce TOML/CLI values into the field types; list keys accept scalars too"""
    if key in LIST_KEYS and not isinstance(value, (list, tuple)):
        value = [value]
    if key == "experiment":
        return [str(v) for v in value]
    if key in ("K", "d", "N", "r"):
        return [_as_number(key, v, int) for v in value]
    if key in ("p", "sigma", "epsilon", "t", "phi"):
        # float() also reads the strings "inf" and "infinity"
        return [_as_number(key, v, float) for v in value]
    if key in ("g0", "restarts", "seed", "maxiter", "samples", "mem_cap", "jobs"):
        return _as_number(key, value, int)
    if key == "quad_nodes":
        return None if value in ("", None) else _as_number(key, value, int)
    if key == "tol":
        return _as_number(key, value, float)
    return str(value)
