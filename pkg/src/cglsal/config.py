"""Runtime configuration: defaults, file parsing, and serialization.

Config files are flat ``key = value`` text; booleans accept on/off,
true/false, yes/no, 1/0. Command-line flags override file values. The
environment variable ``CGL_CONFIG`` names a default config file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import CGLError
from .solver import SolverParams
from .superpixel import DEFAULT_COMPACTNESS

ENV_CONFIG = "CGL_CONFIG"

_TRUE = {"on", "true", "yes", "1"}
_FALSE = {"off", "false", "no", "0"}


@dataclass
class Config:
    """All tunables of the detection pipeline with their stock defaults."""

    n_superpixels: int = 300
    compactness: float = DEFAULT_COMPACTNESS
    slic_iters: int = 10
    sigma_rgb: float = 20.0
    sigma_t: float = 40.0
    gamma1: float = 0.5
    gamma2: float = 8.0
    theta: float = 1e-4
    mu: float = 1e-3
    lambda1: float = 4e-3
    epsilon: float = 1e-4
    max_iters: int = 50
    deep_features: bool = False
    fixed_graph: bool = False
    extended_adjacency: bool = False
    modalities: str = "rgbt"
    features_dir: str = ""

    def solver_params(self) -> SolverParams:
        return SolverParams(
            gamma1=self.gamma1,
            gamma2=self.gamma2,
            theta=self.theta,
            mu=self.mu,
            lambda1=self.lambda1,
            epsilon=self.epsilon,
            max_iters=self.max_iters,
        )

    def modality_names(self) -> tuple[str, ...]:
        if self.modalities == "rgbt":
            return ("rgb", "t")
        if self.modalities in ("rgb", "t"):
            return (self.modalities,)
        raise CGLError(f"modalities must be rgbt, rgb, or t, not {self.modalities!r}")

    def dump(self) -> str:
        """Serialize as a config file that parses back to an equal Config."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                value = "on" if value else "off"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


def _coerce(name: str, text: str, kind: type):
    text = text.strip()
    if kind is bool:
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise CGLError(f"config key {name}: cannot parse boolean from {text!r}")
    try:
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError as exc:
        raise CGLError(f"config key {name}: {exc}") from exc
    return text.strip("'\"")


def parse_config_text(text: str, base: Config | None = None) -> Config:
    """Parse ``key = value`` lines on top of ``base`` (or the defaults)."""
    config = Config() if base is None else base
    defaults = Config()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CGLError(f"config line {lineno}: expected key = value, got {raw!r}")
        name, value = (part.strip() for part in line.split("=", 1))
        if not hasattr(defaults, name):
            raise CGLError(f"config line {lineno}: unknown key {name!r}")
        kind = type(getattr(defaults, name))
        setattr(config, name, _coerce(name, value, kind))
    return config


def load_config(path=None, overrides: dict | None = None) -> Config:
    """Resolve the effective config: env file, explicit file, then overrides."""
    config = Config()
    env_path = os.environ.get(ENV_CONFIG)
    if path is None and env_path:
        path = env_path
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise CGLError(f"config file not found: {p}")
        config = parse_config_text(p.read_text(encoding="utf-8"), config)
    for name, value in (overrides or {}).items():
        if value is not None:
            setattr(config, name, value)
    return config
