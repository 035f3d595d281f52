"""Flat key-value experiment configuration (dotted sections, no nesting).

Example::

    model = cascade
    grid.N = 64
    grid.d = 1
    params.beta = 1
    params.ell = 1
    regime.alpha = 0.8
    regime.delta = 0.9
    regime.m = 3
    seed = 0

Unknown keys are validation errors, as are out-of-domain values; errors are
collected and reported together.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, asdict
from pathlib import Path

MODELS = ("kg", "nls", "compare", "cascade", "normal-form", "check-regime")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


@dataclass
class ExperimentConfig:
    model: str = "cascade"
    grid_N: int = 64
    grid_d: int = 1
    params_beta: float = 1.0
    params_ell: int = 1
    regime_alpha: float = 0.8
    regime_C0: float = 1.0
    regime_delta: float = 0.9
    regime_m: float = 3.0
    regime_s: float = 2.0
    regime_lambda: float = 0.1
    regime_K: float | None = None  # None -> frozen calibrated value
    nls_eps: float = 1e-4
    nls_H: int = 64
    nls_h0: int = 1
    integrator_dt: float | None = None
    integrator_dtau: float | None = None
    integrator_tau_end: float = 1.0
    integrator_t_end: float | None = None
    integrator_sync_points: int = 8
    integrator_horizon_T0: float = 10.0
    cascade_growth_factor: float = 4.0
    output_dir: str = "out"
    output_format: str = "ndjson"
    seed: int = 0

    REQUIRED = ("model",)

    def key_of(self, field_name: str) -> str:
        return field_name.replace("_", ".", 1) if "_" in field_name else field_name


_KEY_TO_FIELD = {
    (f.name.replace("_", ".", 1) if "_" in f.name else f.name): f.name
    for f in fields(ExperimentConfig)
}
# regime.lambda: 'lambda' is the public key for the field regime_lambda
_KEY_TO_FIELD["regime.lambda"] = "regime_lambda"


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError([f"line {lineno}: expected 'key = value', got {raw!r}"])
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def _coerce(field_name: str, value: str, problems: list[str]):
    hints = {
        "model": str,
        "output_dir": str,
        "output_format": str,
        "grid_N": int,
        "grid_d": int,
        "params_ell": int,
        "nls_H": int,
        "nls_h0": int,
        "integrator_sync_points": int,
        "seed": int,
    }
    kind = hints.get(field_name, float)
    if value.lower() in ("none", ""):
        return None
    try:
        return kind(value)
    except ValueError:
        problems.append(f"{field_name}: cannot parse {value!r} as {kind.__name__}")
        return None


def config_from_mapping(raw: dict[str, str]) -> ExperimentConfig:
    problems: list[str] = []
    values: dict = {}
    for key, text in raw.items():
        fname = _KEY_TO_FIELD.get(key)
        if fname is None:
            problems.append(f"unknown key {key!r}")
            continue
        values[fname] = _coerce(fname, text, problems)
    if "model" not in values:
        problems.append("missing required key 'model'")
    if problems:
        raise ConfigError(problems)
    cfg = ExperimentConfig(**values)
    validate_config(cfg)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    return config_from_mapping(parse_config_text(Path(path).read_text()))


def validate_config(cfg: ExperimentConfig) -> None:
    problems: list[str] = []
    if cfg.model not in MODELS:
        problems.append(f"model must be one of {MODELS}, got {cfg.model!r}")
    if cfg.grid_N < 1:
        problems.append(f"grid.N must be >= 1, got {cfg.grid_N}")
    if cfg.grid_d not in (1, 2, 3):
        problems.append(f"grid.d must be in {{1,2,3}}, got {cfg.grid_d}")
    if cfg.params_beta < 0:
        problems.append(f"params.beta must be >= 0, got {cfg.params_beta}")
    if cfg.params_ell < 1:
        problems.append(f"params.ell must be >= 1, got {cfg.params_ell}")
    if not 0 < cfg.regime_alpha <= 1.0 / cfg.params_ell:
        problems.append(
            f"regime.alpha must lie in (0, 1/ell], got {cfg.regime_alpha}"
        )
    if not 0 < cfg.regime_delta < 1:
        problems.append(f"regime.delta must lie in (0,1), got {cfg.regime_delta}")
    if cfg.regime_m <= 0:
        problems.append(f"regime.m must be > 0, got {cfg.regime_m}")
    if cfg.regime_lambda <= 0:
        problems.append(f"regime.lambda must be > 0, got {cfg.regime_lambda}")
    if cfg.nls_eps <= 0:
        problems.append(f"nls.eps must be > 0, got {cfg.nls_eps}")
    if cfg.integrator_sync_points < 1:
        problems.append("integrator.sync_points must be >= 1")
    if cfg.output_format not in ("ndjson", "csv"):
        problems.append(
            f"output.format must be ndjson or csv, got {cfg.output_format!r}"
        )
    # horizon guard: original-time horizon never exceeds the mu^-2 ceiling
    mu = 2.0 / (2 * cfg.grid_N + 1)
    t_end = cfg.integrator_t_end
    if t_end is None and cfg.model in ("compare", "cascade"):
        t_end = 2.0 * cfg.integrator_tau_end / mu ** (
            2 * cfg.params_ell * cfg.regime_alpha
        )
    if t_end is not None and t_end > cfg.integrator_horizon_T0 / mu**2:
        problems.append(
            f"horizon t_end = {t_end:.4g} exceeds the ceiling "
            f"T0/mu^2 = {cfg.integrator_horizon_T0 / mu**2:.4g}"
        )
    if problems:
        raise ConfigError(problems)


def config_echo(cfg: ExperimentConfig) -> dict:
    """Public-key echo sufficient to re-run without the original file."""
    out = {}
    for f in fields(ExperimentConfig):
        key = "regime.lambda" if f.name == "regime_lambda" else (
            f.name.replace("_", ".", 1) if "_" in f.name else f.name
        )
        out[key] = getattr(cfg, f.name)
    return out


def config_to_text(cfg: ExperimentConfig) -> str:
    lines = [f"{k} = {v}" for k, v in config_echo(cfg).items() if v is not None]
    return "\n".join(lines) + "\n"
