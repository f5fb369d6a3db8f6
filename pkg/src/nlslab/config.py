"""Experiment configuration: defaults, YAML loading, strict validation."""

import copy
import math

import yaml

from .errors import ConfigError

EXPERIMENT_NAMES = (
    "modulated_scaling",
    "norm_inflation",
    "zero_speed",
    "bubble_norms",
    "besov_vs_fourier",
    "commutator_sweep",
    "theorem0_preset",
)

_BASE = {
    "experiment": "modulated_scaling",
    "seed": 0,
    "output_dir": "results",
    "threads": 1,
    "model": {"d": 1, "m": 3, "s": 0.1, "sigma_target": 1.0},
    "ladder": {
        "kind": "geometric",
        "h0": 0.5,
        "gamma": 0.5,
        "M": 1.25,
        "first": 1,
        "rungs": 2,
        "r1": 1.0,
        "amplitude": math.e,
        "log_factor": True,
        "mollifier_scale": 0.1,
        "separation_factor": 5.0,
    },
    "grid": {"N": None, "L": 30.0},
    "epsilon_list": [0.2, 0.1, 0.05, 0.025],
    "sigma_list": [0.5, 1.0],
    "t_grid": None,
    "solver": {
        "dt_safety": 0.5,
        "dealias": "two_thirds",
        "blowup_threshold": 5.0,
        "nls_dt_cap": 1e-3,
        "nls_dt_coef": 10.0,
    },
    "fit": {"log_corrected": False},
    "background": {"amplitude": 0.5, "width_fraction": 0.15},
    "commutator": {"radii": [1.0, 2.0, 4.0, 8.0], "alphas": [0.3, 0.7], "L": 128.0, "N": 2048},
    "besov": {"N": 2048, "L": 2 * math.pi, "band": [1 / 30, 1 / 16], "delta_fraction": 0.125},
    "bubble_norms": {
        "growth_offset": 0.5,
        "decay_mollifier_scale": 0.25,
        "rungs": 4,
    },
}

# per-experiment overrides of the base defaults
_PRESETS = {
    "modulated_scaling": {},
    "norm_inflation": {
        "epsilon_list": [0.1, 0.05, 0.025, 0.0125],
        "sigma_list": [0.0, 0.5, 1.0],
        "ladder": {"rungs": 1, "r1": 1.5},
        "grid": {"L": 2 * math.pi},
    },
    "zero_speed": {
        "ladder": {"rungs": 1, "r1": 1.5},
        "grid": {"N": 256, "L": 2 * math.pi},
    },
    "bubble_norms": {"ladder": {"rungs": 4}},
    "besov_vs_fourier": {"sigma_list": [0.3, 0.7, 1.0, 1.5]},
    "commutator_sweep": {},
    "theorem0_preset": {
        "ladder": {"rungs": 1, "r1": 1.0},
        "grid": {"L": 30.0},
    },
}


def default_config(experiment: str) -> dict:
    if experiment not in EXPERIMENT_NAMES:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENT_NAMES)}"
        )
    cfg = copy.deepcopy(_BASE)
    cfg["experiment"] = experiment
    _merge(cfg, copy.deepcopy(_PRESETS[experiment]), path="")
    return cfg


def _merge(base: dict, override: dict, path: str):
    for key, val in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {here}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            _merge(base[key], val, here)
        elif isinstance(base[key], dict) != isinstance(val, dict):
            raise ConfigError(f"config key {here} has the wrong structure")
        else:
            base[key] = val


def load_config(path: str | None, experiment: str | None = None,
                overrides: dict | None = None) -> dict:
    """Merge defaults <- YAML file <- programmatic overrides, strictly."""
    doc = {}
    if path is not None:
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} must contain a mapping")
    name = experiment or doc.get("experiment") or _BASE["experiment"]
    cfg = default_config(name)
    _merge(cfg, doc, path="")
    if experiment is not None:
        cfg["experiment"] = experiment
    if overrides:
        _merge(cfg, overrides, path="")
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict):
    eps = cfg["epsilon_list"]
    if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise ConfigError("epsilon_list must be strictly decreasing")
    if any(e <= 0 for e in eps):
        raise ConfigError("epsilon values must be positive")
    for s in cfg["sigma_list"]:
        if not 0.0 <= s <= 2.0:
            raise ConfigError(f"sigma values must lie in [0, 2], got {s}")
    if cfg["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    if cfg["experiment"] not in EXPERIMENT_NAMES:
        raise ConfigError(f"unknown experiment {cfg['experiment']!r}")
