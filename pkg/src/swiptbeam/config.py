"""Config-file ingestion: JSON dict with explicit units -> SystemParams.

Power-like quantities carry their unit in the key name so a config file is
unambiguous:

``p_th_db``/``p_in_db``     dB relative to 1 W (dBW)
``psi_s_dbm``               dB relative to 1 mW
``*_w``                     already linear watts
``sigma_*2``                linear watts (noise powers)
``xi_e`` / ``xi_p``         error-ball radii; ``xi_e_sq`` / ``xi_p_sq`` accept
                            the squared radii that scenario tables usually quote

Exactly one spelling of each power/radius must be present.  Scalars broadcast
over the per-receiver lists.  Unknown keys are rejected so typos surface as
config errors rather than silently falling back to defaults.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .model import SystemParams

__all__ = [
    "ConfigError",
    "db_to_watt",
    "dbm_to_watt",
    "convert_units",
    "load_params",
    "baseline_config",
]


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


def db_to_watt(x_db: float) -> float:
    """dB relative to 1 W -> linear watts."""
    return 10.0 ** (float(x_db) / 10.0)


def dbm_to_watt(x_dbm: float) -> float:
    """dB relative to 1 mW -> linear watts."""
    return 10.0 ** ((float(x_dbm) - 30.0) / 10.0)


def _take_power(cfg: dict, base: str, db_key: str, db_conv) -> object:
    """Pop exactly one of ``<base>_w`` / ``<db_key>`` and return linear watts."""
    w_key = base + "_w"
    have = [k for k in (w_key, db_key) if k in cfg]
    if len(have) != 1:
        raise ConfigError(f"config must set exactly one of '{w_key}' or '{db_key}'")
    raw = cfg.pop(have[0])
    conv = (lambda v: float(v)) if have[0] == w_key else db_conv
    if isinstance(raw, (list, tuple)):
        return [conv(v) for v in raw]
    return conv(raw)


def _take_radius(cfg: dict, base: str) -> object:
    """Pop ``<base>`` (radius) or ``<base>_sq`` (squared radius)."""
    sq_key = base + "_sq"
    have = [k for k in (base, sq_key) if k in cfg]
    if len(have) != 1:
        raise ConfigError(f"config must set exactly one of '{base}' or '{sq_key}'")
    raw = cfg.pop(have[0])
    conv = float if have[0] == base else (lambda v: math.sqrt(float(v)))
    if isinstance(raw, (list, tuple)):
        return [conv(v) for v in raw]
    return conv(raw)


def convert_units(raw_config: dict) -> SystemParams:
    """Validate a raw config dict and convert everything to linear units."""
    if not isinstance(raw_config, dict):
        raise ConfigError(f"config must be a JSON object, got {type(raw_config).__name__}")
    cfg = dict(raw_config)
    try:
        kwargs = dict(
            nt=int(cfg.pop("nt")),
            num_ehr=int(cfg.pop("num_ehr")),
            num_pu=int(cfg.pop("num_pu")),
            sigma_s2=float(cfg.pop("sigma_s2")),
            sigma_e2=float(cfg.pop("sigma_e2")),
            sigma_sp2=float(cfg.pop("sigma_sp2")),
            eta=float(cfg.pop("eta")),
            r_min=float(cfg.pop("r_min")),
        )
    except KeyError as exc:
        raise ConfigError(f"config is missing required key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config value: {exc}") from None
    kwargs["p_th"] = _take_power(cfg, "p_th", "p_th_db", db_to_watt)
    kwargs["p_in"] = _take_power(cfg, "p_in", "p_in_db", db_to_watt)
    kwargs["psi_s"] = _take_power(cfg, "psi_s", "psi_s_dbm", dbm_to_watt)
    kwargs["xi_e"] = _take_radius(cfg, "xi_e")
    kwargs["xi_p"] = _take_radius(cfg, "xi_p")
    if cfg:
        raise ConfigError(f"unknown config keys: {sorted(cfg)}")
    try:
        return SystemParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_params(path: str | Path) -> SystemParams:
    """Read a JSON config file and convert it."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return convert_units(raw)


def baseline_config(
    nt: int = 6, num_ehr: int = 3, num_pu: int = 2, r_min: float = 1.5
) -> dict:
    """Reference downlink scenario used throughout the experiments.

    2 dBW transmit budget, -10 dBW interference ceilings, a 22 dBm harvesting
    target, 0.1/0.1/0.01 W noise powers, unit conversion efficiency and error
    balls of squared radius 1e-3 (idle receivers) / 1e-4 (primary users).
    """
    return {
        "nt": nt,
        "num_ehr": num_ehr,
        "num_pu": num_pu,
        "sigma_s2": 0.1,
        "sigma_e2": 0.1,
        "sigma_sp2": 0.01,
        "eta": 1.0,
        "p_th_db": 2.0,
        "p_in_db": [-10.0] * num_pu,
        "psi_s_dbm": 22.0,
        "r_min": r_min,
        "xi_e_sq": [1e-3] * num_ehr,
        "xi_p_sq": [1e-4] * num_pu,
    }


def baseline_params(
    nt: int = 6, num_ehr: int = 3, num_pu: int = 2, r_min: float = 1.5
) -> SystemParams:
    """`baseline_config` already converted to linear units."""
    return convert_units(baseline_config(nt=nt, num_ehr=num_ehr, num_pu=num_pu, r_min=r_min))
