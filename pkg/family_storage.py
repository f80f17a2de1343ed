#!/usr/bin/env python3
"""
Family Storage Module for spiralsheet
Atomic JSON persistence for spiral family configs and solver results,
plus the optional tool settings file
"""

import copy
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import orjson

from spiral_errors import ConfigError
from spiral_model import SpiralFamily, family_to_dict, validate_family

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DEFAULT_SETTINGS_FILE = "spiralsheet.conf"

DEFAULT_SETTINGS: Dict[str, Dict[str, Any]] = {
    "tolerances": {
        "on_sheet": 1e-12,
        "matching": 1e-10,
        "identity": 1e-13,
        "equivariance": 1e-12,
        "growth_spread": 0.05,
        "finite_difference": 1e-8,
        "euler": 1e-6,
        "one_sided": 1e-8,
        "jump": 1e-12,
        "tangential_jump": 1e-10,
        "biot_savart": 1e-6,
        "residue": 1e-13,
        "weak_form": 1e-3,
        "energy_law": 1e-10,
        "energy_crosscheck": 0.01,
        "energy_slope": 1e-9,
        "circulation": 1e-10,
    },
    "samples": {
        "winding": 100000,
        "winding_brute_force": 2000,
        "field": 10000,
        "growth": 50000,
        "sheet": 1000,
        "euler": 100,
        "matching": 100,
        "biot_savart_points": 5,
    },
    "quadrature": {
        "max_splits": 20000,
        "sigma_split": 0.0,
        "energy_limit": 200,
    },
    "weak_form": {
        "test_count": 6,
        "cells": 48,
        "time_nodes": 16,
        "refine_levels": 4,
        "bump_power": 8,
        "radius": 1.0,
        "t_center": 1.0,
        "t_half_width": 0.25,
        "max_points": 20000000,
    },
}


def _atomic_write(path: Path, payload: bytes) -> bool:
    """Write to a temp file next to path, fsync, then rename over path"""
    temp_file = None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(mode='wb', dir=path.parent,
                                         delete=False, suffix='.tmp') as f:
            temp_file = f.name
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(temp_file, path)
        return True
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        if temp_file is not None:
            try:
                os.unlink(temp_file)
            except OSError:
                pass
        return False


def dumps(data: Any) -> bytes:
    """Byte-stable JSON: sorted keys, two-space indent, trailing newline"""
    return orjson.dumps(data, option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2
                        | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_APPEND_NEWLINE)


def _read_json(path: Path) -> Any:
    try:
        with open(path, 'rb') as f:
            return orjson.loads(f.read())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}")


def load_family(path: PathLike) -> SpiralFamily:
    """Load and validate a family config; every failure is a SpiralError"""
    path = Path(path)
    family = validate_family(_read_json(path))
    logger.debug(f"Loaded family from {path}: M={family.M} a={family.a} mu={family.mu}")
    return family


def save_family(path: PathLike, family: SpiralFamily) -> bool:
    path = Path(path)
    if _atomic_write(path, dumps(family_to_dict(family))):
        logger.info(f"Saved family to {path}")
        return True
    return False


def save_result(path: PathLike, result: Mapping[str, Any]) -> bool:
    """Persist a solver result or verification report"""
    path = Path(path)
    if _atomic_write(path, dumps(dict(result))):
        logger.info(f"Saved result to {path}")
        return True
    return False


def load_settings(path: Optional[PathLike] = None) -> Dict[str, Dict[str, Any]]:
    """Tool settings merged section by section over DEFAULT_SETTINGS.

    A missing file yields the defaults; an unreadable or malformed one is a
    ConfigError.
    """
    settings = copy.deepcopy(DEFAULT_SETTINGS)
    explicit = path is not None
    path = Path(path) if explicit else Path(DEFAULT_SETTINGS_FILE)

    if not path.exists():
        if explicit:
            raise ConfigError(f"settings file not found: {path}")
        logger.debug(f"No settings file at {path}, using defaults")
        return settings

    data = _read_json(path)
    if not isinstance(data, dict):
        raise ConfigError(f"settings file {path} must hold a JSON object")

    for section, values in data.items():
        if section not in settings:
            logger.warning(f"Ignoring unknown settings section '{section}' in {path}")
            continue
        if not isinstance(values, dict):
            raise ConfigError(f"settings section '{section}' must be an object")
        for key, value in values.items():
            if key not in settings[section]:
                logger.warning(f"Ignoring unknown setting {section}.{key}")
                continue
            settings[section][key] = value

    logger.info(f"Loaded settings from {path}")
    return settings
