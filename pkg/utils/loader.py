import json
import logging
import os
from dataclasses import dataclass

import yaml

from processing.time_change import TimeChangeSpec, tau_from_preset
from utils.errors import ConfigError

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_CONFIG = os.path.join(ROOT, 'config.yaml')
PRESETS_FILE = os.path.join(ROOT, 'configurations.json')
CONFIG_KEYS = ('model', 'tau', 'experiment', 'seed', 'tol', 't_max', 'samples', 'out')
MODELS = ('cat_suspension',)


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    tau: TimeChangeSpec
    experiment: str
    seed: int
    tol: float
    t_max: float
    samples: int
    out: str

    def to_dict(self):
        return {'model': self.model, 'tau': self.tau.to_dict(), 'experiment': self.experiment, 'seed': self.seed,
                'tol': self.tol, 't_max': self.t_max, 'samples': self.samples, 'out': self.out}


def read_yaml(path):
    try:
        with open(path, 'r') as file:
            document = yaml.safe_load(file)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigError(f"Could not parse {path}: {e}")
    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ConfigError(f"Config {path} must be a mapping at the top level")
    return document


def load_presets(path=PRESETS_FILE):
    """
    Named time-change records
    :param path: str, JSON file of presets
    :return: dict
    """
    try:
        with open(path, 'r') as file:
            return json.load(file)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Could not read tau presets from {path}: {e}")


def resolve_tau(value, presets):
    if isinstance(value, str):
        return tau_from_preset(value, presets)
    return TimeChangeSpec.from_dict(value)


def _as_int(key, value):
    if isinstance(value, bool) or int(value) != value:
        raise ConfigError(f"Field '{key}' must be an integer, got {value!r}")
    return int(value)


def build_config(document, presets=None):
    """
    Validate a complete config mapping into an ExperimentConfig
    :param document: dict with exactly the config keys
    :param presets: dict of tau presets, loaded from configurations.json when None
    :return: ExperimentConfig
    """
    unknown = [k for k in document if k not in CONFIG_KEYS]
    if unknown:
        raise ConfigError(f"Unknown config field '{unknown[0]}'")
    missing = [k for k in CONFIG_KEYS if k not in document]
    if missing:
        raise ConfigError(f"Missing config field '{missing[0]}'")
    if document['model'] not in MODELS:
        raise ConfigError(f"Unknown model '{document['model']}', available: {list(MODELS)}")
    if not isinstance(document['experiment'], str):
        raise ConfigError(f"Field 'experiment' must be a name, got {document['experiment']!r}")
    try:
        seed = _as_int('seed', document['seed'])
        samples = _as_int('samples', document['samples'])
        tol = float(document['tol'])
        t_max = float(document['t_max'])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid numeric field: {e}")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"Seed must be a 64-bit unsigned integer, got {seed}")
    if not tol > 0:
        raise ConfigError(f"Field 'tol' must be positive, got {tol}")
    if samples < 1:
        raise ConfigError(f"Field 'samples' must be at least 1, got {samples}")
    if not t_max > 0:
        raise ConfigError(f"Field 't_max' must be positive, got {t_max}")
    tau = resolve_tau(document['tau'], load_presets() if presets is None else presets)
    return ExperimentConfig(document['model'], tau, document['experiment'], seed, tol, t_max, samples,
                            str(document['out']))


def load_config(path=None, overrides=None, defaults_path=DEFAULT_CONFIG, presets=None):
    """
    Defaults from config.yaml, overlaid by the user document and then by command-line overrides
    :param path: str, user config path, or None for defaults only
    :param overrides: dict of values that replace config entries when not None
    :param defaults_path: str, defaults file
    :param presets: dict of tau presets
    :return: ExperimentConfig
    """
    document = read_yaml(defaults_path)
    if path is not None:
        user = read_yaml(path)
        unknown = [k for k in user if k not in CONFIG_KEYS]
        if unknown:
            raise ConfigError(f"Unknown config field '{unknown[0]}' in {path}")
        document.update(user)
        logging.info(f"Loaded config from {path}")
    for key, value in (overrides or {}).items():
        if value is not None:
            document[key] = value
    return build_config(document, presets)
