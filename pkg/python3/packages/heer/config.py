"""
config.py

Training configuration. Values come from the defaults below, optionally
overridden by a key=value config file and then by command line flags.

Config file example (shell-style key=value lines, quotes optional):

    dim=256
    neg=5
    lr='10'
"""

import configparser
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional

from .errors import ConfigError

LOGGER = logging.getLogger("heer.config")

CONFIG_HEADER = "heer"

# Short names accepted in config files and on the command line
ALIASES = {
    "dim": "d_v",
    "neg": "k",
    "batch": "batch_size",
    "alpha": "noise_alpha",
}

DTYPES = ("float64", "float32")


@dataclass(frozen=True)
class TrainConfig:
    """Every hyperparameter of pretraining, HEER training and the Logit baseline"""

    d_v: int = 256
    k: int = 5
    lr: float = 10.0
    rescale: float = 0.1
    batch_size: int = 50
    epochs: int = 10
    # None means one pass over |E| samples per epoch
    samples_per_epoch: Optional[int] = None
    seed: int = 0
    workers: int = 1
    freeze_metrics: bool = False
    noise_alpha: float = 0.75
    pretrain_epochs: int = 10
    pretrain_lr: float = 0.025
    pretrain_min_lr: float = 1e-4
    dtype: str = "float64"
    checkpoint_dir: Optional[str] = None
    logit_l2: float = 1e-4
    # per-row L2 bound on HEER gradients, None for no clipping
    grad_clip: Optional[float] = 1.0

    @property
    def d_h(self):
        return self.d_v // 2

    def validate(self):
        """Raise ConfigError if any field is out of range"""
        if self.d_v <= 0 or self.d_v % 2:
            raise ConfigError("dim must be even and positive, got {}".format(self.d_v))
        if self.k < 0:
            raise ConfigError("neg must be >= 0, got {}".format(self.k))
        if not self.lr > 0:
            raise ConfigError("lr must be > 0, got {}".format(self.lr))
        if not self.rescale > 0:
            raise ConfigError("rescale must be > 0, got {}".format(self.rescale))
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1, got {}".format(self.batch_size))
        if self.epochs < 0 or self.pretrain_epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.samples_per_epoch is not None and self.samples_per_epoch < 1:
            raise ConfigError("samples_per_epoch must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1, got {}".format(self.workers))
        if self.noise_alpha < 0:
            raise ConfigError(
                "noise_alpha must be >= 0, got {}".format(self.noise_alpha)
            )
        if not 0 < self.pretrain_min_lr <= self.pretrain_lr:
            raise ConfigError("need 0 < pretrain_min_lr <= pretrain_lr")
        if self.dtype not in DTYPES:
            raise ConfigError("dtype must be one of {}".format(", ".join(DTYPES)))
        if not self.logit_l2 > 0:
            raise ConfigError("logit_l2 must be > 0, got {}".format(self.logit_l2))
        if self.grad_clip is not None and not self.grad_clip > 0:
            raise ConfigError("grad_clip must be > 0, got {}".format(self.grad_clip))
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return self

    def updated(self, **changes):
        """Return a validated copy with [changes] applied"""
        return replace(self, **changes).validate()

    def to_dict(self):
        return asdict(self)


def config_hash(config):
    """Short stable digest of a config, stamped into every artifact"""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _coerce(name, field_type, raw):
    # type: (str, Any, str) -> Any
    text = raw.strip().strip("'").strip('"')
    type_name = str(field_type)
    try:
        if "Optional" in type_name and text.lower() in ("none", ""):
            return None
        if "bool" in type_name:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "int" in type_name:
            return int(text)
        if "float" in type_name:
            return float(text)
    except ValueError:
        raise ConfigError("invalid value for {}: '{}'".format(name, raw)) from None
    return text


def read_config(config_path):
    # type: (str) -> Dict[str, str]
    """Read a key=value config file and return its raw entries"""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(config_path, encoding="utf-8") as config_file:
            parser.read_string("[{}]\n{}".format(CONFIG_HEADER, config_file.read()))
    except configparser.Error as e:
        raise ConfigError("invalid config file {}: {}".format(config_path, e)) from None
    except OSError as e:
        raise ConfigError(
            "cannot read config file {}: {}".format(config_path, e)
        ) from None
    config = dict(parser[CONFIG_HEADER].items())
    LOGGER.debug("%s: %s", config_path, config)
    return config


def from_mapping(values, base=None):
    # type: (Dict[str, Any], Optional[TrainConfig]) -> TrainConfig
    """
    Apply [values] (raw strings or typed values, keyed by field name or
    alias) on top of [base] and validate the result.
    """
    base = base or TrainConfig()
    known = {f.name: f.type for f in fields(TrainConfig)}
    changes = {}
    for key, value in values.items():
        name = ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
        if name not in known:
            raise ConfigError("unknown config key '{}'".format(key))
        if isinstance(value, str):
            value = _coerce(name, known[name], value)
        changes[name] = value
    return replace(base, **changes).validate()


def load_config(config_path=None, overrides=None):
    """Defaults, then the config file, then explicit overrides"""
    config = TrainConfig()
    if config_path:
        config = from_mapping(read_config(config_path), config)
    if overrides:
        config = from_mapping(overrides, config)
    return config.validate()
