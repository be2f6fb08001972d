import os
import json
import copy
import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path

from dotenv import load_dotenv

from modules.errors import ConfigError

logger = logging.getLogger('url_ranker')

MODES = ("record", "replay", "simulate")
P_METHODS = ("auto", "exact", "normal")


class Config:
    """Configuration management for ranking and correlation runs"""

    def __init__(self, path="config.json"):
        # Load environment variables from .env file if it exists
        load_dotenv()

        self.path = path

        # Default configuration values
        self.defaults = {
            "engines": {
                "Live": {"dialect": "live-2008", "simulate": {"kind": "dispersion", "strength": 8}},
                "Yahoo": {"dialect": "yahoo-2008", "simulate": {"kind": "adjacent-swap", "strength": 5}},
                "Google": {"dialect": "google-2008", "simulate": {"kind": "adjacent-swap", "strength": 10}},
            },
            "dialects_file": "dialects.json",
            "q": 5,
            "n_values": [10, 25, 50],
            "mode": "simulate",
            "cache_dir": "cache",
            "out_dir": "out",
            "seed": 0,
            "dedup_key": "url",
            "windowed": True,
            "p_method": "auto",
            "drop_unindexed_fraction": 0.2,
            "budget_ledger": None,
            "sweep": {"strengths": [0, 2, 5, 10], "seeds": 500, "noise_kind": "adjacent-swap"},
            "log_level": "INFO",
        }

        self.config = self._load_config()

    def _load_config(self):
        """Load configuration from the JSON file if it exists"""
        config = copy.deepcopy(self.defaults)

        if self.path and os.path.exists(self.path):
            try:
                with open(self.path, 'r', encoding='utf-8') as f:
                    loaded_config = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"Error loading config {self.path}: {e}") from e
            if not isinstance(loaded_config, dict):
                raise ConfigError(f"Config {self.path} must hold a JSON object")
            config.update(loaded_config)
        elif self.path:
            logger.info(f"No config file at {self.path}, using defaults")

        return config

    def _save_config(self, config):
        """Save configuration to the JSON file"""
        try:
            with open(self.path, 'w', encoding='utf-8') as f:
                json.dump(config, f, indent=4)
        except OSError as e:
            logger.error(f"Error saving config: {e}")

    def get(self, key):
        """Get a configuration value"""
        return self.config.get(key, self.defaults.get(key))

    def set(self, key, value):
        """Set a configuration value and save to file"""
        self.config[key] = value
        self._save_config(self.config)

    @staticmethod
    def secret(env_var):
        """Read a secret (API token) from the environment"""
        if not env_var:
            return None
        value = os.getenv(env_var)
        if not value:
            logger.warning(f"{env_var} not found in environment variables")
        return value


@dataclass
class RunConfig:
    """Everything one CLI invocation needs, after flags are applied"""

    lists: list = field(default_factory=list)
    engines: dict = field(default_factory=dict)
    dialects_file: str = "dialects.json"
    q: int = 5
    n_values: list = field(default_factory=lambda: [10, 25, 50])
    mode: str = "simulate"
    cache_dir: str = "cache"
    out_dir: str = "out"
    seed: int = 0
    dedup_key: str = "url"
    windowed: bool = True
    p_method: str = "auto"
    drop_unindexed_fraction: float = 0.2
    budget_ledger: str = None
    rankings_dir: str = None
    expert: list = None
    strengths: list = field(default_factory=lambda: [0, 2, 5, 10])
    seeds: int = 500
    noise_kind: str = "adjacent-swap"
    sweep_q: int = None
    configured_engines: list = field(default_factory=list)

    @classmethod
    def from_sources(cls, config, flags=None):
        """Merge a Config with parsed command-line flags (flags win)"""
        sweep = config.get("sweep") or {}
        values = {
            "engines": config.get("engines"),
            "dialects_file": config.get("dialects_file"),
            "q": config.get("q"),
            "n_values": config.get("n_values"),
            "mode": config.get("mode"),
            "cache_dir": config.get("cache_dir"),
            "out_dir": config.get("out_dir"),
            "seed": config.get("seed"),
            "dedup_key": config.get("dedup_key"),
            "windowed": config.get("windowed"),
            "p_method": config.get("p_method"),
            "drop_unindexed_fraction": config.get("drop_unindexed_fraction"),
            "budget_ledger": config.get("budget_ledger"),
            "strengths": sweep.get("strengths", [0, 2, 5, 10]),
            "seeds": sweep.get("seeds", 500),
            "noise_kind": sweep.get("noise_kind", "adjacent-swap"),
            "sweep_q": sweep.get("q"),
        }

        for key, value in (flags or {}).items():
            if value is not None and key in cls.__dataclass_fields__:
                values[key] = value

        values["configured_engines"] = list(values["engines"] or {})

        # --engines narrows the configured engine table
        selected = (flags or {}).get("engine_names")
        if selected:
            table = values["engines"] or {}
            missing = [name for name in selected if name not in table]
            if missing:
                raise ConfigError(f"Unknown engine(s): {', '.join(missing)}")
            values["engines"] = {name: table[name] for name in selected}

        run = cls(**values)
        run.validate()
        return run

    def validate(self):
        """Check invariants that do not need the dialect table"""
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if not isinstance(self.q, int) or self.q < 2:
            raise ConfigError(f"q must be an integer >= 2, got {self.q!r}")
        if not self.n_values or any(int(n) < 1 for n in self.n_values):
            raise ConfigError(f"n values must be positive, got {self.n_values!r}")
        if self.p_method not in P_METHODS:
            raise ConfigError(f"p_method must be one of {', '.join(P_METHODS)}")
        if self.dedup_key not in (None, "url", "label"):
            raise ConfigError(f"dedup_key must be url or label, got {self.dedup_key!r}")
        if not 0 <= float(self.drop_unindexed_fraction) <= 1:
            raise ConfigError("drop_unindexed_fraction must lie in [0, 1]")

    def engine_seed(self, name):
        """Seed for a simulated engine, fixed by its place in the configured table"""
        names = self.configured_engines or list(self.engines)
        return self.seed + names.index(name)

    def require_cache(self):
        """Replay runs read everything from an existing cache"""
        if self.mode == "replay" and not Path(self.cache_dir).is_dir():
            raise ConfigError(f"cache not found: {self.cache_dir}")

    def to_dict(self):
        return asdict(self)
