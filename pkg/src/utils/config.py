"""Configuration management for grounded ranking."""
import os
import yaml
from pathlib import Path
from typing import Any, Optional
from dotenv import load_dotenv

PROJECT_ROOT = Path(__file__).parent.parent.parent


class Config:
    """Singleton configuration manager for service-level settings.

    Experiment settings live in JSON experiment configs (see
    ``grounded_ranking.experiment``); this object only carries what is shared
    by every run: logging, evaluation threads and desk-scale presets.
    """

    _instance: Optional['Config'] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return

        self._initialized = True
        self._load_env()
        self._load_yaml()

    def _load_env(self):
        """Load environment variables from .env file."""
        load_dotenv(PROJECT_ROOT / ".env")

    def _load_yaml(self):
        """Load configuration from YAML file."""
        config_path = PROJECT_ROOT / "config" / "config.yaml"

        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {config_path}")

        with open(config_path, 'r') as f:
            self.config = yaml.safe_load(f) or {}

    def get(self, key_path: str, default: Any = None) -> Any:
        """
        Get configuration value using dot notation.

        Args:
            key_path: Dot-separated path (e.g., 'runtime.eval_threads')
            default: Default value if key not found

        Returns:
            Configuration value or default

        Example:
            >>> config = Config()
            >>> config.get('logging.level')
            'INFO'
        """
        keys = key_path.split('.')
        value = self.config

        for key in keys:
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default

        return value

    def get_env(self, key: str, default: Any = None) -> Any:
        """
        Get environment variable.

        Args:
            key: Environment variable name
            default: Default value if not found

        Returns:
            Environment variable value or default
        """
        return os.getenv(key, default)

    @property
    def log_level(self) -> str:
        """Logging level; GROUNDED_RANKING_LOG_LEVEL wins over the YAML value."""
        return str(self.get_env('GROUNDED_RANKING_LOG_LEVEL', self.get('logging.level', 'INFO')))

    @property
    def log_file(self) -> Optional[Path]:
        """Log file path when file logging is enabled."""
        if not self.get('logging.file_logging', False):
            return None
        return Path(self.get('logging.file_path', 'runs/grounded_ranking.log')).expanduser()

    @property
    def eval_threads(self) -> int:
        """Number of threads used to shard similarity computations."""
        return max(1, int(self.get('runtime.eval_threads', 1)))

    def get_desk_preset(self, section: str) -> dict:
        """
        Get a desk-scale preset section.

        Args:
            section: 'model', 'train' or 'synthetic'

        Returns:
            Preset dict (empty if absent)
        """
        return dict(self.get(f'desk_scale.{section}', {}) or {})

    def reload(self):
        """Reload configuration from files."""
        self._load_env()
        self._load_yaml()


# Global config instance
config = Config()
