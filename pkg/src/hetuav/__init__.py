"""Secure heterogeneous UAV network simulator with a secrecy-precoding inner
solver and offline-to-online multi-agent trajectory learning."""

from hetuav.config import ConfigError, ScenarioConfig, load_config

__all__ = ["ConfigError", "ScenarioConfig", "load_config"]
__version__ = "0.1.0"
