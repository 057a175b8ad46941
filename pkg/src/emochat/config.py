"""Service configuration: INI-style sections, strict about unknown keys."""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .core import EmochatError


class ConfigParseError(EmochatError):
    pass


class UnknownKey(EmochatError):
    pass


_SCHEMA: dict[str, dict[str, str]] = {
    "server": {"host": "str", "port": "int"},
    "models": {"suite_dir": "str"},
    "analyzer": {
        "mode": "str",
        "endpoint": "str",
        "model": "str",
        "api_key_env": "str",
        "timeout_s": "float",
        "max_concurrency": "int",
    },
    "privacy": {"redaction": "bool", "retention": "bool", "show_client_emotions": "bool"},
    "features": {"pause_threshold_ms": "float"},
    "persistence": {"dir": "str"},
}


@dataclass(slots=True)
class Config:
    host: str = "127.0.0.1"
    port: int = 9000
    suite_dir: str = ""
    analyzer_mode: str = "lexicon"
    endpoint: str = ""
    model: str = "default"
    api_key_env: str = "EMOCHAT_API_KEY"
    timeout_s: float = 10.0
    max_concurrency: int = 4
    redaction: bool = True
    retention: bool = False
    show_client_emotions: bool = False
    pause_threshold_ms: float = 1000.0
    persistence_dir: str = "./session-logs"


_FIELD_BY_KEY = {
    ("server", "host"): "host",
    ("server", "port"): "port",
    ("models", "suite_dir"): "suite_dir",
    ("analyzer", "mode"): "analyzer_mode",
    ("analyzer", "endpoint"): "endpoint",
    ("analyzer", "model"): "model",
    ("analyzer", "api_key_env"): "api_key_env",
    ("analyzer", "timeout_s"): "timeout_s",
    ("analyzer", "max_concurrency"): "max_concurrency",
    ("privacy", "redaction"): "redaction",
    ("privacy", "retention"): "retention",
    ("privacy", "show_client_emotions"): "show_client_emotions",
    ("features", "pause_threshold_ms"): "pause_threshold_ms",
    ("persistence", "dir"): "persistence_dir",
}

_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


def _coerce(section: str, key: str, raw: str):
    kind = _SCHEMA[section][key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            word = raw.strip().lower()
            if word not in _BOOL_WORDS:
                raise ValueError(f"not a boolean: {raw!r}")
            return _BOOL_WORDS[word]
        return raw.strip()
    except ValueError as exc:
        raise ConfigParseError(f"[{section}] {key}: {exc}") from exc


def load_config(path: str) -> Config:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc

    config = Config()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise UnknownKey(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise UnknownKey(f"unknown config key '{key}' in section [{section}]")
            setattr(config, _FIELD_BY_KEY[(section, key)], _coerce(section, key, raw))

    if config.analyzer_mode not in ("lexicon", "remote"):
        raise ConfigParseError(
            f"[analyzer] mode must be lexicon|remote, got {config.analyzer_mode!r}"
        )
    if config.analyzer_mode == "remote" and not config.endpoint:
        raise ConfigParseError("[analyzer] mode=remote requires an endpoint")
    return config
