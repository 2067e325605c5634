"""Flat ``key = value`` config files.

Blank lines and ``#`` comments are ignored. Unknown keys are errors.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError

_INT = int
_FLOAT = float


def _fractions(text):
    out = []
    for tok in text.replace(";", ",").split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok.endswith("%"):
            out.append(float(tok[:-1]) / 100.0)
        else:
            value = float(tok)
            out.append(value / 100.0 if value > 1.0 else value)
    return tuple(out)


def _corr_pairs(text):
    pairs = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        a, b, rho = tok.split(":")
        pairs.append((int(a), int(b), float(rho)))
    return tuple(pairs)


TRAIN_KEYS = {
    "dataset": str,
    "epochs": _INT,
    "hidden_dim": _INT,
    "lr": _FLOAT,
    "lambda1": _FLOAT,
    "lambda2": _FLOAT,
    "negatives": _INT,
    "seed": _INT,
    "propagation": str,
    "threshold": _FLOAT,
    "fractions": _fractions,
    "seeds": _INT,
    "beta1": _FLOAT,
    "beta2": _FLOAT,
    "eps": _FLOAT,
    "layers": _INT,
    "step": _FLOAT,
}

GEN_KEYS = {
    "n": _INT,
    "classes": _INT,
    "corr_pairs": _corr_pairs,
    "p_in": _FLOAT,
    "p_out": _FLOAT,
    "noise_dims": _INT,
    "train_fraction": _FLOAT,
    "seed": _INT,
}


def parse_config_text(text: str, schema: dict, source="<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in schema:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = schema[key](value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value {value!r} for {key!r}") from None
    return values


def read_config(path, schema: dict) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), schema, str(path))
