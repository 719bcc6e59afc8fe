"""Shared helpers for scenario runs: seeding, configs and CSV output."""

from dataclasses import fields
import io

import numpy as np

from .. import __version__


def child_rng(seed, index=0):
    """Generator for stream ``index`` derived from the master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


class ConfigError(ValueError):
    """Malformed configuration file or unknown key."""


def parse_config(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def _convert(value, default):
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {value!r}")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, tuple):
        return tuple(type(default[0])(v) for v in value.replace(",", " ").split())
    return value


def apply_config(params, overrides):
    """Return a copy of the dataclass ``params`` with string overrides applied.

    Raises
    ------
    ConfigError
        For unknown keys or values that do not parse.
    """
    known = {f.name: f for f in fields(params)}
    updates = {}
    for key, value in overrides.items():
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            updates[key] = _convert(value, getattr(params, key))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    return type(params)(**{**{f.name: getattr(params, f.name) for f in fields(params)}, **updates})


def fmt(x):
    """Deterministic float formatting (round-trips exactly)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def params_header(scenario, seed, params):
    lines = [f"# scenario = {scenario}", f"# seed = {seed}", f"# version = {__version__}"]
    for f in fields(params):
        value = getattr(params, f.name)
        if isinstance(value, tuple):
            value = " ".join(fmt(v) for v in value)
        else:
            value = fmt(value)
        lines.append(f"# {f.name} = {value}")
    return lines


def write_csv(path_or_buffer, header_lines, columns, rows):
    """Write ``#`` header comments, a column line and the data rows."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(line + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    text = buf.getvalue()
    if hasattr(path_or_buffer, "write"):
        path_or_buffer.write(text)
    else:
        with open(path_or_buffer, "w", newline="\n") as fh:
            fh.write(text)
    return text


def read_csv(path):
    """Read a CSV written by :func:`write_csv`.

    Returns (header dict, columns, rows). Rows form a float array when every
    field is numeric, otherwise a list of lists with text fields kept as str.
    """
    header = {}
    columns = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                if "=" in line:
                    k, v = line[1:].split("=", 1)
                    header[k.strip()] = v.strip()
                continue
            if columns is None:
                columns = line.split(",")
                continue
            if line:
                rows.append([_number_or_text(v) for v in line.split(",")])
    if all(isinstance(v, float) for row in rows for v in row):
        rows = np.array(rows)
    return header, columns, rows


def _number_or_text(value):
    try:
        return float(value)
    except ValueError:
        return value
