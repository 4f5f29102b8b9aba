"""Plain-text run configuration.

INI layout with sections ``[curve]``, ``[law]``, ``[time]``,
``[tangential]``, ``[output]`` and ``[monitors]``.  Every key is optional
and falls back to the defaults below.  Errors name the file and line.

Example::

    [curve]
    kind = circle
    radius = 1.0
    n = 256
    theta0 = 1.0471975512

    [law]
    kind = zero

    [time]
    t_end = 2.0
    kappa_stop = 100
"""

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from . import _fd
from .curve_core import FramedCurve, make_circle, make_helix, read_curve
from .errors import ConfigError, FramedFlowError
from .flow_engine import FlowConfig
from .theta_laws import ThetaLaw

SCHEMA = {
    "curve": {
        "kind": ("str", "circle"), "radius": ("float", 1.0), "w": ("float", 0.0),
        "n": ("int", 256), "theta0": ("float", 0.0), "degree": ("int", 0),
        "path": ("str", ""), "r_amp": ("float", 0.0), "r_mode": ("int", 3),
        "z_amp": ("float", 0.0), "z_mode": ("int", 2),
    },
    "law": {
        "kind": ("str", "zero"), "rate": ("float", 0.0), "alpha": ("float", 0.0),
        "beta": ("vec", (0.0, 0.0, 0.0)), "f4": ("float", 0.0), "h": ("float", 0.0),
        "k": ("float", 0.0),
    },
    "time": {
        "t_end": ("float", 1.0), "cfl": ("float", 0.5), "kappa_stop": ("float", 1e3),
        "length_stop": ("float", 0.0), "record_dt": ("float?", None),
        "spectral_cutoff": ("int?", None), "method": ("str", "fd"),
        "max_steps": ("int", 10_000_000),
    },
    "tangential": {"enabled": ("bool", False), "v0": ("float", 0.0)},
    "output": {
        "dir": ("str", "out"), "record_every": ("int", 1), "export_surface": ("bool", False),
        "export_fields": ("bool", False), "writhe": ("bool", True),
    },
    "monitors": {
        "k_one": ("float?", None), "k_two": ("float?", None), "knotted": ("bool", False),
        "flux_directions": ("vecs?", None), "flat_tol": ("float", 0.05),
        "pinch_tol": ("float", 0.05), "extent_factor": ("float", 10.0),
    },
}

# alternative key spellings accepted on input
ALIASES = {("law", "type"): "kind", ("law", "h_target"): "h", ("law", "k_target"): "k"}

CURVE_KINDS = ("circle", "helix", "file")


@dataclass
class RunConfig:
    """Resolved configuration; ``values[section][key]`` holds typed values."""

    path: str
    values: dict
    lines: dict = field(default_factory=dict)

    def get(self, section, key):
        return self.values[section][key]

    def error(self, section, key, message):
        ln = self.lines.get((section, key))
        where = f"{self.path}:{ln}" if ln else self.path
        return ConfigError(f"{where}: [{section}] {key}: {message}")

    @property
    def output_dir(self):
        return os.environ.get("OUTPUT_DIR") or self.get("output", "dir")

    def law(self):
        v = self.values["law"]
        kind = v["kind"].lower()
        try:
            if kind == "zero":
                return ThetaLaw.zero()
            if kind == "constant":
                return ThetaLaw.constant(v["rate"])
            if kind == "diffusive":
                return ThetaLaw.diffusive(v["alpha"], v["beta"], v["f4"])
            if kind == "cmc":
                return ThetaLaw.cmc(v["h"])
            if kind == "cgc":
                return ThetaLaw.cgc(v["k"])
        except ConfigError as e:
            raise self.error("law", "kind", str(e)) from None
        raise self.error("law", "kind", f"unknown law {kind!r}")

    def flow(self):
        t, o, m = self.values["time"], self.values["output"], self.values["monitors"]
        try:
            return FlowConfig(
                t_end=t["t_end"], cfl=t["cfl"], kappa_stop=t["kappa_stop"],
                length_stop=t["length_stop"], tangential=self.get("tangential", "enabled"),
                v0=self.get("tangential", "v0"), record_every=o["record_every"],
                record_dt=t["record_dt"], spectral_cutoff=t["spectral_cutoff"],
                method=t["method"], max_steps=t["max_steps"], flat_tol=m["flat_tol"],
                pinch_tol=m["pinch_tol"], extent_factor=m["extent_factor"])
        except ConfigError as e:
            raise ConfigError(f"{self.path}: [time] {e}") from None

    def curve(self):
        """Build the initial framed curve."""
        v = self.values["curve"]
        kind = v["kind"].lower()
        if kind not in CURVE_KINDS:
            raise self.error("curve", "kind", f"expected one of {CURVE_KINDS}, got {kind!r}")
        try:
            if kind == "file":
                path = v["path"]
                if not os.path.isabs(path):
                    path = os.path.join(os.path.dirname(os.path.abspath(self.path)), path)
                if not os.path.exists(path):
                    raise self.error("curve", "path", f"file not found: {path}")
                return read_curve(path)
            n = v["n"]
            if kind == "helix" and v["w"] != 0:
                c = make_helix(v["radius"], v["w"], n, v["theta0"])
            else:
                c = make_circle(v["radius"], n, v["theta0"])
            u, _ = _fd.grid(n)
            X = c.positions.copy()
            if v["r_amp"]:
                X[:, :2] *= (1.0 + v["r_amp"] * np.cos(v["r_mode"] * u))[:, None]
            if v["z_amp"]:
                X[:, 2] += v["z_amp"] * v["radius"] * np.sin(v["z_mode"] * u)
            return FramedCurve(X, c.angles + v["degree"] * u, c.boundary, c.pitch)
        except ConfigError:
            raise
        except FramedFlowError as e:
            raise self.error("curve", "kind", str(e)) from None

    def resolved(self):
        """JSON-friendly copy of all values."""
        out = {}
        for sec, vals in self.values.items():
            out[sec] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vals.items()}
        out["output"]["dir"] = self.output_dir
        return out


def _key_lines(text):
    lines, section = {}, None
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip().lower()
            lines.setdefault((section, None), i)
        elif section is not None:
            for sep in "=:":
                if sep in s:
                    lines.setdefault((section, s.split(sep, 1)[0].strip().lower()), i)
                    break
    return lines


def _convert(kind, raw):
    raw = raw.strip()
    if kind.endswith("?"):
        if raw.lower() in ("", "none"):
            return None
        kind = kind[:-1]
    if kind == "str":
        return raw
    if kind == "float":
        return float(raw)
    if kind == "int":
        return int(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "vec":
        parts = [float(x) for x in raw.replace(",", " ").split()]
        if len(parts) != 3:
            raise ValueError("expected three numbers")
        return tuple(parts)
    if kind == "vecs":
        vecs = []
        for chunk in raw.split(";"):
            if chunk.strip():
                vecs.append(_convert("vec", chunk))
        return tuple(vecs)
    raise ValueError(f"unknown type {kind}")


def parse_config(text, path="<string>"):
    """Parse configuration text into a :class:`RunConfig`."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    lines = _key_lines(text)
    values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    cfg = RunConfig(path, values, lines)
    for sec in cp.sections():
        low = sec.lower()
        if low not in SCHEMA:
            ln = lines.get((low, None))
            raise ConfigError(f"{path}:{ln}: unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if (low, key) in ALIASES:
                alias, key = key, ALIASES[(low, key)]
                lines.setdefault((low, key), lines.get((low, alias)))
            if key not in SCHEMA[low]:
                raise cfg.error(low, key, "unknown key")
            kind = SCHEMA[low][key][0]
            try:
                values[low][key] = _convert(kind, raw)
            except ValueError as e:
                raise cfg.error(low, key, f"bad value {raw!r} ({e})") from None
    return cfg


def load_config(path):
    """Read and parse a configuration file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text, path)
