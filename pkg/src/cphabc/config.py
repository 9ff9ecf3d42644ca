"""Run configuration: flat ``key = value`` files with optional section headers,
inline ``key=value`` overrides, validation, and provenance of every value."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import tomli

from .harness import CaseSpec, case_catalog


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


# key -> (type, check, description of the check)
CASE_KEYS = {
    "order": (int, lambda v: 1 <= v <= 1_000_000, "1 <= order <= 1000000"),
    "keep_fraction": (float, lambda v: 0 < v <= 1, "0 < keep_fraction <= 1"),
    "h": (float, _positive, "h > 0"),
    "dt": (float, _positive, "dt > 0"),
    "T": (float, _positive, "T > 0"),
    "c_f": (float, _positive, "c_f > 0"),
    "sigma": (float, _nonneg, "sigma >= 0"),
    "epsilon": (float, _nonneg, "epsilon >= 0"),
    "rho": (float, _positive, "rho > 0"),
    "g": (float, _nonneg, "g >= 0"),
    "l": (float, _positive, "l > 0"),
    "l_ref": (float, _positive, "l_ref > 0"),
    "depth": (float, _positive, "depth > 0"),
    "A": (float, lambda v: True, ""),
    "n_f": (int, lambda v: v >= 1, "n_f >= 1"),
    "T_e": (float, _positive, "T_e > 0"),
    "T_excit": (float, _nonneg, "T_excit >= 0"),
    "x0": (float, lambda v: True, ""),
    "p": (int, lambda v: 1 <= v <= 4, "1 <= p <= 4"),
    "habc_sides": (bool, lambda v: True, ""),
    "habc_bottom": (bool, lambda v: True, ""),
    "corner": (str, lambda v: v in ("ode", "neumann"), "corner in {ode, neumann}"),
    "compat_mode": (str, lambda v: v in ("a", "b"), "compat_mode in {a, b}"),
    "allow_incompatible": (bool, lambda v: True, ""),
    "ref_order": (int, lambda v: v >= 1, "ref_order >= 1"),
    "nodes": (str, lambda v: v in ("gll", "equispaced"), "nodes in {gll, equispaced}"),
}

RUN_KEYS = {
    "case": (str, lambda v: v in case_catalog(), "case in the built-in catalog"),
    "profile": (str, lambda v: v in ("desk", "paper"), "profile in {desk, paper}"),
    "out": (str, lambda v: bool(v), "non-empty path"),
    "stride": (int, lambda v: v >= 1, "stride >= 1"),
    "dump_system": (str, lambda v: True, ""),
}

SECTIONS = {"run": RUN_KEYS, "case": CASE_KEYS}
_ALL_KEYS = {**RUN_KEYS, **CASE_KEYS}


@dataclass(frozen=True)
class RunConfig:
    case: str = "1"
    profile: str = "desk"
    out: str = "out"
    stride: int = 1
    dump_system: str = ""
    overrides: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict, compare=False)

    def case_spec(self) -> CaseSpec:
        base = case_catalog()[self.case]
        if self.profile == "desk":
            base = base.desk()
        return replace(base, **self.overrides)

    @property
    def allow_incompatible(self) -> bool:
        return bool(self.overrides.get("allow_incompatible", False))

    def source(self, key: str) -> str:
        return self.provenance.get(key, "default")

    def to_text(self) -> str:
        """Serialize the effective configuration (re-parses to an equal config)."""
        lines = ["[run]"]
        for key in RUN_KEYS:
            lines.append(f"{key} = {_toml_value(getattr(self, key))}")
        lines.append("")
        lines.append("[case]")
        for key in CASE_KEYS:
            if key in self.overrides:
                lines.append(f"{key} = {_toml_value(self.overrides[key])}")
        return "\n".join(lines) + "\n"


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _coerce(key: str, value):
    typ, check, rule = _ALL_KEYS[key]
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
    elif typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
    elif typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        value = float(value)
    elif typ is str:
        if isinstance(value, bool):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        value = str(value)
    if not check(value):
        raise ConfigError(f"{key}: {value!r} violates {rule}")
    return value


def _flatten(doc: dict) -> dict:
    flat = {}
    for key, value in doc.items():
        if isinstance(value, dict):
            if key not in SECTIONS:
                raise ConfigError(f"{key}: unknown section")
            for k, v in value.items():
                if k not in SECTIONS[key]:
                    raise ConfigError(f"{k}: unknown key in section [{key}]")
                flat[k] = v
        else:
            if key not in _ALL_KEYS:
                raise ConfigError(f"{key}: unknown key")
            flat[key] = value
    return flat


def parse_value(text: str):
    """Interpret an inline value: TOML scalar if it parses, else a bare string."""
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def parse_inline(items) -> dict:
    """``["case=211", "keep_fraction=0.06"]`` -> ``{"case": "211", ...}``."""
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"{item}: expected key=value")
        key, _, text = item.partition("=")
        key = key.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"{key}: unknown key")
        out[key] = parse_value(text.strip())
    return out


def parse_config(path=None, overrides=None, text: str | None = None) -> RunConfig:
    """Merge defaults, a config file (or ``text``), and flag overrides.

    Later sources win; every value is validated and tagged with where it
    came from (``default``, ``file`` or ``flag``).
    """
    values: dict = {}
    prov: dict = {}
    if path is not None:
        text = Path(path).read_text()
    if text is not None:
        try:
            doc = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        for k, v in _flatten(doc).items():
            values[k], prov[k] = v, "file"
    for k, v in (overrides or {}).items():
        if k not in _ALL_KEYS:
            raise ConfigError(f"{k}: unknown key")
        values[k], prov[k] = v, "flag"

    if "case" in values and not isinstance(values["case"], str):
        values["case"] = str(values["case"])
    coerced = {k: _coerce(k, v) for k, v in values.items()}
    run_fields = {f.name for f in fields(RunConfig)} & set(RUN_KEYS)
    cfg = RunConfig(
        **{k: coerced[k] for k in run_fields if k in coerced},
        overrides={k: coerced[k] for k in CASE_KEYS if k in coerced},
        provenance=prov,
    )
    try:
        cfg.case_spec()
    except ValueError as exc:
        keys = ", ".join(sorted(cfg.overrides)) or "case"
        raise ConfigError(f"{keys}: {exc}") from exc
    return cfg
