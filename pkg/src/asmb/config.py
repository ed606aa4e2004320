"""Engine tuning parameters and the config file reader.

Config files are ini-style with a single flat [physics] section of
key = value pairs; anything unknown is rejected so typos fail loudly.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace

from .errors import SchemaViolation


@dataclass(frozen=True)
class PhysicsConfig:
    dt: float = 1.0 / 60.0
    # tracker-to-object spring-damper coupling
    k_lin: float = 60.0
    c_lin: float = 12.0
    k_rot: float = 40.0
    c_rot: float = 10.0
    # collision penalty gain
    k_c: float = 600.0
    # fraction of velocity removed each step
    velocity_damping: float = 0.02
    # heavier damping used while relaxing spring layouts
    relax_damping: float = 0.10
    # apply contact forces at the contact point (torque) or through the COM
    contact_torque: bool = True

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_FIELD_TYPES = {f.name: f.type for f in fields(PhysicsConfig)}


def config_from_mapping(data: dict, base: PhysicsConfig | None = None) -> PhysicsConfig:
    cfg = base or PhysicsConfig()
    updates = {}
    for key, value in data.items():
        if key not in _FIELD_TYPES:
            raise SchemaViolation(f"physics/{key}", "unknown physics setting")
        if _FIELD_TYPES[key] == "bool":
            if isinstance(value, str):
                if value.lower() not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                    raise SchemaViolation(f"physics/{key}", f"not a boolean: {value!r}")
                value = value.lower() in ("true", "1", "yes", "on")
            else:
                value = bool(value)
        else:
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise SchemaViolation(f"physics/{key}", f"not a number: {value!r}") from None
        updates[key] = value
    return replace(cfg, **updates)


def load_config(path: str, base: PhysicsConfig | None = None) -> PhysicsConfig:
    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    for section in parser.sections():
        if section != "physics":
            raise SchemaViolation(section, "only a [physics] section is allowed")
    if not parser.has_section("physics"):
        return base or PhysicsConfig()
    return config_from_mapping(dict(parser.items("physics")), base)
