"""Unit-suffixed literals such as ``"17.6 kPa"`` normalized to SI."""
from __future__ import annotations

import math
import re

_SCALE = {
    "": 1.0,
    # length
    "m": 1.0, "cm": 1e-2, "mm": 1e-3,
    # force
    "N": 1.0, "kN": 1e3, "MN": 1e6,
    # moment
    "N*m": 1.0, "N.m": 1.0, "Nm": 1.0, "kN*m": 1e3, "kN.m": 1e3, "kNm": 1e3, "MN*m": 1e6,
    # stress, modulus
    "Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9,
    # time
    "s": 1.0, "min": 60.0, "h": 3600.0,
    # density
    "kg/m3": 1.0, "kg/m^3": 1.0, "g/cm3": 1e3, "g/cm^3": 1e3,
    # strain
    "ue": 1e-6, "microstrain": 1e-6,
    # angle (degrees are the working unit)
    "deg": 1.0,
    "%": 1e-2,
}

_LITERAL = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z%*/.^0-9]*)\s*$")


class UnitError(ValueError):
    pass


def parse_quantity(value) -> float:
    """Return ``value`` in SI units.

    Numbers pass through unchanged; strings are ``<number> [unit]``.

    >>> parse_quantity("17.6 kPa")
    17600.0
    """
    if isinstance(value, bool):
        raise UnitError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise UnitError(f"expected a number or unit literal, got {value!r}")
    text = value.strip()
    if text.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    m = _LITERAL.match(text)
    if not m:
        raise UnitError(f"cannot parse quantity {value!r}")
    number, unit = m.groups()
    if unit not in _SCALE:
        raise UnitError(f"unknown unit {unit!r} in {value!r}")
    return float(number) * _SCALE[unit]
