"""Model/prototype scaling under equal-modulus similitude."""
from __future__ import annotations

import math
from dataclasses import dataclass

KINDS = ("length", "displacement", "strain", "stress", "pressure", "force", "moment")

ALLOWABLE_DISPLACEMENT = 0.100  # m, prototype scale


class ScaleError(ValueError):
    pass


@dataclass(frozen=True)
class ScaleLaw:
    """Prototype-to-model ratios for length, elastic modulus and density."""

    length_ratio: float = 10.0
    modulus_ratio: float = 1.0
    density_ratio: float = 1.0

    def __post_init__(self):
        for name in ("length_ratio", "modulus_ratio", "density_ratio"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ScaleError(f"{name} must be positive and finite")

    def ratio(self, kind: str) -> float:
        L, E = self.length_ratio, self.modulus_ratio
        table = {
            "length": L,
            "displacement": L,
            "strain": 1.0,
            "stress": E,
            "pressure": E,
            "force": E * L * L,
            "moment": E * L ** 3,
        }
        try:
            return table[kind]
        except KeyError:
            raise ScaleError(f"unknown quantity kind {kind!r}; expected one of {KINDS}") from None

    @property
    def gravity_distortion(self) -> float:
        """Self-weight stress mismatch between model and prototype."""
        return self.density_ratio * self.length_ratio / self.modulus_ratio


def to_prototype(value: float, kind: str, law: ScaleLaw | None = None) -> float:
    return value * (law or ScaleLaw()).ratio(kind)


def to_model(value: float, kind: str, law: ScaleLaw | None = None) -> float:
    return value / (law or ScaleLaw()).ratio(kind)


def displacement_check(model_displacement: float, law: ScaleLaw | None = None,
                       allowable: float = ALLOWABLE_DISPLACEMENT) -> dict:
    """Scale a model displacement up and compare it with the allowable."""
    proto = to_prototype(abs(model_displacement), "displacement", law)
    return {"model": model_displacement, "prototype": proto, "allowable": allowable, "ok": proto < allowable}


def conversion_table(values: dict, law: ScaleLaw | None = None) -> list[dict]:
    """Rows of (name, kind, model, prototype) for ``{name: (value, kind)}``."""
    law = law or ScaleLaw()
    return [
        {"name": k, "kind": kind, "model": v, "prototype": to_prototype(v, kind, law)}
        for k, (v, kind) in values.items()
    ]
