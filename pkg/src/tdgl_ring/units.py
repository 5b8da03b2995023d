"""Physical constants, material presets and normalized-unit conversions.

Normalized units used throughout the package:

* length  -> penetration depth ``lambda``
* time    -> ``xi**2 / D``
* flux    -> flux quantum ``pi * hbar / e``
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path


class InvalidMaterialError(ValueError):
    pass


class MaterialNotFoundError(LookupError):
    pass


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.054571817e-34  # J s
    elementary_charge: float = 1.602176634e-19  # C
    speed_of_light: float = 299792458.0  # m/s

    def __post_init__(self):
        for name in ("hbar", "elementary_charge", "speed_of_light"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")


CODATA = PhysicalConstants()
ELECTRON_MASS = 9.1093837015e-31  # kg


@dataclass(frozen=True)
class MaterialProps:
    name: str
    xi: float  # coherence length, m
    lam: float  # penetration depth, m
    diffusion: float  # m^2/s

    def __post_init__(self):
        for name in ("xi", "lam", "diffusion"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidMaterialError(
                    f"material {self.name!r}: {name} must be positive and finite, got {v!r}"
                )

    def kappa(self) -> float:
        return self.lam / self.xi

    @property
    def time_unit(self) -> float:
        """Seconds per normalized time unit, ``xi**2 / D``."""
        return self.xi**2 / self.diffusion

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "xi_m": self.xi,
            "lambda_m": self.lam,
            "diffusion_m2s": self.diffusion,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MaterialProps":
        try:
            return cls(
                name=str(obj["name"]),
                xi=float(obj["xi_m"]),
                lam=float(obj["lambda_m"]),
                diffusion=float(obj["diffusion_m2s"]),
            )
        except KeyError as exc:
            raise InvalidMaterialError(f"material entry missing key {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidMaterialError):
                raise
            raise InvalidMaterialError(f"bad material entry {obj!r}: {exc}") from None


def flux_quantum(constants: PhysicalConstants = CODATA) -> float:
    """Superconducting flux quantum ``pi * hbar / e`` in Wb."""
    return math.pi * constants.hbar / constants.elementary_charge


def _check_material(material: MaterialProps) -> None:
    if not isinstance(material, MaterialProps):
        raise InvalidMaterialError(f"expected MaterialProps, got {type(material).__name__}")
    # MaterialProps validates on construction, but object.__setattr__ can bypass that
    for v in (material.xi, material.lam, material.diffusion):
        if not (math.isfinite(v) and v > 0):
            raise InvalidMaterialError(f"material {material.name!r} has nonpositive fields")


def time_to_normalized(t_si: float, material: MaterialProps) -> float:
    _check_material(material)
    return t_si * material.diffusion / material.xi**2


def time_from_normalized(t_norm: float, material: MaterialProps) -> float:
    _check_material(material)
    return t_norm * material.xi**2 / material.diffusion


def length_to_normalized(x_si: float, material: MaterialProps) -> float:
    _check_material(material)
    return x_si / material.lam


def length_from_normalized(x_norm: float, material: MaterialProps) -> float:
    _check_material(material)
    return x_norm * material.lam


@dataclass(frozen=True)
class UnitSystem:
    """Bundles a material with the constants needed for flux conversions."""

    material: MaterialProps
    constants: PhysicalConstants = field(default=CODATA)

    def time_to_normalized(self, t_si: float) -> float:
        return time_to_normalized(t_si, self.material)

    def time_from_normalized(self, t_norm: float) -> float:
        return time_from_normalized(t_norm, self.material)

    def length_to_normalized(self, x_si: float) -> float:
        return length_to_normalized(x_si, self.material)

    def length_from_normalized(self, x_norm: float) -> float:
        return length_from_normalized(x_norm, self.material)

    def flux_to_normalized(self, flux_wb: float) -> float:
        return flux_wb / flux_quantum(self.constants)

    def flux_from_normalized(self, flux_norm: float) -> float:
        return flux_norm * flux_quantum(self.constants)


# Niobium: xi ~ lambda ~ 40 nm. D spans roughly 1e-4 (dirty) to 1e-1 m^2/s (clean).
_BUILTIN = (
    MaterialProps("niobium-impure", xi=4e-8, lam=4e-8, diffusion=1e-4),
    MaterialProps("niobium-pure", xi=4e-8, lam=4e-8, diffusion=1e-1),
)


def builtin_materials() -> list[MaterialProps]:
    return list(_BUILTIN)


def load_materials(path: str | Path) -> list[MaterialProps]:
    """Read a JSON array of ``{name, xi_m, lambda_m, diffusion_m2s}`` objects."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise InvalidMaterialError(f"{path}: expected a JSON array of materials")
    return [MaterialProps.from_json(obj) for obj in data]


def material_table(extra: list[MaterialProps] | None = None) -> dict[str, MaterialProps]:
    """Built-in materials overlaid with ``extra`` (later entries win on name clash)."""
    table = {m.name: m for m in _BUILTIN}
    for m in extra or ():
        table[m.name] = m
    return table


def get_material(name: str, extra: list[MaterialProps] | None = None) -> MaterialProps:
    table = material_table(extra)
    try:
        return table[name]
    except KeyError:
        raise MaterialNotFoundError(
            f"unknown material {name!r}; known: {', '.join(sorted(table))}"
        ) from None
