"""Light-cone timing between the ring, a field detector and the solenoid.

All distances are radial and in penetration depths; all times are in
``xi^2/D``.  The solenoid's response to the cooling is bounded by a
light-speed front launched at the phase transition, which is the earliest
it could possibly arrive.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .units import CODATA, MaterialProps, PhysicalConstants, length_from_normalized

PLAUSIBLE_GAP_M = 1.0


class InvalidGeometryError(ValueError):
    pass


def light_time_per_lambda(material: MaterialProps, constants: PhysicalConstants = CODATA) -> float:
    """Time for light to cross one penetration depth: ``D lambda / (c xi^2)``."""
    return material.diffusion * material.lam / (constants.speed_of_light * material.xi**2)


def min_radius_for_window(t_eq: float, material: MaterialProps, constants: PhysicalConstants = CODATA) -> float:
    """Gap (in lambda) that light crosses during ``t_eq``.

    The ring-solenoid distance must exceed this for the organized current to
    form before any signal could reach the solenoid.
    """
    if t_eq < 0:
        raise ValueError(f"t_eq must be >= 0, got {t_eq}")
    return t_eq / light_time_per_lambda(material, constants)


@dataclass(frozen=True)
class CausalScenario:
    material: MaterialProps
    ring_radius_norm: float
    gap_norm: float  # ring-solenoid distance d
    equilibration_time_norm: float
    transition_time_norm: float = 0.0
    cooling_duration_norm: float = 0.0

    def __post_init__(self):
        for name in ("ring_radius_norm", "gap_norm", "equilibration_time_norm"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidGeometryError(f"{name} must be positive, got {v}")
        if self.cooling_duration_norm < 0:
            raise InvalidGeometryError("cooling_duration_norm must be >= 0")
        # cooling must finish before light makes the ring-solenoid round trip
        round_trip = 2.0 * self.gap_norm * light_time_per_lambda(self.material)
        if self.cooling_duration_norm >= round_trip:
            raise InvalidGeometryError(
                f"cooling takes {self.cooling_duration_norm:g}, not shorter than the "
                f"light round trip {round_trip:g}"
            )


def detector_window(scenario: CausalScenario, detector_position: float) -> tuple[float, float]:
    """Interval in which a detector at ``detector_position`` (lambda from the ring)
    can see the ring's signal but not a solenoid response."""
    d = scenario.gap_norm
    if not (0 < detector_position < d):
        raise InvalidGeometryError(f"detector position {detector_position} outside the gap (0, {d})")
    tau = light_time_per_lambda(scenario.material)
    t0 = scenario.transition_time_norm
    return t0 + detector_position * tau, t0 + (2.0 * d - detector_position) * tau


def signal_precedes_response(scenario: CausalScenario, detector_position: float) -> bool:
    """Whether a current formed after ``equilibration_time_norm`` reaches the detector inside its window."""
    t_open, t_close = detector_window(scenario, detector_position)
    return t_open + scenario.equilibration_time_norm < t_close


@dataclass
class FeasibilityReport:
    material: str
    t_eq_norm: float | None
    r_min_lambda: float | None
    d_min_m: float | None
    plausible: bool | None
    inconclusive: bool = False
    assumptions: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


_ASSUMPTIONS = [
    "solenoid response modeled as a light-speed front launched at the phase transition",
    "cooling treated as instantaneous at the transition time",
    "t_eq is the largest measured mean equilibration time in the sweep",
    f"plausible means a required gap of at most {PLAUSIBLE_GAP_M:g} m",
]


def feasibility_report(materials: list[MaterialProps], t99_values) -> list[FeasibilityReport]:
    """Required ring-solenoid gap for each material, given measured mean t99 values.

    ``t99_values`` may be plain numbers or sweep rows with a ``mean_t99``
    attribute; ``None`` entries are skipped.
    """
    ts = []
    for v in t99_values:
        v = getattr(v, "mean_t99", v)
        if v is not None and math.isfinite(v):
            ts.append(float(v))
    reports = []
    for mat in materials:
        if not ts:
            reports.append(FeasibilityReport(mat.name, None, None, None, None, True, list(_ASSUMPTIONS)))
            continue
        t_eq = max(ts)
        r_min = min_radius_for_window(t_eq, mat)
        d_min = length_from_normalized(r_min, mat)
        reports.append(
            FeasibilityReport(mat.name, t_eq, r_min, d_min, d_min <= PLAUSIBLE_GAP_M, False, list(_ASSUMPTIONS))
        )
    return reports
