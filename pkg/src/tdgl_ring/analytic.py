"""Closed-form single-mode solutions of the ring TDGL problem.

For the ansatz ``psi = c_n(t) exp(i n phi)`` on a thin ring threaded by flux
``Phi`` the Cooper-pair density ``rho_n = c_n**2`` obeys the logistic equation

    d rho / dt = 2 Gamma (-lambda_n - beta rho) rho,
    lambda_n   = alpha + hbar**2 / (2 m R**2) * (n - Phi/Phi_Q)**2.

Everything here is in SI units except where a function name says
``normalized``.  The flux is carried as the dimensionless ratio ``Phi/Phi_Q``
so that exact quantization (``ratio == n``) is represented exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .units import CODATA, ELECTRON_MASS, MaterialProps, PhysicalConstants, flux_quantum

EPSILON_MAX = 1e-2


class DomainError(ValueError):
    pass


class ModeRegime(enum.Enum):
    SUPPRESSED = "suppressed"
    SUPPORTED = "supported"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class AnalyticParams:
    gamma: float  # 1/(J s)
    alpha: float  # J, alpha0 (T - Tc); negative below Tc
    beta: float  # J per unit density
    mass_eff: float  # kg
    radius: float  # m
    flux_ratio: float  # Phi / Phi_Q
    epsilon: float  # rho_n(0)
    constants: PhysicalConstants = field(default=CODATA)

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be > 0, got {self.gamma}")
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if not self.radius > 0:
            raise DomainError(f"radius must be > 0, got {self.radius}")
        if not self.mass_eff > 0:
            raise DomainError(f"mass_eff must be > 0, got {self.mass_eff}")
        if not (0 < self.epsilon < EPSILON_MAX):
            raise DomainError(f"epsilon must lie in (0, {EPSILON_MAX}), got {self.epsilon}")
        for name in ("alpha", "flux_ratio"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @property
    def flux(self) -> float:
        """Enclosed flux in Wb."""
        return self.flux_ratio * flux_quantum(self.constants)

    @property
    def kinetic_scale(self) -> float:
        """``hbar**2 / (2 m* R**2)`` in J."""
        return self.constants.hbar**2 / (2.0 * self.mass_eff * self.radius**2)

    @classmethod
    def from_flux(cls, *, flux: float, constants: PhysicalConstants = CODATA, **kw) -> "AnalyticParams":
        return cls(flux_ratio=flux / flux_quantum(constants), constants=constants, **kw)

    @classmethod
    def from_normalized(
        cls,
        radius_norm: float,
        kappa: float,
        flux_norm: float,
        epsilon: float,
        material: MaterialProps,
        mass_eff: float = 2 * ELECTRON_MASS,
        constants: PhysicalConstants = CODATA,
    ) -> "AnalyticParams":
        """Dimensionful parameters whose dynamics match the normalized ring.

        Chooses ``alpha = -hbar^2/(2 m xi^2)`` (so ``xi`` is the GL coherence
        length), ``Gamma = 2 m D / hbar^2`` and ``beta = |alpha|`` (so the
        normalized density equals ``rho``).  The radius is ``R~ * kappa * xi``,
        i.e. ``kappa`` here overrides ``material.kappa()``.  With these choices
        ``-lambda_n / |alpha|`` equals the normalized linear growth rate and
        SI time is ``t~ * xi^2 / D``.
        """
        hb = constants.hbar
        alpha = -(hb**2) / (2.0 * mass_eff * material.xi**2)
        return cls(
            gamma=2.0 * mass_eff * material.diffusion / hb**2,
            alpha=alpha,
            beta=-alpha,
            mass_eff=mass_eff,
            radius=radius_norm * kappa * material.xi,
            flux_ratio=flux_norm,
            epsilon=epsilon,
            constants=constants,
        )


@dataclass(frozen=True)
class LondonParams:
    carrier_density: float  # n_s, 1/m^3
    carrier_charge: float  # e*, C
    carrier_mass: float  # m*, kg

    def __post_init__(self):
        if not self.carrier_density > 0:
            raise DomainError("carrier_density must be > 0")
        if not self.carrier_mass > 0:
            raise DomainError("carrier_mass must be > 0")
        if self.carrier_charge == 0 or not math.isfinite(self.carrier_charge):
            raise DomainError("carrier_charge must be nonzero and finite")


def lambda_n(params: AnalyticParams, n: int) -> float:
    """Linear rate coefficient (J); negative means mode ``n`` grows."""
    return params.alpha + params.kinetic_scale * (n - params.flux_ratio) ** 2


def winding_selector(flux_ratio: float) -> int:
    """Integer nearest to ``flux_ratio``; half-integer ties go to the even winding."""
    if not math.isfinite(flux_ratio):
        raise DomainError("flux_ratio must be finite")
    # round() on floats is correctly rounded and ties-to-even
    return int(round(flux_ratio))


def _rho(lam: float, gamma: float, beta: float, eps: float, t: float) -> float:
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if t == 0:
        return eps
    if lam == 0.0:
        return eps / (1.0 + 2.0 * gamma * beta * eps * t)
    x = 2.0 * gamma * lam * t
    if lam > 0:
        # divide through by exp(x) so the growing exponential never overflows
        decay = math.exp(-x)
        num = lam * eps * decay
        den = -beta * eps * decay + (beta * eps + lam)
    else:
        num = lam * eps
        den = -beta * eps + math.exp(x) * (beta * eps + lam)
    if den == 0 or (num != 0 and (num > 0) != (den > 0)):
        raise DomainError(
            f"closed-form density is singular/negative (lambda={lam}, eps={eps}, t={t})"
        )
    return num / den


def rho_closed_form(params: AnalyticParams, n: int, t: float) -> float:
    """Exact solution of the logistic density equation with ``rho(0) = epsilon``."""
    lam = lambda_n(params, n)
    return _rho(lam, params.gamma, params.beta, params.epsilon, t)


def rho_short_time(params: AnalyticParams, n: int, t: float) -> float:
    """Linearized density ``epsilon * exp(-2 Gamma lambda_n t)`` (nonlinearity dropped)."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return params.epsilon * math.exp(-2.0 * params.gamma * lambda_n(params, n) * t)


def rho_asymptotic(params: AnalyticParams, n: int) -> float:
    lam = lambda_n(params, n)
    if lam < 0:
        return -lam / params.beta
    # lam == 0 decays algebraically as eps/(1 + 2 Gamma beta eps t)
    return 0.0


def supercurrent(params: AnalyticParams, n: int, t: float) -> float:
    """Ring supercurrent ``(2 e hbar / m* R) rho_n(t) (n - Phi/Phi_Q)``."""
    c = params.constants
    pref = 2.0 * c.elementary_charge * c.hbar / (params.mass_eff * params.radius)
    return pref * rho_closed_form(params, n, t) * (n - params.flux_ratio)


def classify_mode(params: AnalyticParams, n: int) -> ModeRegime:
    lam = lambda_n(params, n)
    if lam < 0:
        return ModeRegime.SUPPORTED
    if lam == 0:
        return ModeRegime.MARGINAL
    return ModeRegime.SUPPRESSED


def london_current(lp: LondonParams, vector_potential: float) -> float:
    """London-gauge current density ``-(n_s e*^2 / m*) A``."""
    return -lp.carrier_density * lp.carrier_charge**2 / lp.carrier_mass * vector_potential


def normalized_rho(rate: float, epsilon: float, t: float) -> float:
    """Closed-form density in normalized units.

    ``rate`` is the normalized linear growth rate ``q`` of the mode; the
    equation is ``d rho/dt = 2 (q - rho) rho`` which is the SI problem with
    ``Gamma lambda -> -q`` and ``Gamma beta -> 1``.
    """
    return _rho(-rate, 1.0, 1.0, epsilon, t)
