"""Stochastic normalized TDGL on a thin ring.

The order parameter ``psi(phi, t)`` lives on ``M`` equally spaced points of
``[0, 2 pi)`` and obeys

    d psi/dt = (1 - |psi|^2) psi - (-i/(R kappa) d/dphi - A)^2 psi + eta,
    A = Phi / (kappa R),

with lengths in penetration depths, time in ``xi^2/D`` and flux in flux
quanta.  In Fourier space the linear part is diagonal: mode ``k`` grows at
``1 - ((k - Phi)/(kappa R))^2``.  Time stepping is first-order exponential
time differencing (ETD1): the linear part is propagated exactly per mode,
the cubic term is taken explicitly, and the noise is added after the update.

Noise: on every step ``sample_points`` complex Gaussians (real and imaginary
parts independent, each with standard deviation ``sigma``) are drawn at equally
spaced anchor angles and linearly interpolated, periodically, onto the grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

MIN_GRID_POINTS = 8
AMPLITUDE_BOUND = 2.0


class NumericalBlowup(RuntimeError):
    def __init__(self, step_index: int, time: float, reason: str = "non-finite sample"):
        super().__init__(f"numerical blow-up at step {step_index} (t={time:g}): {reason}")
        self.step_index = step_index
        self.time = time
        self.reason = reason


class NoiseScaling(str, enum.Enum):
    PER_STEP = "per_step"  # sigma per step, independent of dt
    SQRT_DT = "sqrt_dt"  # sigma * sqrt(dt) per step (Wiener increment)


class Interpolation(str, enum.Enum):
    LINEAR = "linear"


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 1e-6
    sample_points: int = 200
    interpolation: Interpolation = Interpolation.LINEAR
    scaling: NoiseScaling = NoiseScaling.PER_STEP

    def __post_init__(self):
        object.__setattr__(self, "interpolation", Interpolation(self.interpolation))
        object.__setattr__(self, "scaling", NoiseScaling(self.scaling))
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"noise sigma must be >= 0, got {self.sigma}")
        if int(self.sample_points) != self.sample_points or self.sample_points < 2:
            raise ValueError(f"noise sample_points must be an integer >= 2, got {self.sample_points}")

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "sample_points": self.sample_points,
            "interpolation": self.interpolation.value,
            "scaling": self.scaling.value,
        }


def default_grid_points(flux_norm: float) -> int:
    """``max(256, next power of two >= 8 * ceil(|Phi|))``."""
    need = 8 * math.ceil(abs(flux_norm))
    return max(256, 1 << max(0, (need - 1).bit_length()))


@dataclass(frozen=True)
class RingConfig:
    radius_norm: float
    flux_norm: float
    kappa: float = 0.8
    grid_points: int | None = None  # None -> default_grid_points(flux_norm)
    dt: float = 1e-2
    t_max: float = 60.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    coarse_grid: bool = False  # allow grids too coarse to hold the selected winding

    def __post_init__(self):
        if not (math.isfinite(self.radius_norm) and self.radius_norm > 0):
            raise ValueError(f"radius_norm must be > 0, got {self.radius_norm}")
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not math.isfinite(self.flux_norm):
            raise ValueError("flux_norm must be finite")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (math.isfinite(self.t_max) and self.t_max >= 0):
            raise ValueError(f"t_max must be >= 0, got {self.t_max}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not math.isfinite(self.vector_potential):
            raise ValueError("vector potential Phi/(kappa R) is not finite")
        if isinstance(self.noise, dict):
            object.__setattr__(self, "noise", NoiseSpec(**self.noise))
        if self.grid_points is None:
            object.__setattr__(self, "grid_points", default_grid_points(self.flux_norm))
        m = self.grid_points
        if int(m) != m or m < MIN_GRID_POINTS:
            raise ValueError(f"grid_points must be an integer >= {MIN_GRID_POINTS}, got {m}")
        object.__setattr__(self, "grid_points", int(m))
        if not self.coarse_grid and not self.resolves_winding:
            raise ValueError(
                f"grid of {m} points cannot represent winding {round(self.flux_norm)}; "
                "use more points or set coarse_grid=True for the envelope regime"
            )

    @property
    def vector_potential(self) -> float:
        return self.flux_norm / (self.kappa * self.radius_norm)

    @property
    def resolves_winding(self) -> bool:
        n0 = round(self.flux_norm)
        return -self.grid_points // 2 <= n0 < self.grid_points // 2

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def with_(self, **changes) -> "RingConfig":
        # grid_points=None re-derives the default for the new flux
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "radius_norm": self.radius_norm,
            "flux_norm": self.flux_norm,
            "kappa": self.kappa,
            "grid_points": self.grid_points,
            "dt": self.dt,
            "t_max": self.t_max,
            "noise": self.noise.to_dict(),
            "seed": self.seed,
            "coarse_grid": self.coarse_grid,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RingConfig":
        d = dict(d)
        noise = d.pop("noise", None)
        if noise is not None and not isinstance(noise, NoiseSpec):
            noise = NoiseSpec(**noise)
        return cls(**d, **({"noise": noise} if noise is not None else {}))


@dataclass(frozen=True, eq=False)
class FieldState:
    psi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=np.complex128)
        if psi.ndim != 1:
            raise ValueError("psi must be one-dimensional")
        object.__setattr__(self, "psi", psi)

    @property
    def grid_points(self) -> int:
        return self.psi.shape[0]

    def validate(self, config: RingConfig | None = None) -> None:
        if config is not None and self.grid_points != config.grid_points:
            raise ValueError(f"state has {self.grid_points} samples, config expects {config.grid_points}")
        if not np.all(np.isfinite(self.psi)):
            raise ValueError("state contains non-finite samples")
        if np.max(np.abs(self.psi), initial=0.0) > AMPLITUDE_BOUND:
            raise ValueError(f"|psi| exceeds the sanity bound {AMPLITUDE_BOUND}")

    def __eq__(self, other):
        if not isinstance(other, FieldState):
            return NotImplemented
        return self.time == other.time and np.array_equal(self.psi, other.psi)


@dataclass(frozen=True, eq=False)
class CurrentProfile:
    j: np.ndarray
    integrated: float
    time: float


def grid_angles(m: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(m) / m


def wavenumbers(m: int) -> np.ndarray:
    """Integer mode numbers in FFT order, ``[0, 1, ..., M/2-1, -M/2, ..., -1]``."""
    return np.fft.fftfreq(m, 1.0 / m)


def linear_symbol(config: RingConfig, k):
    """Per-mode linear growth rate ``1 - (k/(R kappa) - A)^2``."""
    shift = (np.asarray(k, dtype=float) - config.flux_norm) / (config.kappa * config.radius_norm)
    out = 1.0 - shift * shift
    return float(out) if np.ndim(out) == 0 else out


def target_mode(config: RingConfig) -> int:
    """Grid mode with the largest linear growth rate.

    Equals the selected winding ``round(Phi)`` whenever the grid resolves it;
    on coarse grids it is the representable mode closest to ``Phi``.
    """
    m = config.grid_points
    n0 = int(round(config.flux_norm))
    return min(max(n0, -(m // 2)), m // 2 - 1)


def make_rng(master_seed: int, run_index: int = 0) -> np.random.Generator:
    """Philox4x64 stream keyed by ``SeedSequence([master_seed, run_index])``.

    Streams for different run indices are statistically independent, and the
    stream for a given run does not depend on how many other runs exist.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(master_seed), int(run_index)])))


class Integrator:
    """Precomputed ETD1 propagator and noise interpolation for one config."""

    def __init__(self, config: RingConfig):
        self.config = config
        m = config.grid_points
        self.k = wavenumbers(m)
        self.rate = linear_symbol(config, self.k)
        h = config.dt
        self.decay = np.exp(self.rate * h)
        with np.errstate(divide="ignore", invalid="ignore"):
            phi1 = np.expm1(self.rate * h) / self.rate
        self.phi1 = np.where(self.rate == 0.0, h, phi1)
        # odd derivative: drop the unpaired Nyquist mode
        self.ik = 1j * self.k
        if m % 2 == 0:
            self.ik[m // 2] = 0.0

        noise = config.noise
        p = noise.sample_points
        pos = np.arange(m) * (p / m)
        left = np.floor(pos)
        self._w = pos - left
        self._i0 = left.astype(np.intp) % p
        self._i1 = (self._i0 + 1) % p
        self.noise_amplitude = noise.sigma * (math.sqrt(h) if noise.scaling is NoiseScaling.SQRT_DT else 1.0)

    def noise(self, rng: np.random.Generator) -> np.ndarray:
        p = self.config.noise.sample_points
        if self.noise_amplitude == 0.0:
            return np.zeros(self.config.grid_points, dtype=np.complex128)
        draws = rng.normal(0.0, self.noise_amplitude, size=(2, p))
        anchors = draws[0] + 1j * draws[1]
        return (1.0 - self._w) * anchors[self._i0] + self._w * anchors[self._i1]

    def advance(self, psi: np.ndarray, rng: np.random.Generator | None, step_index: int = 0) -> np.ndarray:
        psi_hat = sfft.fft(psi)
        cubic = -(psi.real**2 + psi.imag**2) * psi
        psi_hat *= self.decay
        psi_hat += self.phi1 * sfft.fft(cubic)
        out = sfft.ifft(psi_hat, overwrite_x=True)
        if self.noise_amplitude:
            if rng is None:
                raise ValueError("an RNG is required when noise sigma > 0")
            out += self.noise(rng)
        amp = np.max(np.abs(out))
        if not math.isfinite(amp):
            raise NumericalBlowup(step_index, (step_index + 1) * self.config.dt)
        if amp > AMPLITUDE_BOUND:
            raise NumericalBlowup(step_index, (step_index + 1) * self.config.dt, f"|psi| = {amp:.3g} > {AMPLITUDE_BOUND}")
        return out


@lru_cache(maxsize=32)
def integrator_for(config: RingConfig) -> Integrator:
    return Integrator(config)


def init_metastable(config: RingConfig) -> FieldState:
    return FieldState(np.zeros(config.grid_points, dtype=np.complex128), 0.0)


def plane_wave(config: RingConfig, k: int, amplitude: complex) -> FieldState:
    phi = grid_angles(config.grid_points)
    return FieldState(amplitude * np.exp(1j * k * phi), 0.0)


def step(state: FieldState, config: RingConfig, rng: np.random.Generator | None = None) -> FieldState:
    """Advance ``state`` by one ``dt`` (ETD1 + additive noise)."""
    if state.grid_points != config.grid_points:
        raise ValueError(f"state has {state.grid_points} samples, config expects {config.grid_points}")
    integ = integrator_for(config)
    index = int(round(state.time / config.dt))
    psi = integ.advance(state.psi, rng, index)
    return FieldState(psi, state.time + config.dt)


def noise_field(config: RingConfig, rng: np.random.Generator) -> np.ndarray:
    return integrator_for(config).noise(rng)


def current_density(psi: np.ndarray, config: RingConfig) -> np.ndarray:
    """Dimensionless ``j = Im(psi* dpsi/dphi)/(kappa R) - A |psi|^2`` with a spectral derivative."""
    integ = integrator_for(config)
    dpsi = sfft.ifft(integ.ik * sfft.fft(psi))
    return (np.conj(psi) * dpsi).imag / (config.kappa * config.radius_norm) - config.vector_potential * (
        psi.real**2 + psi.imag**2
    )


def integrated_current(psi: np.ndarray, config: RingConfig) -> float:
    j = current_density(psi, config)
    return float(np.sum(j) * (2.0 * np.pi / psi.shape[0]))


def current_profile(state: FieldState, config: RingConfig) -> CurrentProfile:
    j = current_density(state.psi, config)
    return CurrentProfile(j=j, integrated=float(np.sum(j) * (2.0 * np.pi / j.shape[0])), time=state.time)


def winding_number(state: FieldState | np.ndarray, sigma: float = 1e-6) -> int | None:
    """Net phase winding around the ring, or None if ``min |psi| < 10 sigma``."""
    psi = state.psi if isinstance(state, FieldState) else np.asarray(state)
    floor = max(10.0 * sigma, np.finfo(float).tiny)
    if np.min(np.abs(psi)) < floor:
        return None
    dphase = np.angle(np.roll(psi, -1) * np.conj(psi))
    return int(round(float(np.sum(dphase)) / (2.0 * np.pi)))


def mode_amplitude(state: FieldState | np.ndarray, k: int) -> float:
    """``|(1/M) sum_i psi_i exp(-i k phi_i)|``."""
    psi = state.psi if isinstance(state, FieldState) else np.asarray(state)
    m = psi.shape[0]
    if abs(k) > m // 2:
        raise ValueError(f"mode {k} not representable on {m} points")
    phase = np.exp(-1j * k * grid_angles(m))
    return float(abs(np.dot(psi, phase)) / m)


def mean_amplitude(state: FieldState | np.ndarray) -> float:
    psi = state.psi if isinstance(state, FieldState) else np.asarray(state)
    return float(np.mean(np.abs(psi)))
