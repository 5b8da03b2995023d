import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdgl_ring.analytic import normalized_rho
from tdgl_ring.tdgl import (
    FieldState,
    NoiseScaling,
    NoiseSpec,
    NumericalBlowup,
    RingConfig,
    current_density,
    current_profile,
    default_grid_points,
    grid_angles,
    init_metastable,
    integrated_current,
    linear_symbol,
    make_rng,
    mean_amplitude,
    mode_amplitude,
    noise_field,
    plane_wave,
    step,
    target_mode,
    winding_number,
)

QUIET = NoiseSpec(sigma=0.0)


def run(state, config, n, rng=None):
    for _ in range(n):
        state = step(state, config, rng)
    return state


# grid, symbol, initial state

@pytest.mark.parametrize("flux,m", [(0.0, 256), (1.2, 256), (33.0, 512), (1000.2, 8192), (-40.0, 512), (1e7 + 0.2, 1 << 27)])
def test_default_grid_points(flux, m):
    assert default_grid_points(flux) == m


def test_config_validation():
    with pytest.raises(ValueError):
        RingConfig(radius_norm=0.0, flux_norm=1.0)
    with pytest.raises(ValueError):
        RingConfig(radius_norm=1.0, flux_norm=1.0, dt=0.0)
    with pytest.raises(ValueError):
        RingConfig(radius_norm=1.0, flux_norm=200.0, grid_points=256)
    cfg = RingConfig(radius_norm=1.0, flux_norm=200.0, grid_points=256, coarse_grid=True)
    assert target_mode(cfg) == 127
    assert RingConfig.from_dict(cfg.to_dict()) == cfg


def test_linear_symbol_example():
    cfg = RingConfig(radius_norm=1500.0, flux_norm=1000.2, grid_points=8192)
    assert linear_symbol(cfg, 1000) == pytest.approx(1 - (0.2 / 1200) ** 2, rel=1e-15)
    assert linear_symbol(cfg, 1000) > linear_symbol(cfg, 1001)
    assert target_mode(cfg) == 1000


@settings(max_examples=1000, deadline=None)
@given(
    flux=st.floats(-100, 100),
    shift=st.integers(-1000, 1000),
    k=st.integers(-2000, 2000),
    radius=st.floats(0.5, 1e3),
)
def test_linear_symbol_gauge_shift(flux, shift, k, radius):
    a = RingConfig(radius_norm=radius, flux_norm=flux, grid_points=8192)
    b = RingConfig(radius_norm=radius, flux_norm=flux + shift, grid_points=8192)
    assert linear_symbol(b, k + shift) == pytest.approx(linear_symbol(a, k), rel=1e-9, abs=1e-9)


def test_init_metastable_is_zero():
    cfg = RingConfig(radius_norm=1.5, flux_norm=1.2)
    s = init_metastable(cfg)
    assert s.grid_points == 256 and s.time == 0.0
    assert not np.any(s.psi)
    s.validate(cfg)


def test_state_validation():
    cfg = RingConfig(radius_norm=1.5, flux_norm=1.2)
    with pytest.raises(ValueError):
        FieldState(np.full(256, np.nan)).validate(cfg)
    with pytest.raises(ValueError):
        FieldState(np.zeros(128)).validate(cfg)
    with pytest.raises(ValueError):
        FieldState(np.full(256, 3.0)).validate(cfg)


# time stepping

def test_zero_is_fixed_point_without_noise():
    cfg = RingConfig(radius_norm=10.0, flux_norm=3.3, noise=QUIET)
    s = run(init_metastable(cfg), cfg, 50)
    assert not np.any(s.psi)
    assert s.time == pytest.approx(0.5)


def test_single_step_matches_linear_growth():
    cfg = RingConfig(radius_norm=10.0, flux_norm=3.3, noise=QUIET)
    a = 1e-4
    s = step(plane_wave(cfg, 3, a), cfg)
    q = linear_symbol(cfg, 3)
    assert mode_amplitude(s, 3) == pytest.approx(a * math.exp(q * cfg.dt), rel=1e-9)
    # nothing leaks into other modes
    assert mode_amplitude(s, 4) < 1e-18


def pure_mode_error(dt, t_end=10.0):
    cfg = RingConfig(radius_norm=10.0, flux_norm=3.3, grid_points=16, dt=dt, noise=QUIET)
    q = linear_symbol(cfg, 3)
    eps = 1e-6
    s = plane_wave(cfg, 3, math.sqrt(eps))
    worst = 0.0
    for i in range(int(round(t_end / dt))):
        s = step(s, cfg)
        rho = mode_amplitude(s, 3) ** 2
        want = normalized_rho(q, eps, (i + 1) * dt)
        worst = max(worst, abs(rho - want) / want)
    return worst


def test_integrator_converges_first_order():
    e1, e2 = pure_mode_error(0.02), pure_mode_error(0.01)
    assert e1 < 2e-2
    assert e1 / e2 == pytest.approx(2.0, rel=0.1)


def test_steady_state_density():
    cfg = RingConfig(radius_norm=10.0, flux_norm=3.3, grid_points=16, noise=QUIET)
    s = run(plane_wave(cfg, 3, 0.5), cfg, 3000)
    q = linear_symbol(cfg, 3)
    assert abs(mode_amplitude(s, 3) ** 2 - q) < 1e-6
    assert np.allclose(np.abs(s.psi), math.sqrt(q), atol=1e-9)


def test_unsupported_mode_decays_monotonically():
    cfg = RingConfig(radius_norm=1.0, flux_norm=0.0, noise=QUIET)
    assert linear_symbol(cfg, 2) < 0
    s = plane_wave(cfg, 2, 0.1)
    amps = []
    for _ in range(200):
        s = step(s, cfg)
        amps.append(mode_amplitude(s, 2))
    assert all(b < a for a, b in zip(amps, amps[1:]))
    assert amps[-1] < 0.1 * math.exp(linear_symbol(cfg, 2) * 2.0) * 1.001


def test_step_is_deterministic():
    cfg = RingConfig(radius_norm=1.5, flux_norm=1.2)
    a = run(init_metastable(cfg), cfg, 100, make_rng(7, 3))
    b = run(init_metastable(cfg), cfg, 100, make_rng(7, 3))
    c = run(init_metastable(cfg), cfg, 100, make_rng(7, 4))
    assert a == b
    assert not np.array_equal(a.psi, c.psi)


def test_noise_requires_rng():
    cfg = RingConfig(radius_norm=1.5, flux_norm=1.2)
    with pytest.raises(ValueError):
        step(init_metastable(cfg), cfg)


@pytest.mark.parametrize("psi0", [np.full(256, 1.9 + 0j), np.full(256, np.nan + 0j)])
def test_blowup_is_reported(psi0):
    cfg = RingConfig(radius_norm=1.5, flux_norm=0.0, dt=10.0, noise=QUIET)
    with pytest.raises(NumericalBlowup) as info:
        step(FieldState(psi0, 20.0), cfg)
    assert info.value.step_index == 2
    assert info.value.time == pytest.approx(30.0)


# noise

def test_zero_sigma_noise_is_zero():
    cfg = RingConfig(radius_norm=1.5, flux_norm=1.2, noise=QUIET)
    assert not np.any(noise_field(cfg, make_rng(0)))


def test_noise_is_deterministic_and_interpolated():
    cfg = RingConfig(radius_norm=1.5, flux_norm=1.2, grid_points=400)
    a, b = noise_field(cfg, make_rng(11, 2)), noise_field(cfg, make_rng(11, 2))
    assert np.array_equal(a, b)
    # 400 points over 200 anchors: odd samples are midpoints of their neighbours
    assert np.allclose(a[1::2], 0.5 * (a[0::2] + np.roll(a[0::2], -1)), rtol=0, atol=1e-22)


def test_noise_anchor_statistics():
    # grid == anchors, so every sample is one complex Gaussian draw
    sigma = 1e-6
    cfg = RingConfig(radius_norm=1.5, flux_norm=1.2, grid_points=200, noise=NoiseSpec(sigma=sigma))
    rng = make_rng(5)
    z = np.concatenate([noise_field(cfg, rng) for _ in range(5000)])
    # |z| is Rayleigh with scale sigma when each component is N(0, sigma^2)
    assert np.mean(np.abs(z)) == pytest.approx(sigma * math.sqrt(math.pi / 2), rel=1e-2)
    assert np.std(z.real) == pytest.approx(sigma, rel=1e-2)
    assert np.std(z.imag) == pytest.approx(sigma, rel=1e-2)
    assert abs(np.mean(z)) < 5e-3 * sigma


def test_sqrt_dt_scaling():
    base = RingConfig(radius_norm=1.5, flux_norm=1.2, dt=0.04)
    scaled = base.with_(noise=NoiseSpec(scaling=NoiseScaling.SQRT_DT))
    a = noise_field(base, make_rng(1))
    b = noise_field(scaled, make_rng(1))
    assert np.allclose(b, 0.2 * a, rtol=1e-14, atol=0)


# measurements

def test_current_of_plane_wave():
    cfg = RingConfig(radius_norm=10.0, flux_norm=3.3)
    a = 0.7
    prof = current_profile(plane_wave(cfg, 3, a), cfg)
    want = a**2 * (3 - 3.3) / 8.0
    assert np.allclose(prof.j, want, rtol=1e-12)
    assert prof.integrated == pytest.approx(2 * math.pi * want, rel=1e-12)


def test_current_zero_at_exact_quantization():
    cfg = RingConfig(radius_norm=10.0, flux_norm=3.0)
    assert abs(integrated_current(plane_wave(cfg, 3, 0.9).psi, cfg)) < 1e-12


def test_current_against_finite_differences():
    cfg = RingConfig(radius_norm=2.0, flux_norm=1.4, grid_points=2048)
    phi = grid_angles(2048)
    psi = (0.6 + 0.2 * np.cos(phi)) * np.exp(1j * phi) + 0.1 * np.exp(-2j * phi)
    h = phi[1]
    # fourth-order periodic central difference
    dpsi = (-np.roll(psi, -2) + 8 * np.roll(psi, -1) - 8 * np.roll(psi, 1) + np.roll(psi, 2)) / (12 * h)
    want = (np.conj(psi) * dpsi).imag / (0.8 * 2.0) - cfg.vector_potential * np.abs(psi) ** 2
    assert np.allclose(current_density(psi, cfg), want, rtol=0, atol=1e-9)


@settings(max_examples=1000, deadline=None)
@given(k=st.integers(-127, 127), amp=st.floats(1e-3, 1.5))
def test_winding_and_amplitude_of_plane_waves(k, amp):
    cfg = RingConfig(radius_norm=1.5, flux_norm=1.2, noise=QUIET)
    s = plane_wave(cfg, k, amp)
    assert winding_number(s) == k
    assert mode_amplitude(s, k) == pytest.approx(amp, rel=1e-10)
    assert mean_amplitude(s) == pytest.approx(amp, rel=1e-12)


def test_winding_undefined_near_zero():
    cfg = RingConfig(radius_norm=1.5, flux_norm=1.2)
    assert winding_number(init_metastable(cfg)) is None
    assert winding_number(plane_wave(cfg, 1, 5e-6)) is None
    assert winding_number(plane_wave(cfg, 1, 5e-6), sigma=1e-7) == 1


def test_mode_amplitude_range():
    cfg = RingConfig(radius_norm=1.5, flux_norm=1.2)
    with pytest.raises(ValueError):
        mode_amplitude(init_metastable(cfg), 129)
