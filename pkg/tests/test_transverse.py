import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaylight.errors import EdgeLeakageError, FitError, InvalidParameterError
from delaylight.fitting import fit_diffusion
from delaylight.model import DriveState, MediumParams, compute_f, compute_Gamma
from delaylight.temporal import analytic_tau_s, drive_for_gamma_power, drive_for_tau_s
from delaylight.transverse import (
    BeamProfile,
    diffusion_sweep,
    edge_fraction,
    f_k,
    f_k_gaussian,
    field_moment_w2,
    fit_gaussian_width,
    flat_top_beam,
    gaussian_beam,
    load_beam,
    propagate_beam,
    save_beam,
    signal_k_filter,
)

GAMMA_1P = 2 * math.pi * 300e6
GAMMA = 1.0 / 5e-3


@pytest.fixture
def thin():
    return MediumParams(0.01, GAMMA_1P, GAMMA, eta_act=1.0, diffusion=1050.0)


def overlap(a, b):
    return float(abs(np.vdot(a, b)) / math.sqrt(np.vdot(a, a).real * np.vdot(b, b).real))


def approx_w2(beam_in, medium, drive):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fit_gaussian_width(propagate_beam(beam_in, medium, drive, use_exact=False))


def test_beam_validation():
    with pytest.raises(InvalidParameterError):
        BeamProfile(0.1, np.ones((3, 3)))
    with pytest.raises(InvalidParameterError):
        BeamProfile(0.1, np.ones((4, 8)))
    with pytest.raises(InvalidParameterError):
        BeamProfile(0.0, np.ones((4, 4)))


def test_f_k_at_zero_k(thin):
    gp = 300.0 + 20.0j
    assert f_k(thin, gp, 12.0, 0.0) == compute_f(thin, gp, 12.0)


def test_f_k_without_diffusion(thin):
    m = thin.replace(diffusion=0.0)
    vals = f_k(m, 300.0 + 0j, 5.0, np.array([0.0, 1.0, 10.0]))
    assert np.all(vals == vals[0])


def test_f_k_halves_at_matching_broadening(thin):
    gp = 300.0 + 0j
    k = math.sqrt((GAMMA + gp.real) / thin.diffusion)
    assert f_k(thin, gp, 0.0, k) == pytest.approx(compute_f(thin, gp, 0.0) / 2, rel=1e-14)


def test_f_k_gaussian_matches_rational_at_small_k(thin):
    gp = 800.0 + 0j
    tau = 1.0 / (GAMMA + gp.real)
    k = np.linspace(0, 0.1 * math.sqrt((GAMMA + gp.real) / thin.diffusion), 20)
    a = f_k(thin, gp, 0.0, k)
    b = f_k_gaussian(thin, gp, 0.0, k, tau)
    assert np.allclose(a, b, rtol=1e-4)


def test_no_diffusion_keeps_shape(thin):
    m = thin.replace(diffusion=0.0)
    beam = gaussian_beam(0.8)
    out = propagate_beam(beam, m, drive_for_tau_s(m, 1e-3))
    assert overlap(out.samples, beam.samples) == pytest.approx(1.0, abs=1e-12)
    ratio = out.samples[beam.n // 2, beam.n // 2] / beam.samples[beam.n // 2, beam.n // 2]
    assert np.allclose(out.samples, ratio * beam.samples, atol=1e-12 * abs(ratio))


def test_gaussian_self_fit():
    m = fit_gaussian_width(gaussian_beam(1.0))
    assert m.w == pytest.approx(1.0, rel=5e-3)
    assert m.gaussian_overlap > 0.999
    assert m.area == pytest.approx(math.pi * m.w2)


def test_off_centre_gaussian_fit():
    x = (np.arange(256) - 128) * 0.0625
    r2 = (x[:, None] - 0.7) ** 2 + (x[None, :] + 1.1) ** 2
    m = fit_gaussian_width(BeamProfile(0.0625, np.exp(-r2 / 1.3**2)))
    assert m.w == pytest.approx(1.3, rel=5e-3)
    assert m.center == pytest.approx((-1.1, 0.7), abs=1e-6)


def test_flat_top_overlap_below_one():
    m = fit_gaussian_width(flat_top_beam(2.0))
    assert m.gaussian_overlap < 0.99


def test_empty_beam_fit_fails():
    with pytest.raises(FitError):
        fit_gaussian_width(BeamProfile(0.1, np.zeros((8, 8))))


def test_diffusion_example_approximate_filter(thin):
    drive = drive_for_tau_s(thin, 1e-3)
    m = approx_w2(gaussian_beam(0.5), thin, drive)
    assert m.w2 == pytest.approx(0.25 + 4 * 1050 * 1e-3, rel=5e-3)
    assert m.w == pytest.approx(math.sqrt(4.45), rel=1e-2)
    assert m.gaussian_overlap > 0.999


def test_approximate_filter_warns_when_unconfined(thin):
    with pytest.warns(RuntimeWarning):
        propagate_beam(gaussian_beam(0.5), thin, drive_for_tau_s(thin, 1e-3), use_exact=False)


def test_field_moment_follows_diffusion_law_with_exact_filter(thin):
    # the exact kernel has exponential tails, so the grid is doubled to stop wrap-around
    beam = gaussian_beam(0.5, n=512)
    for tau in (0.5e-3, 1e-3, 2e-3, 3e-3):
        out = propagate_beam(beam, thin, drive_for_tau_s(thin, tau))
        assert field_moment_w2(out) == pytest.approx(0.25 + 4 * 1050 * tau, rel=5e-3)


def test_exact_and_approximate_filters_agree_when_confined():
    m = MediumParams(0.01, GAMMA_1P, GAMMA, diffusion=1050.0)
    beam = gaussian_beam(2.0)
    tau = 5e-5
    drive = drive_for_tau_s(m, tau)
    from delaylight.transverse import rms_wavenumber_sq

    assert m.diffusion * rms_wavenumber_sq(beam) <= 0.1 / tau
    exact = fit_gaussian_width(propagate_beam(beam, m, drive)).w2
    approx = fit_gaussian_width(propagate_beam(beam, m, drive, use_exact=False)).w2
    assert exact == pytest.approx(approx, rel=1e-2)


def test_edge_leakage(thin):
    with pytest.raises(EdgeLeakageError):
        propagate_beam(gaussian_beam(4.0, n=64), thin, drive_for_tau_s(thin, 1e-3))
    assert edge_fraction(gaussian_beam(0.5)) < 1e-6


@pytest.mark.parametrize("use_exact", [True, False])
def test_width_grows_with_delay(thin, use_exact):
    beam = gaussian_beam(0.5)
    drives = [drive_for_tau_s(thin, t) for t in (0.25e-3, 0.5e-3, 1e-3, 2e-3, 3e-3)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pts = diffusion_sweep(thin, drives, beam, use_exact=use_exact)
    assert np.all(np.diff([p.w2 for p in pts]) > 0)


def test_sweep_without_diffusion(thin):
    m = thin.replace(diffusion=0.0)
    drives = [drive_for_tau_s(m, t) for t in (0.5e-3, 1e-3, 2e-3, 3e-3)]
    pts = diffusion_sweep(m, drives, gaussian_beam(0.5))
    D, w02, _ = fit_diffusion([p.tau_s for p in pts], [p.w2 for p in pts])
    assert abs(D) < 1e-6
    assert w02 == pytest.approx(0.25, rel=5e-3)


@settings(max_examples=15, deadline=None)
@given(st.floats(1e-4, 4e-3), st.floats(0.0, 3000.0), st.floats(-2e9, 2e9), st.floats(0.3, 1.5))
def test_power_bound(tau, diffusion, delta, w):
    m = MediumParams(2.5, GAMMA_1P, GAMMA, eta_act=0.7, diffusion=diffusion)
    drive = drive_for_tau_s(m, tau)
    drive = DriveState(drive.omega_rabi, delta)
    beam = gaussian_beam(w, n=64, pitch=0.25)
    H = signal_k_filter(beam, m, drive)
    out = propagate_beam(beam, m, drive)
    assert out.power <= np.max(np.abs(H) ** 2) * beam.power * (1 + 1e-12)


@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_beam_round_trip(tmp_path, suffix):
    rng = np.random.default_rng(1)
    beam = BeamProfile(0.125, rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))
    path = tmp_path / f"beam{suffix}"
    save_beam(path, beam)
    back = load_beam(path)
    assert back.pitch == beam.pitch
    if suffix == ".bin":
        assert np.array_equal(back.samples, beam.samples)
    else:
        assert np.allclose(back.samples, beam.samples, rtol=1e-11, atol=0)
