"""Group delays of the transmitted probe and the generated signal.

Three routes are offered: the weak-EIT closed forms evaluated at ``omega = 0``,
a central-difference log-derivative of the exact transfer function, and
propagation of a sampled pulse through the exact transfer function followed by
intensity-centroid extraction.

Envelopes evolve as ``exp(-i omega t)``. With that convention the two-photon
pole ``1/(gamma + Gamma - i omega)`` is causal and its group delay
``Im d/domega ln t`` is positive.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    AliasingError,
    DegeneratePoleError,
    InvalidParameterError,
    PhaseJumpError,
    ZeroEnergyError,
    ZeroTransferError,
)
from .model import DriveState, MediumParams, compute_Gamma, compute_S, pole_half_width, transfer

METHODS = ("analytic", "numeric", "pulse")

DURATION_FACTOR = 20.0
WINDOW_FACTOR = 20.0
SAMPLES_PER_DURATION = 64
RICHARDSON_RTOL = 1e-3


@dataclass(frozen=True)
class Pulse:
    """Uniformly sampled complex envelope starting at ``t0``."""

    dt: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameterError(f"dt must be > 0, got {self.dt}")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)

    @property
    def window(self) -> float:
        return self.dt * len(self.samples)


@dataclass(frozen=True)
class DelayResult:
    tau_p: float
    tau_s: float
    method: str
    drive: DriveState | None = None


def _pole(medium, drive):
    gp = compute_Gamma(drive, medium)
    a = medium.gamma + gp
    if not a.real > 0:
        raise DegeneratePoleError(f"gamma + Re(Gamma) = {a.real} must be > 0")
    return gp, a


def analytic_tau_s(medium: MediumParams, drive: DriveState) -> float:
    """Signal delay ``Re 1/(gamma + Gamma)``; independent of ``d`` and ``eta_act``."""
    _, a = _pole(medium, drive)
    return float((1.0 / a).real)


def analytic_tau_p(medium: MediumParams, drive: DriveState, s_eta=None) -> float:
    """Probe delay ``Re (S/2) eta_act Gamma / (gamma + Gamma)^2``.

    ``s_eta`` replaces the product ``S * eta_act`` when it has been
    calibrated separately.
    """
    gp, a = _pole(medium, drive)
    if s_eta is None:
        s_eta = compute_S(medium, drive.delta) * medium.eta_act
    return float((0.5 * s_eta * gp / (a * a)).real)


def drive_for_tau_s(medium: MediumParams, tau_s: float) -> DriveState:
    """Resonant (Delta = 0) drive whose signal delay equals ``tau_s``."""
    gp = 1.0 / tau_s - medium.gamma
    if gp < 0:
        raise InvalidParameterError(
            f"tau_s = {tau_s} exceeds the coherence lifetime 1/gamma = {1.0 / medium.gamma}"
        )
    return DriveState(math.sqrt(gp * medium.gamma_1p / 2.0), 0.0)


def drive_for_gamma_power(medium: MediumParams, gamma_power: float, delta=0.0) -> DriveState:
    """Drive giving the requested broadening ``Re Gamma`` at detuning ``delta``."""
    scale = (2.0 / (medium.gamma_1p - 1j * delta)).real
    return DriveState(math.sqrt(gamma_power / scale), delta)


def numeric_group_delay(transfer_fn, omega0: float, delta_omega: float) -> float:
    """Central difference of the transfer phase, ``Im[ln t(w+) - ln t(w-)] / (2 dw)``."""
    if not delta_omega > 0:
        raise InvalidParameterError("delta_omega must be > 0")
    t_hi = complex(transfer_fn(omega0 + delta_omega))
    t_lo = complex(transfer_fn(omega0 - delta_omega))
    if t_hi == 0 or t_lo == 0 or not (np.isfinite(t_hi) and np.isfinite(t_lo)):
        raise ZeroTransferError(f"transfer function vanishes near omega0 = {omega0}")
    dphi = np.angle(t_hi / t_lo)
    if abs(dphi) > math.pi / 2:
        raise PhaseJumpError(
            f"phase changes by {dphi:.3g} rad across 2*delta_omega; reduce delta_omega"
        )
    return float(dphi / (2.0 * delta_omega))


def numeric_delays(medium: MediumParams, drive: DriveState, omega0=0.0, delta_omega=None):
    """Probe and signal group delays of the exact transfer functions.

    The default step is 1/100 of the half linewidth. Each delay is also
    evaluated at half the step; a disagreement above 0.1% triggers a warning.
    """
    half = pole_half_width(medium, drive)
    if delta_omega is None:
        delta_omega = half / 100.0
    results = []
    for channel in ("t_p", "t_s"):
        fn = lambda w, c=channel: getattr(transfer(medium, drive, w), c)
        coarse = numeric_group_delay(fn, omega0, delta_omega)
        fine = numeric_group_delay(fn, omega0, delta_omega / 2.0)
        scale = max(abs(coarse), abs(fine))
        if abs(coarse - fine) > RICHARDSON_RTOL * scale + 1e-9 / half:
            warnings.warn(
                f"{channel} group delay not converged in step size: {coarse:.6g} vs {fine:.6g}",
                RuntimeWarning,
                stacklevel=2,
            )
        results.append(coarse)
    return tuple(results)


# --------------------------------------------------------------------------
# pulses


def gaussian_pulse(duration, window, dt, center=None) -> Pulse:
    """Gaussian pulse with intensity 1/e full width ``duration``.

    The sample count is rounded up to a power of two. The centre defaults to a
    quarter of the window so the delayed tail has room.
    """
    n = 1 << max(3, math.ceil(math.log2(window / dt)))
    t = dt * np.arange(n)
    if center is None:
        center = 0.25 * n * dt
    return Pulse(dt, np.exp(-2.0 * (t - center) ** 2 / duration**2).astype(complex), 0.0)


def default_pulse(tau_expected, duration_factor=DURATION_FACTOR, window_factor=WINDOW_FACTOR) -> Pulse:
    duration = duration_factor * tau_expected
    return gaussian_pulse(duration, window_factor * duration, duration / SAMPLES_PER_DURATION)


def pulse_centroid(pulse: Pulse) -> float:
    """Intensity-weighted mean time."""
    w = np.abs(pulse.samples) ** 2
    total = w.sum()
    if total == 0:
        raise ZeroEnergyError("pulse has zero energy")
    return float(np.sum(pulse.times * w) / total)


def envelope_angular_frequencies(n: int, dt: float) -> np.ndarray:
    """Angular frequencies matching ``np.fft.fft`` bins under the exp(-i w t) convention."""
    return -2.0 * math.pi * np.fft.fftfreq(n, dt)


def spectral_half_width(pulse: Pulse) -> float:
    """1/e half width (rad/s) of the pulse power spectrum about its peak."""
    spec = np.abs(np.fft.fft(pulse.samples)) ** 2
    om = envelope_angular_frequencies(len(spec), pulse.dt)
    peak = int(np.argmax(spec))
    inside = spec >= spec[peak] / math.e
    return float(np.max(np.abs(om[inside] - om[peak])))


def _significant_end(pulse: Pulse, rel=1e-8) -> float:
    w = np.abs(pulse.samples) ** 2
    idx = np.nonzero(w >= rel * w.max())[0]
    return (idx[-1] + 1) * pulse.dt


def propagate_pulse(pulse_in: Pulse, transfer_fn, carrier=0.0, memory_time=None, linewidth=None) -> Pulse:
    """Filter a pulse envelope through ``transfer_fn`` (a function of two-photon detuning).

    The envelope is zero-padded to a power of two, transformed, multiplied by
    ``transfer_fn(carrier + w)`` and transformed back. ``memory_time`` is the
    decay time of the filter's impulse response; when given, the window must
    hold the pulse plus twice that time or :class:`AliasingError` is raised.
    ``linewidth`` (angular FWHM) enables a warning for pulses too broadband to
    pass undistorted.
    """
    if pulse_in.energy == 0:
        raise ZeroEnergyError("input pulse has zero energy")
    n_in = len(pulse_in.samples)
    n = 1 << max(0, math.ceil(math.log2(n_in)))
    samples = np.zeros(n, dtype=complex)
    samples[:n_in] = pulse_in.samples
    padded = Pulse(pulse_in.dt, samples, pulse_in.t0)
    if memory_time is not None:
        needed = _significant_end(padded) + 2.0 * memory_time
        if needed > padded.window:
            raise AliasingError(
                f"time window {padded.window:.4g} s cannot hold the pulse plus 2x the "
                f"filter memory ({needed:.4g} s)"
            )
    if linewidth is not None:
        bw = spectral_half_width(padded)
        if bw > linewidth / 10.0 * (1.0 + 1e-9):
            warnings.warn(
                f"pulse bandwidth {bw:.4g} rad/s exceeds linewidth/10 = {linewidth / 10.0:.4g}; "
                "the output will be distorted",
                RuntimeWarning,
                stacklevel=2,
            )
    om = envelope_angular_frequencies(n, pulse_in.dt)
    H = np.asarray(transfer_fn(carrier + om), dtype=complex)
    if H.shape != om.shape:
        H = np.broadcast_to(H, om.shape)
    if np.all(H == 1):
        # all-pass unity filter: skip the transform pair
        return padded
    out = np.fft.ifft(np.fft.fft(samples) * H)
    return Pulse(pulse_in.dt, out, pulse_in.t0)


def pulse_delays(medium: MediumParams, drive: DriveState, pulse=None):
    """Centroid delays ``(tau_p, tau_s)`` of a pulse sent through both channels."""
    half = pole_half_width(medium, drive)
    if pulse is None:
        pulse = default_pulse(1.0 / half)
    t_in = pulse_centroid(pulse)
    delays = []
    for channel in ("t_p", "t_s"):
        fn = lambda w, c=channel: getattr(transfer(medium, drive, w), c)
        out = propagate_pulse(pulse, fn, memory_time=1.0 / half, linewidth=2.0 * half)
        delays.append(pulse_centroid(out) - t_in)
    return tuple(delays)


def delays(medium: MediumParams, drive: DriveState, method="analytic", s_eta=None) -> DelayResult:
    if method == "analytic":
        return DelayResult(
            analytic_tau_p(medium, drive, s_eta), analytic_tau_s(medium, drive), method, drive
        )
    if method == "numeric":
        tp, ts = numeric_delays(medium, drive)
    elif method == "pulse":
        tp, ts = pulse_delays(medium, drive)
    else:
        raise InvalidParameterError(f"unknown delay method {method!r}; choose from {METHODS}")
    return DelayResult(tp, ts, method, drive)


def delay_sweep(medium: MediumParams, drives, method="analytic", executor=None):
    """Delays for every drive, in input order."""
    if executor is None:
        return [delays(medium, d, method) for d in drives]
    return list(executor.map(lambda d: delays(medium, d, method), drives))
