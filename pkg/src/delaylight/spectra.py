"""Frequency scans of probe transmission and signal generation, line contrast
and lineshape symmetry."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, PeakAtEdgeError, UndefinedContrastError
from .model import (
    DriveState,
    MediumParams,
    compute_f,
    compute_Gamma,
    compute_S,
    efficiency,
    light_shift,
    pole_half_width,
    transfer_amplitudes,
)

DEFAULT_POINTS = 4096
DEFAULT_SPAN = 20.0  # half-linewidths either side of the light-shifted centre


@dataclass(frozen=True)
class FrequencyGrid:
    omegas: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        if om.ndim != 1 or len(om) < 3:
            raise InvalidParameterError("frequency grid needs at least 3 points")
        steps = np.diff(om)
        if not np.all(steps > 0):
            raise InvalidParameterError("frequency grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise InvalidParameterError("frequency grid must be uniformly spaced")
        object.__setattr__(self, "omegas", om)

    @classmethod
    def centered(cls, center, half_span, points=DEFAULT_POINTS):
        return cls(np.linspace(center - half_span, center + half_span, points))

    @property
    def step(self) -> float:
        return float(self.omegas[1] - self.omegas[0])

    def __len__(self):
        return len(self.omegas)


@dataclass(frozen=True)
class Spectrum:
    grid: FrequencyGrid
    power_probe: np.ndarray
    power_signal: np.ndarray


def default_grid(medium: MediumParams, drive: DriveState, points=DEFAULT_POINTS, span=DEFAULT_SPAN):
    """Grid of ``span`` half-linewidths either side of the light-shifted line centre."""
    return FrequencyGrid.centered(
        light_shift(medium, drive), span * pole_half_width(medium, drive), points
    )


def scan_spectrum(medium: MediumParams, drive: DriveState, grid: FrequencyGrid | None = None) -> Spectrum:
    if grid is None:
        grid = default_grid(medium, drive)
    S = compute_S(medium, drive.delta)
    f = compute_f(medium, compute_Gamma(drive, medium), grid.omegas)
    pair = transfer_amplitudes(S, f, grid.omegas)
    return Spectrum(grid, efficiency(pair.t_p), efficiency(pair.t_s))


def contrast(power_on_resonance, power_off_resonance) -> float:
    """Line contrast ``|P_r - P_inf| / (P_r + P_inf)``."""
    if power_on_resonance < 0 or power_off_resonance < 0:
        raise InvalidParameterError("powers must be non-negative")
    total = power_on_resonance + power_off_resonance
    if total == 0:
        raise UndefinedContrastError("contrast undefined when both powers are zero")
    return abs(power_on_resonance - power_off_resonance) / total


@dataclass(frozen=True)
class ContrastPoint:
    drive: DriveState
    probe_contrast: float
    signal_contrast: float
    sf_on_resonance: float


def contrast_sweep(medium: MediumParams, drives, off_resonance_omega=math.inf, noise_floor=0.0):
    """Probe and signal contrast for each drive.

    The on-resonance point sits at the light-shifted two-photon resonance
    ``omega = Im Gamma``; the off-resonance point at ``Im Gamma +
    off_resonance_omega``. ``math.inf`` selects the asymptotic background
    (pure one-photon absorption for the probe, zero for the signal).
    ``noise_floor`` is a detector background added to both signal readings,
    so the signal contrast becomes ``beta / (beta + 2 floor)`` and falls once
    the generated power drops below the floor.
    """
    if noise_floor < 0:
        raise InvalidParameterError("noise_floor must be >= 0")
    out = []
    for drive in drives:
        gp = compute_Gamma(drive, medium)
        width = 2.0 * pole_half_width(medium, drive)
        if math.isfinite(off_resonance_omega) and abs(off_resonance_omega) < 20.0 * width:
            warnings.warn(
                f"off-resonance offset {off_resonance_omega:.4g} rad/s is under 20 linewidths "
                f"({20.0 * width:.4g} rad/s)",
                RuntimeWarning,
                stacklevel=2,
            )
        S = compute_S(medium, drive.delta)
        w_on = gp.imag
        f = compute_f(medium, gp, np.array([w_on, w_on + off_resonance_omega]))
        pair = transfer_amplitudes(S, f)
        p_probe = efficiency(pair.t_p)
        p_signal = efficiency(pair.t_s)
        out.append(
            ContrastPoint(
                drive=drive,
                probe_contrast=contrast(p_probe[0], p_probe[1]),
                signal_contrast=contrast(p_signal[0] + noise_floor, p_signal[1] + noise_floor),
                sf_on_resonance=float(abs(S * f[0])),
            )
        )
    return out


def lineshape_asymmetry(spectrum_channel, grid: FrequencyGrid) -> float:
    """Mirror-symmetry residual of a single spectral line (0 = symmetric).

    The baseline is the mean of the outer 5% on each side. The centre is the
    deviation-weighted centroid of points within 10% of the extremum. The
    result is the RMS of ``y(w0 + s) - y(w0 - s)`` over grid-step offsets
    ``s``, divided by the extremum's deviation from the baseline.
    """
    y = np.asarray(spectrum_channel, dtype=float)
    om = grid.omegas
    if y.shape != om.shape:
        raise ValueError("channel and grid lengths differ")
    n = len(y)
    edge = max(1, n // 20)
    baseline = 0.5 * (y[:edge].mean() + y[-edge:].mean())
    dev = y - baseline
    i = int(np.argmax(np.abs(dev)))
    peak = dev[i]
    if peak == 0:
        return 0.0
    if i == 0 or i == n - 1:
        raise PeakAtEdgeError("line extremum lies on the grid edge")
    rel = dev / peak
    top = rel >= 0.9
    w0 = float(np.sum(om[top] * rel[top]) / np.sum(rel[top]))
    reach = min(w0 - om[0], om[-1] - w0)
    count = int(reach / grid.step)
    if count < 1:
        raise PeakAtEdgeError("no mirror pairs available around the line centre")
    s = grid.step * np.arange(1, count + 1)
    diff = np.interp(w0 + s, om, y) - np.interp(w0 - s, om, y)
    return float(np.sqrt(np.mean(diff * diff)) / abs(peak))
