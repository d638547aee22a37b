"""Unit conversions at the I/O boundary.

Internally every rate and detuning is angular (rad/s), times are in seconds,
lengths in mm and diffusion coefficients in mm^2/s.
"""
import math

TWO_PI = 2.0 * math.pi


def hz_to_rad(value_hz):
    return TWO_PI * value_hz


def rad_to_hz(value_rad):
    return value_rad / TWO_PI


def fwhm_hz(half_width_rad):
    """FWHM in Hz of a line whose angular half width (HWHM) is ``half_width_rad``."""
    return 2.0 * half_width_rad / TWO_PI


# Conversion factors to internal units, keyed by accepted suffix.
RATE_UNITS = {
    "rad/s": 1.0,
    "/s_angular": 1.0,
    "1/s_angular": 1.0,
    "rad/ms": 1e3,
    "rad/us": 1e6,
    "Hz": TWO_PI,
    "kHz": TWO_PI * 1e3,
    "MHz": TWO_PI * 1e6,
    "GHz": TWO_PI * 1e9,
}
TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6}
LENGTH_UNITS = {"mm": 1.0, "um": 1e-3, "cm": 10.0, "m": 1e3}
DIFFUSION_UNITS = {"mm2/s": 1.0, "cm2/s": 100.0, "m2/s": 1e6}
POWER_UNITS = {"mW": 1.0, "uW": 1e-3, "W": 1e3}
KAPPA_UNITS = {"rad2/s2/mW": 1.0, "rad2/s2/uW": 1e3}

DIMENSIONS = {
    "rate": RATE_UNITS,
    "time": TIME_UNITS,
    "length": LENGTH_UNITS,
    "diffusion": DIFFUSION_UNITS,
    "power": POWER_UNITS,
    "kappa": KAPPA_UNITS,
}

# Suffixes people reach for that leave Hz-vs-angular undecided.
AMBIGUOUS_RATE_UNITS = ("1/s", "/s", "s^-1", "s-1")
