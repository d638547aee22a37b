"""Closed-form steady-state response of the double-V four-wave-mixing medium.

The control fields couple the ground state to one superposition of the two
excited states, so the probe decomposes into a normal mode that sees EIT
(``g_plus``) and one that does not (``g_minus``). The transmitted probe is
their sum and the generated signal their difference.

All rates and detunings are angular (rad/s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePoleError, InvalidParameterError


@dataclass(frozen=True)
class MediumParams:
    """Static medium constants.

    ``d`` is half the resonant optical depth, so the intensity attenuation on
    one-photon resonance is ``exp(-2d)``.
    """

    d: float
    gamma_1p: float
    gamma: float
    eta_act: float = 1.0
    diffusion: float = 0.0

    def __post_init__(self):
        problems = []
        for name in ("d", "gamma_1p", "gamma", "eta_act", "diffusion"):
            if not math.isfinite(getattr(self, name)):
                problems.append(f"{name} must be finite")
        if self.d < 0:
            problems.append(f"d must be >= 0, got {self.d}")
        if self.gamma_1p <= 0:
            problems.append(f"gamma_1p must be > 0, got {self.gamma_1p}")
        if self.gamma < 0:
            problems.append(f"gamma must be >= 0, got {self.gamma}")
        if not 0.0 <= self.eta_act <= 1.0:
            problems.append(f"eta_act must lie in [0, 1], got {self.eta_act}")
        if self.diffusion < 0:
            problems.append(f"diffusion must be >= 0, got {self.diffusion}")
        if problems:
            raise InvalidParameterError("; ".join(problems))

    def replace(self, **changes) -> "MediumParams":
        fields = dict(
            d=self.d,
            gamma_1p=self.gamma_1p,
            gamma=self.gamma,
            eta_act=self.eta_act,
            diffusion=self.diffusion,
        )
        fields.update(changes)
        return MediumParams(**fields)


@dataclass(frozen=True)
class DriveState:
    """Control Rabi frequency and one-photon detuning, both in rad/s."""

    omega_rabi: float
    delta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.omega_rabi) and math.isfinite(self.delta)):
            raise InvalidParameterError("omega_rabi and delta must be finite")
        if self.omega_rabi < 0:
            raise InvalidParameterError(f"omega_rabi must be >= 0, got {self.omega_rabi}")


@dataclass(frozen=True)
class ComplexResponse:
    s: complex
    gamma_power: complex
    f: complex


@dataclass(frozen=True)
class TransferPair:
    """Probe transmission and signal generation amplitudes at ``omega``.

    ``t_p`` and ``t_s`` are scalars or arrays matching ``omega``.
    """

    t_p: np.ndarray | complex
    t_s: np.ndarray | complex
    omega: np.ndarray | float = 0.0
    g_plus: np.ndarray | complex | None = None
    g_minus: np.ndarray | complex | None = None


def _check_gamma_1p(gamma_1p):
    if not gamma_1p > 0:
        raise InvalidParameterError(f"gamma_1p must be > 0, got {gamma_1p}")


def compute_S(medium: MediumParams, delta):
    """One-photon complex Lorentzian ``d * gamma_1p / (gamma_1p - i delta)``."""
    _check_gamma_1p(medium.gamma_1p)
    return medium.d * medium.gamma_1p / (medium.gamma_1p - 1j * np.asarray(delta, dtype=float))


def compute_Gamma(drive: DriveState, medium: MediumParams) -> complex:
    """Complex power broadening ``2 Omega^2 / (gamma_1p - i delta)``.

    The real part broadens the Raman line, the imaginary part shifts it.
    """
    _check_gamma_1p(medium.gamma_1p)
    return complex(2.0 * drive.omega_rabi**2 / (medium.gamma_1p - 1j * drive.delta))


def _pole_real_part(medium, gamma_power, extra=0.0):
    return medium.gamma + np.real(gamma_power) + extra


def compute_f(medium: MediumParams, gamma_power: complex, omega):
    """Two-photon complex Lorentzian ``eta_act Gamma / (gamma + Gamma - i omega)``.

    ``omega`` may be an array; infinite entries map to 0 (the far-detuned limit).
    """
    if not _pole_real_part(medium, gamma_power) > 0:
        raise DegeneratePoleError(
            f"gamma + Re(Gamma) = {_pole_real_part(medium, gamma_power)} must be > 0"
        )
    omega = np.asarray(omega, dtype=float)
    finite = np.isfinite(omega)
    safe = np.where(finite, omega, 0.0)
    f = medium.eta_act * gamma_power / (medium.gamma + gamma_power - 1j * safe)
    f = np.where(finite, f, 0.0)
    return f[()] if f.ndim == 0 else f


def response(medium: MediumParams, drive: DriveState, omega=0.0) -> ComplexResponse:
    gp = compute_Gamma(drive, medium)
    return ComplexResponse(
        s=complex(compute_S(medium, drive.delta)),
        gamma_power=gp,
        f=complex(compute_f(medium, gp, omega)),
    )


def transfer_amplitudes(S, f, omega=0.0) -> TransferPair:
    """Exact normal-mode amplitudes.

    ``2 g_plus = exp(-S (1 - f))`` and ``2 g_minus = exp(-S)``. The signal
    amplitude is evaluated as ``exp(-S) * expm1(S f) / 2`` so it stays accurate
    when ``S f`` is tiny.
    """
    S = np.asarray(S, dtype=complex)
    f = np.asarray(f, dtype=complex)
    g_minus = 0.5 * np.exp(-S)
    t_s = g_minus * np.expm1(S * f)
    g_plus = g_minus + t_s
    t_p = g_plus + g_minus
    return TransferPair(
        t_p=_unwrap0d(t_p),
        t_s=_unwrap0d(t_s),
        omega=omega,
        g_plus=_unwrap0d(g_plus),
        g_minus=_unwrap0d(g_minus),
    )


def weak_eit_signal(S, f):
    """Small-|Sf| estimate ``exp(-S) S f / 2`` of the signal amplitude (diagnostic only)."""
    S = np.asarray(S, dtype=complex)
    return _unwrap0d(0.5 * np.exp(-S) * S * np.asarray(f, dtype=complex))


def efficiency(t_s):
    """Generation efficiency ``|t_s|^2``."""
    return np.abs(t_s) ** 2


def transfer(medium: MediumParams, drive: DriveState, omega=0.0) -> TransferPair:
    """Probe and signal amplitudes at two-photon detuning(s) ``omega``."""
    S = compute_S(medium, drive.delta)
    f = compute_f(medium, compute_Gamma(drive, medium), omega)
    return transfer_amplitudes(S, f, omega)


def weak_eit_parameter(medium: MediumParams, drive: DriveState, omega=0.0) -> float:
    """``|S f|`` at ``omega``; the weak-EIT regime is where this is << 1."""
    r = response(medium, drive, omega)
    return abs(r.s * r.f)


def pole_half_width(medium: MediumParams, drive: DriveState) -> float:
    """Angular HWHM ``gamma + Re Gamma`` of the two-photon line."""
    return float(_pole_real_part(medium, compute_Gamma(drive, medium)))


def light_shift(medium: MediumParams, drive: DriveState) -> float:
    """Two-photon resonance position ``Im Gamma``."""
    return float(np.imag(compute_Gamma(drive, medium)))


def _unwrap0d(a):
    a = np.asarray(a)
    return a[()] if a.ndim == 0 else a
