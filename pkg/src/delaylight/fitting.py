"""Parameter extraction: Lorentzian line fits, linear regression and the
power / decoherence / S*eta_act calibration chain."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CalibrationError,
    DegenerateDataError,
    FitError,
    OutOfValidityError,
    PeakAtEdgeError,
    RankDeficiencyError,
)

XTOL = 1e-8
MAX_ITER = 200


@dataclass
class LMResult:
    params: np.ndarray
    cost: float
    iterations: int
    converged: bool


def levenberg_marquardt(residual, jacobian, p0, xtol=XTOL, max_iter=MAX_ITER, lam=1e-3):
    """Minimise ``sum(residual(p)**2)`` by damped Gauss-Newton steps.

    The damping multiplies the diagonal of ``J^T J`` (Marquardt scaling) and
    is relaxed tenfold after an accepted step, stiffened tenfold after a
    rejected one. Stops once the relative parameter change is below ``xtol``.
    The best iterate is always returned; check ``converged``.
    """
    p = np.asarray(p0, dtype=float).copy()
    r = residual(p)
    cost = float(r @ r)
    for it in range(1, max_iter + 1):
        J = jacobian(p)
        A = J.T @ J
        g = J.T @ r
        diag = np.diag(A).copy()
        diag[diag == 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                if lam > 1e16:
                    return LMResult(p, cost, it, False)
                continue
            trial = p + step
            r_trial = residual(trial)
            cost_trial = float(r_trial @ r_trial)
            if np.isfinite(cost_trial) and cost_trial <= cost:
                break
            lam *= 10.0
            if lam > 1e16:
                # no downhill direction left: we sit at a minimum to working precision
                return LMResult(p, cost, it, True)
        p, r, cost = trial, r_trial, cost_trial
        lam = max(lam / 10.0, 1e-12)
        if np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol):
            return LMResult(p, cost, it, True)
    return LMResult(p, cost, max_iter, False)


# --------------------------------------------------------------------------
# Lorentzian


@dataclass(frozen=True)
class LorentzianFit:
    amplitude: float
    center: float
    fwhm: float
    baseline: float
    rms_residual: float
    converged: bool = True
    iterations: int = 0

    @property
    def half_width(self) -> float:
        return 0.5 * self.fwhm

    @property
    def peak(self) -> float:
        return self.amplitude + self.baseline

    def __call__(self, x):
        return lorentzian(x, self.amplitude, self.center, self.half_width, self.baseline)


def lorentzian(x, amplitude, center, half_width, baseline=0.0):
    u = (np.asarray(x, dtype=float) - center) / half_width
    return amplitude / (1.0 + u * u) + baseline


def _initial_lorentzian(x, y):
    n = len(y)
    edge = max(2, n // 20)
    baseline = 0.5 * (y[:edge].mean() + y[-edge:].mean())
    dev = y - baseline
    i = int(np.argmax(np.abs(dev)))
    if i == 0 or i == n - 1:
        raise PeakAtEdgeError("line extremum lies on the edge of the data")
    amp = dev[i]
    above = dev / amp >= 0.5
    lo = i
    while lo > 0 and above[lo - 1]:
        lo -= 1
    hi = i
    while hi < n - 1 and above[hi + 1]:
        hi += 1
    half = 0.5 * (x[hi] - x[lo])
    if half <= 0:
        half = 0.5 * abs(x[min(i + 1, n - 1)] - x[max(i - 1, 0)])
    return np.array([amp, x[i], half, baseline])


def fit_lorentzian(x, y, xtol=XTOL, max_iter=MAX_ITER) -> LorentzianFit:
    """Fit ``A / (1 + ((x - x0)/hw)^2) + B`` with fwhm = 2 hw.

    Data are mapped to unit scale before fitting, so the result transforms
    covariantly under shifts and rescalings of ``x``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if len(x) < 8:
        raise DegenerateDataError(f"need at least 8 points, got {len(x)}")
    order = np.argsort(x)
    x, y = x[order], y[order]
    y_lo, y_hi = y.min(), y.max()
    if y_hi == y_lo:
        raise DegenerateDataError("y is constant")
    x_mid = 0.5 * (x[0] + x[-1])
    x_scale = 0.5 * (x[-1] - x[0])
    y_scale = y_hi - y_lo
    xs = (x - x_mid) / x_scale
    ys = (y - y_lo) / y_scale

    def residual(p):
        return lorentzian(xs, p[0], p[1], p[2], p[3]) - ys

    def jacobian(p):
        a, c, h, _ = p
        u = (xs - c) / h
        q = 1.0 / (1.0 + u * u)
        dq = 2.0 * a * u * q * q
        return np.column_stack([q, dq / h, dq * u / h, np.ones_like(xs)])

    p0 = _initial_lorentzian(xs, ys)
    res = levenberg_marquardt(residual, jacobian, p0, xtol=xtol, max_iter=max_iter)
    a, c, h, b = res.params
    if not res.converged:
        warnings.warn(
            f"Lorentzian fit did not converge in {res.iterations} iterations",
            RuntimeWarning,
            stacklevel=2,
        )
    amplitude = a * y_scale
    if amplitude == 0:
        raise FitError("fitted amplitude vanished")
    rms = math.sqrt(res.cost / len(xs)) * y_scale / abs(amplitude)
    return LorentzianFit(
        amplitude=float(amplitude),
        center=float(x_mid + c * x_scale),
        fwhm=float(2.0 * abs(h) * x_scale),
        baseline=float(y_lo + b * y_scale),
        rms_residual=float(rms),
        converged=res.converged,
        iterations=res.iterations,
    )


# --------------------------------------------------------------------------
# straight lines


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    r_squared: float

    def __call__(self, x):
        return self.slope * np.asarray(x, dtype=float) + self.intercept


def linear_fit(x, y, weights=None) -> LinearFit:
    """Weighted ordinary least squares for ``y = slope * x + intercept``.

    ``weights`` multiply squared residuals (use ``1/sigma**2`` for
    measurement errors). Standard errors are scaled by the residual variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    if not (x.shape == y.shape == w.shape) or x.ndim != 1:
        raise ValueError("x, y and weights must be 1-D arrays of equal length")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    sw = w.sum()
    xm = (w * x).sum() / sw
    ym = (w * y).sum() / sw
    dx = x - xm
    sxx = (w * dx * dx).sum()
    if len(np.unique(x[w > 0])) < 2 or sxx <= 0:
        raise RankDeficiencyError("need at least two distinct x values")
    slope = (w * dx * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ss_res = (w * resid * resid).sum()
    ss_tot = (w * (y - ym) ** 2).sum()
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = len(x) - 2
    if dof > 0:
        s2 = ss_res / dof
        se_slope = math.sqrt(s2 / sxx)
        se_int = math.sqrt(s2 * (1.0 / sw + xm * xm / sxx))
    else:
        se_slope = se_int = 0.0
    return LinearFit(float(slope), float(intercept), se_slope, se_int, float(r2))


def fit_diffusion(tau_s, w2) -> tuple[float, float, LinearFit]:
    """Fit ``w^2 = w0^2 + 4 D tau`` and return ``(D, w0^2, fit)``."""
    fit = linear_fit(tau_s, w2)
    return fit.slope / 4.0, fit.intercept, fit


def extrapolate_gamma(powers, tau_s) -> LinearFit:
    """Linear fit of ``1/tau_s`` against control power; the intercept is gamma."""
    return linear_fit(powers, 1.0 / np.asarray(tau_s, dtype=float))


# --------------------------------------------------------------------------
# calibration chain


@dataclass(frozen=True)
class SEtaTable:
    """Piecewise-linear map from control power (mW) to ``S * eta_act``."""

    powers: tuple
    values: tuple

    def __post_init__(self):
        if len(self.powers) != len(self.values) or len(self.powers) == 0:
            raise ValueError("powers and values must be non-empty and of equal length")
        if any(b <= a for a, b in zip(self.powers, self.powers[1:])):
            raise ValueError("powers must be strictly increasing")

    def __call__(self, power):
        return np.interp(power, self.powers, self.values)

    def rows(self):
        return list(zip(self.powers, self.values))


@dataclass(frozen=True)
class PowerCalibration:
    """``Omega^2 = kappa * P_c`` with kappa in rad^2 s^-2 per mW."""

    kappa: float
    gamma_extrapolated: float
    gamma_1p: float
    line_fit: LinearFit | None = None
    s_eta: SEtaTable | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.kappa > 0:
            raise CalibrationError(f"kappa must be > 0, got {self.kappa}")
        if not self.gamma_extrapolated > 0:
            raise CalibrationError(f"extrapolated gamma must be > 0, got {self.gamma_extrapolated}")

    def rabi(self, power):
        return np.sqrt(self.kappa * np.asarray(power, dtype=float))

    def gamma_power(self, power, delta=0.0):
        return 2.0 * self.kappa * np.asarray(power, dtype=float) / (self.gamma_1p - 1j * delta)


def _unpack(spectra_by_power):
    powers = np.array([float(p) for p, _ in spectra_by_power])
    spectra = [s for _, s in spectra_by_power]
    order = np.argsort(powers, kind="stable")
    return powers[order], [spectra[i] for i in order]


def calibrate_power(spectra_by_power, gamma_1p: float) -> PowerCalibration:
    """Recover kappa and gamma from generation spectra taken at Delta = 0.

    Each signal line is fitted for its FWHM; FWHM/2 = gamma + 2 kappa P / gamma_1p
    is then regressed on P.
    """
    if len(spectra_by_power) < 3:
        raise CalibrationError("need spectra at three or more powers")
    powers, spectra = _unpack(spectra_by_power)
    if len(np.unique(powers)) < 2:
        raise RankDeficiencyError("all spectra were taken at the same power")
    half = np.array([fit_lorentzian(s.grid.omegas, s.power_signal).half_width for s in spectra])
    line = linear_fit(powers, half)
    if line.intercept <= 0:
        raise CalibrationError(f"extrapolated gamma {line.intercept} is not positive")
    if line.slope <= 0:
        raise CalibrationError(f"linewidth does not grow with power (slope {line.slope})")
    return PowerCalibration(
        kappa=line.slope * gamma_1p / 2.0,
        gamma_extrapolated=line.intercept,
        gamma_1p=gamma_1p,
        line_fit=line,
        extras={"powers": powers.tolist(), "half_widths": half.tolist()},
    )


MAX_SF = 0.3


def calibrate_s_eta(spectra_by_power, calibration: PowerCalibration) -> SEtaTable:
    """Extract ``S * eta_act`` per power from Delta = 0 spectra.

    ``d`` comes from the off-resonant probe baseline ``exp(-2d)``; the peak
    signal amplitude ``exp(-d) (exp(d eta Gamma/(gamma+Gamma)) - 1)/2`` is then
    inverted for ``d * eta``. To first order this is the weak-EIT relation
    ``|t_s| = exp(-d) (S eta) Gamma / (2 (gamma + Gamma))``.
    """
    powers, spectra = _unpack(spectra_by_power)
    gamma = calibration.gamma_extrapolated
    values = []
    for p, spec in zip(powers, spectra):
        edge = max(2, len(spec.power_probe) // 50)
        base = 0.5 * (spec.power_probe[:edge].mean() + spec.power_probe[-edge:].mean())
        d = -0.5 * math.log(base)
        gp = float(np.real(calibration.gamma_power(p)))
        if gp <= 0:
            values.append(0.0)
            continue
        ratio = gp / (gamma + gp)
        peak = max(fit_lorentzian(spec.grid.omegas, spec.power_signal).peak, 0.0)
        amp = math.sqrt(peak)
        x = math.log1p(2.0 * amp * math.exp(d))
        if x > MAX_SF:
            raise OutOfValidityError(
                f"|S f| = {x:.3g} at P = {p} exceeds the weak-EIT limit {MAX_SF}"
            )
        values.append(x / ratio)
    return SEtaTable(tuple(float(p) for p in powers), tuple(values))


def write_table(path, rows, header=("P_c_mW", "value")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" for v in row])


def read_s_eta_table(path) -> SEtaTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = sorted((float(a), float(b)) for a, b in reader)
    return SEtaTable(tuple(r[0] for r in rows), tuple(r[1] for r in rows))
