"""Exception hierarchy shared by all modules."""


class DelayLightError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(DelayLightError, ValueError):
    pass


class DegeneratePoleError(DelayLightError, ArithmeticError):
    """The two-photon pole sits on or beyond the real axis (gamma + Re Gamma <= 0)."""


class UndefinedContrastError(DelayLightError, ValueError):
    pass


class PeakAtEdgeError(DelayLightError, ValueError):
    pass


class ZeroTransferError(DelayLightError, ArithmeticError):
    pass


class PhaseJumpError(DelayLightError, ArithmeticError):
    pass


class AliasingError(DelayLightError, ValueError):
    pass


class ZeroEnergyError(DelayLightError, ValueError):
    pass


class EdgeLeakageError(DelayLightError, ValueError):
    pass


class FitError(DelayLightError, RuntimeError):
    pass


class DegenerateDataError(FitError, ValueError):
    pass


class RankDeficiencyError(FitError, ValueError):
    pass


class CalibrationError(FitError):
    pass


class OutOfValidityError(FitError, ValueError):
    pass


class ConfigError(DelayLightError, ValueError):
    """Configuration rejected; ``problems`` holds one message per offending field."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
