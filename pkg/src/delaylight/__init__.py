"""Continuous delayed-light generation in a double-V four-wave-mixing medium."""
from .model import (
    ComplexResponse,
    DriveState,
    MediumParams,
    TransferPair,
    compute_f,
    compute_Gamma,
    compute_S,
    efficiency,
    transfer,
    transfer_amplitudes,
    weak_eit_signal,
)

__version__ = "0.1.0"
