"""Moderation-gate service: durable review queue plus the HTTP API."""

from .gate import CalibrationResult, GatePolicy, ModerationGate, calibrate_tau
from .store import FlagRecord, FlagStore

__all__ = [
    "CalibrationResult",
    "FlagRecord",
    "FlagStore",
    "GatePolicy",
    "ModerationGate",
    "calibrate_tau",
]
