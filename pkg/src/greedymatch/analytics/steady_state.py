"""Steady-state participant count of the repeated market."""

from __future__ import annotations

import math

from ..errors import InvalidParameterError, NoSteadyStateError


def steady_state_participants(lam: float, mu: float, gamma: float, T: int) -> float:
    """Solve ``M = M gamma e^{-mu T} + sum_{t=0}^{T-1} lam e^{-mu (T - t)}`` for ``M``."""
    if lam < 0 or mu < 0 or gamma < 0 or T < 1:
        raise InvalidParameterError("need lam >= 0, mu >= 0, gamma >= 0, T >= 1")
    carry = gamma * math.exp(-mu * T)
    if carry >= 1.0:
        raise NoSteadyStateError(f"gamma * exp(-mu T) = {carry} >= 1: no steady state")
    inflow = math.fsum(lam * math.exp(-mu * (T - t)) for t in range(int(T)))
    return inflow / (1.0 - carry)
