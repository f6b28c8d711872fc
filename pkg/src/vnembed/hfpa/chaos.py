"""Logistic-map chaos source used to build crossover masks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ChaosStateError

CHAOS_U = 4.0
_FORBIDDEN_SEEDS = (0.25, 0.5, 0.75)


@dataclass(frozen=True)
class ChaosState:
    x: float
    u: float = CHAOS_U


def logistic_next(state: ChaosState) -> ChaosState:
    if not 0.0 < state.x < 1.0:
        raise ChaosStateError(f"chaos state {state.x!r} outside (0, 1)")
    return ChaosState(state.u * state.x * (1.0 - state.x), state.u)


def is_degenerate(state: ChaosState) -> bool:
    """True for states outside (0, 1) or on the map's non-zero fixed point."""
    x = state.x
    return not 0.0 < x < 1.0 or (state.u > 1 and x == 1.0 - 1.0 / state.u)


def is_admissible_seed(x: float, u: float = CHAOS_U, steps: int = 10) -> bool:
    if not 0.0 < x < 1.0 or x in _FORBIDDEN_SEEDS:
        return False
    st = ChaosState(x, u)
    for _ in range(steps):
        if is_degenerate(st):
            return False
        st = logistic_next(st)
    return not is_degenerate(st)


def admissible_seed(rng, u: float = CHAOS_U) -> float:
    while True:
        x = float(rng.random())
        if is_admissible_seed(x, u):
            return x


def mask_from_sequence(values) -> np.ndarray:
    """1 where the chaos value is at least 0.5, else 0."""
    return (np.asarray(values, dtype=float) >= 0.5).astype(np.int8)


def logistic_sequence(state: ChaosState, length: int) -> tuple[np.ndarray, ChaosState]:
    out = np.empty(length)
    for i in range(length):
        if is_degenerate(state):
            raise ChaosStateError(f"degenerate chaos state {state.x!r}")
        state = logistic_next(state)
        out[i] = state.x
    return out, state


def chaos_mask(length: int, state: ChaosState) -> tuple[np.ndarray, ChaosState]:
    """Advance the map ``length`` times and threshold the iterates at 0.5."""
    if length < 1:
        raise ValueError("mask length must be at least 1")
    values, state = logistic_sequence(state, length)
    return mask_from_sequence(values), state
