"""Threshold-based transmission channels with zero-order hold."""
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import TimeRegressionError, ZeroRateBoundError

STATE = "state"          # local sensor -> own controller
NEIGHBOR = "neighbor"    # broadcast of an agent's state to its neighbors
INPUT = "input"          # controller -> actuator
KINDS = (STATE, NEIGHBOR, INPUT)


class ChannelLabel(NamedTuple):
    agent: int
    kind: str
    level: int  # state level (1-based); 0 for the input channel


@dataclass
class TriggerChannel:
    threshold: float
    label: ChannelLabel = None
    held_value: float = None
    event_times: list = field(default_factory=list)
    event_values: list = field(default_factory=list)
    last_eval: float = None

    def __post_init__(self):
        if not self.threshold > 0.0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")

    @property
    def count(self):
        return len(self.event_times)


def check_and_update(ch, current, t):
    """Transmit ``current`` if it drifted strictly more than the threshold
    from the held value (always on the first evaluation).

    Returns ``(transmitted_value, fired)``.
    """
    if ch.last_eval is not None and t < ch.last_eval:
        raise TimeRegressionError(f"channel {ch.label}: t={t} precedes last evaluation {ch.last_eval}")
    ch.last_eval = t
    if ch.held_value is None or abs(current - ch.held_value) > ch.threshold:
        ch.held_value = current
        ch.event_times.append(t)
        ch.event_values.append(current)
        return current, True
    return ch.held_value, False


@dataclass
class InterEventStats:
    count: int
    min_gap: float
    mean_gap: float


def inter_event_stats(ch, horizon=None):
    times = np.asarray(ch.event_times if isinstance(ch, TriggerChannel) else ch, dtype=float)
    if horizon is not None:
        t0, t1 = horizon
        times = times[(times >= t0) & (times <= t1)]
    if times.size < 2:
        return InterEventStats(int(times.size), math.inf, math.inf)
    gaps = np.diff(times)
    return InterEventStats(int(times.size), float(gaps.min()), float(gaps.mean()))


def zeno_certificate(ch, signal_rate_bound):
    """Lower bound threshold / rate_bound on inter-event times of a signal
    whose rate never exceeds ``signal_rate_bound``."""
    threshold = ch.threshold if isinstance(ch, TriggerChannel) else float(ch)
    if not signal_rate_bound > 0.0:
        raise ZeroRateBoundError("rate bound must be positive for a Zeno certificate")
    return threshold / signal_rate_bound
