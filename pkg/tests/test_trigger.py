import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etconsensus.errors import TimeRegressionError, ZeroRateBoundError
from etconsensus.trigger import ChannelLabel, TriggerChannel, check_and_update, inter_event_stats, zeno_certificate


def held_at_zero(threshold=0.001):
    ch = TriggerChannel(threshold, ChannelLabel(0, "state", 1))
    check_and_update(ch, 0.0, 0.0)
    return ch


@pytest.mark.parametrize("current, expected", [(0.0005, (0.0, False)), (0.0011, (0.0011, True)), (0.001, (0.0, False))])
def test_threshold_examples(current, expected):
    assert check_and_update(held_at_zero(), current, 0.001) == expected


def test_first_evaluation_always_fires():
    ch = TriggerChannel(1.0)
    assert check_and_update(ch, 0.3, 0.0) == (0.3, True)
    assert ch.count == 1


def test_time_regression():
    ch = held_at_zero()
    check_and_update(ch, 0.0, 0.5)
    with pytest.raises(TimeRegressionError):
        check_and_update(ch, 0.0, 0.4)


def test_inter_event_stats():
    empty = inter_event_stats(TriggerChannel(0.1))
    assert empty.count == 0 and math.isinf(empty.min_gap)
    s = inter_event_stats([0.0, 0.1, 0.3])
    assert s.count == 3
    assert s.min_gap == pytest.approx(0.1) and s.mean_gap == pytest.approx(0.15)


def test_zeno_certificate():
    assert zeno_certificate(0.001, 2.0) == pytest.approx(0.0005)
    assert zeno_certificate(TriggerChannel(0.002), 2.0) == pytest.approx(2 * zeno_certificate(0.001, 2.0))
    with pytest.raises(ZeroRateBoundError):
        zeno_certificate(0.001, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=200), st.floats(1e-4, 0.5))
def test_hold_semantics(signal, threshold):
    ch = TriggerChannel(threshold)
    prev = None
    for k, x in enumerate(signal):
        held, fired = check_and_update(ch, x, k * 1e-3)
        # the held value never lags the signal by more than the threshold
        assert abs(x - held) <= threshold
        if not fired:
            assert held == prev
        prev = held
    assert ch.count == len(ch.event_times) == len(ch.event_values)
    assert all(b > a for a, b in zip(ch.event_times, ch.event_times[1:]))
