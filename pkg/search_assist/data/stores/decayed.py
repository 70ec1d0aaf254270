"""
Decayed Weights
(value, last-touch time) pairs with lazy exponential decay and
cycle-materialized step / linear decay
"""
from dataclasses import dataclass

from search_assist.config import EngineConfig
from search_assist.utils.association import decay_factor


@dataclass(slots=True)
class DecayedWeight:
    """
    A weight and the event time it was last touched at

    `base` is the value at the last update; step and linear decay are
    measured from it.
    """
    value: float = 0.0
    touched_ts: int = 0
    base: float = 0.0


class DecayModel:
    """
    Reads and updates DecayedWeights under one configuration

    Exponential decay composes, so reads decay lazily from touched_ts and
    updates fold the decay in. Step and linear decay do not compose: reads
    return the last materialized value, and materialize() (once per decay
    cycle) sets it to base * f(age since the last update).
    """

    def __init__(self, cfg: EngineConfig):
        self.cfg = cfg
        self.lazy = cfg.decay_composes

    def factor(self, delta_ms: float) -> float:
        return decay_factor(delta_ms, self.cfg)

    def new(self, increment: float, now: int) -> DecayedWeight:
        return DecayedWeight(value=increment, touched_ts=now, base=increment)

    def read(self, weight: DecayedWeight, now: int) -> float:
        if not self.lazy or now <= weight.touched_ts:
            return weight.value
        return weight.value * self.factor(now - weight.touched_ts)

    def add(self, weight: DecayedWeight, increment: float, now: int) -> None:
        if self.lazy:
            weight.value = self.read(weight, now) + increment
        else:
            weight.value += increment
            weight.base = weight.value
        if now > weight.touched_ts:
            weight.touched_ts = now

    def materialize(self, weight: DecayedWeight, now: int) -> float:
        if self.lazy:
            if now > weight.touched_ts:
                weight.value *= self.factor(now - weight.touched_ts)
                weight.touched_ts = now
        else:
            weight.value = weight.base * self.factor(now - weight.touched_ts)
        return weight.value
