"""Virtual measurement tool and accuracy statistics.

A probe is a pair of points whose separation is reported continuously.  Each
endpoint is either free (fixed world coordinates) or anchored to a placed
component with a local offset, so it rides along as the machine moves --
mirroring how physical caliper endpoints sit on the hardware.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import mean, stdev

import numpy as np

from .transforms import GeometryError, apply_point, check_vec3


@dataclass(frozen=True)
class ProbeEnd:
    point: np.ndarray                 # world mm (free) or component-local mm
    anchor: str | None = None         # placed-component id, None = free point

    def __post_init__(self):
        object.__setattr__(self, "point", check_vec3(self.point, "probe point"))

    def resolve(self, placed_by_id: dict) -> np.ndarray:
        if self.anchor is None:
            return self.point
        comp = placed_by_id.get(self.anchor)
        if comp is None:
            raise GeometryError(f"probe anchored to unknown component: {self.anchor}")
        return apply_point(comp.transform, self.point)

    def to_dict(self) -> dict:
        d = {"point": [float(x) for x in self.point]}
        if self.anchor is not None:
            d["anchor"] = self.anchor
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeEnd":
        return cls(point=np.asarray(d["point"], dtype=float),
                   anchor=d.get("anchor"))


@dataclass(frozen=True)
class MeasurementProbe:
    name: str
    a: ProbeEnd
    b: ProbeEnd

    def to_dict(self) -> dict:
        return {"name": self.name, "a": self.a.to_dict(), "b": self.b.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "MeasurementProbe":
        return cls(name=d["name"], a=ProbeEnd.from_dict(d["a"]),
                   b=ProbeEnd.from_dict(d["b"]))


def measure(probe: MeasurementProbe, placed) -> float:
    """Euclidean distance (mm) between the probe's resolved endpoints."""
    by_id = {c.component_id: c for c in placed}
    pa = probe.a.resolve(by_id)
    pb = probe.b.resolve(by_id)
    return float(math.dist(pa, pb))


@dataclass(frozen=True)
class AccuracyStats:
    differences_cm: tuple[float, ...]
    mean_cm: float
    sd_cm: float

    @property
    def count(self) -> int:
        return len(self.differences_cm)


def accuracy_stats(pairs: list[tuple[float, float]]) -> AccuracyStats:
    """Mean/sd of |reference - simulated| over measurement pairs (cm).

    Uses the sample standard deviation (n-1 denominator); sd is 0 for a
    single pair.
    """
    if not pairs:
        raise GeometryError("accuracy_stats needs at least one measurement pair")
    diffs = tuple(abs(ref - sim) for ref, sim in pairs)
    sd = stdev(diffs) if len(diffs) > 1 else 0.0
    return AccuracyStats(differences_cm=diffs, mean_cm=mean(diffs), sd_cm=sd)


MM_PER_CM = 10.0


def mm_to_cm(value_mm: float) -> float:
    return value_mm / MM_PER_CM
