"""Point-and-direction states and linearized states along geodesics.

A direction is stored as ``heading * (cos(phi) d/dl + sin(phi) d/dtheta / r)``
with ``phi`` in (-pi/2, pi/2] and ``heading`` in {+1, -1}. The integrator works
with the full angle ``psi`` measured from d/dl, which is ``phi`` for heading +1
and ``phi + pi`` for heading -1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Tuple

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


def wrap_angle(angle: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, TWO_PI)
    if wrapped <= 0.0:
        wrapped += TWO_PI
    return wrapped - math.pi


def wrap_positive(angle: float) -> float:
    """Reduce an angle to [0, 2*pi)."""
    wrapped = math.fmod(angle, TWO_PI)
    return wrapped + TWO_PI if wrapped < 0.0 else wrapped


def split_psi(psi: float) -> Tuple[float, int]:
    """Convert a full direction angle into (phi, heading)."""
    psi = wrap_angle(psi)
    if psi == HALF_PI or (math.cos(psi) > 0.0 and psi > -HALF_PI):
        return psi, 1
    phi = wrap_angle(psi - math.pi)
    if phi == -HALF_PI:
        phi = HALF_PI
    return phi, -1


def join_psi(phi: float, heading: int) -> float:
    """Full direction angle of (phi, heading)."""
    return phi if heading > 0 else phi + math.pi


@dataclass(frozen=True)
class GeodesicState:
    """Unit tangent vector at (theta, l) with elapsed arc-length time ``s``."""

    theta: float
    l: float
    phi: float
    s: float = 0.0
    heading: int = 1

    def __post_init__(self) -> None:
        if self.heading not in (1, -1):
            raise ValueError(f"heading must be +1 or -1, got {self.heading!r}")
        if not (-HALF_PI < self.phi <= HALF_PI):
            raise ValueError(f"phi={self.phi!r} outside (-pi/2, pi/2]")

    @classmethod
    def from_psi(cls, theta: float, l: float, psi: float, s: float = 0.0) -> "GeodesicState":
        phi, heading = split_psi(psi)
        return cls(theta=wrap_positive(theta), l=l, phi=phi, s=s, heading=heading)

    @property
    def psi(self) -> float:
        return join_psi(self.phi, self.heading)

    def flip(self) -> "GeodesicState":
        """Reverse the direction; ``flip(flip(v)) == v``."""
        return replace(self, heading=-self.heading)

    def with_time(self, s: float) -> "GeodesicState":
        return replace(self, s=s)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta": self.theta,
            "l": self.l,
            "phi": self.phi,
            "heading": self.heading,
            "s": self.s,
        }


def flip(v: GeodesicState) -> GeodesicState:
    """Module-level alias of :meth:`GeodesicState.flip`."""
    return v.flip()


@dataclass(frozen=True)
class JacobiState:
    """Normal Jacobi amplitude and derivative at time ``s``."""

    s: float
    y: float
    dy: float

    @property
    def ratio(self) -> Optional[float]:
        return self.dy / self.y if self.y != 0.0 else None


@dataclass(frozen=True)
class RiccatiState:
    """Wavefront curvature at time ``s``; ``chart`` is ``"u"`` or ``"w"`` (w = 1/u)."""

    s: float
    value: float
    chart: str = "u"

    @property
    def u(self) -> float:
        if self.chart == "u":
            return self.value
        return math.inf if self.value == 0.0 else 1.0 / self.value


__all__ = [
    "TWO_PI",
    "HALF_PI",
    "wrap_angle",
    "wrap_positive",
    "split_psi",
    "join_psi",
    "GeodesicState",
    "flip",
    "JacobiState",
    "RiccatiState",
]
