"""Configuration for geometry components."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from geodesic_lab_geometry.bump import PerturbationBump
from geodesic_lab_geometry.flow import FlowTolerance
from geodesic_lab_geometry.surface import (
    CapParams,
    ProfileSurface,
    RegionParams,
    build_dumbbell,
    build_round_sphere,
)

SURFACE_KINDS = ("dumbbell", "round-sphere")


@dataclass
class BumpSettings:
    """Bump shape; the anchor is either explicit or placed on the separatrix."""

    amplitude: float = 0.0
    delta_t: float = 0.2
    delta_x: float = 0.1
    box_factor: float = 1.2
    # explicit anchor (theta, l, psi); None means automatic placement
    anchor_theta: Optional[float] = None
    anchor_l: Optional[float] = None
    anchor_psi: Optional[float] = None

    @property
    def has_explicit_anchor(self) -> bool:
        return None not in (self.anchor_theta, self.anchor_l, self.anchor_psi)


@dataclass
class SurfaceConfig:
    """Configuration for surfaces, bumps and integrator tolerances."""

    kind: str = "dumbbell"
    d: float = 20.0
    region: RegionParams = field(default_factory=RegionParams)
    cap: CapParams = field(default_factory=CapParams)
    bump: BumpSettings = field(default_factory=BumpSettings)
    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = "DOP853"

    @classmethod
    def create(
        cls,
        kind: str = "dumbbell",
        d: float = 20.0,
        profile: Optional[Dict[str, Any]] = None,
        bump: Optional[Dict[str, Any]] = None,
        tolerances: Optional[Dict[str, Any]] = None,
    ) -> "SurfaceConfig":
        """Create a config from plain mappings (as parsed from YAML)."""
        if kind not in SURFACE_KINDS:
            raise ValueError(f"unknown surface kind {kind!r}; expected one of {SURFACE_KINDS}")
        profile = dict(profile or {})
        cap_length = profile.pop("cap_length", None)
        tolerances = tolerances or {}
        return cls(
            kind=kind,
            d=d,
            region=RegionParams(**profile),
            cap=CapParams(length=cap_length),
            bump=BumpSettings(**(bump or {})),
            rtol=tolerances.get("rtol", 1e-10),
            atol=tolerances.get("atol", 1e-12),
            method=tolerances.get("method", "DOP853"),
        )

    def with_d(self, d: float) -> "SurfaceConfig":
        return SurfaceConfig(kind=self.kind, d=d, region=self.region, cap=self.cap, bump=self.bump,
                             rtol=self.rtol, atol=self.atol, method=self.method)

    def create_surface(self) -> ProfileSurface:
        """Create the unperturbed surface."""
        if self.kind == "round-sphere":
            return build_round_sphere()
        return build_dumbbell(self.region, self.cap, d=self.d)

    def create_bump(self, surface: ProfileSurface) -> Optional[PerturbationBump]:
        """Create the bump from an explicit anchor (None if no anchor is configured)."""
        settings = self.bump
        if not settings.has_explicit_anchor:
            return None
        return PerturbationBump.anchored(
            settings.amplitude,
            settings.anchor_theta,
            settings.anchor_l,
            settings.anchor_psi,
            band_radius=surface.landmarks.r1 if surface.landmarks else 1.0,
            delta_t=settings.delta_t,
            delta_x=settings.delta_x,
            box_factor=settings.box_factor,
        )

    def create_tolerance(self) -> FlowTolerance:
        return FlowTolerance(rtol=self.rtol, atol=self.atol, method=self.method)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "d": self.d,
            "region": {k: getattr(self.region, k) for k in self.region.__dataclass_fields__},
            "cap_length": self.cap.length,
            "bump": {k: getattr(self.bump, k) for k in self.bump.__dataclass_fields__},
            "tolerances": {"rtol": self.rtol, "atol": self.atol, "method": self.method},
        }


__all__ = ["SURFACE_KINDS", "BumpSettings", "SurfaceConfig"]
