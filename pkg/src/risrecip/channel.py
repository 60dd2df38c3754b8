"""Link geometry, per-hop propagation and the composite channel h = h_RIS + h_D.

The panel lies in the z = 0 plane with boresight +z.  Both antennas sit in
the x-z plane at (d sin(theta), 0, d cos(theta)) from the panel centre.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SingularityError
from .models import (CodingPattern, Direction, Panel, apply_pattern,
                     validate_pattern)

SPEED_OF_LIGHT = 299_792_458.0

__all__ = [
    "SPEED_OF_LIGHT", "Direction", "LinkGeometry", "DirectLinkKind", "DirectLink",
    "ChannelSample", "Scene", "ReciprocityReport", "antenna_position",
    "propagation_factor", "cascaded_channel", "direct_channel", "evaluate_link",
    "received_power", "reciprocity_report",
]


@dataclass(frozen=True)
class LinkGeometry:
    d1: float
    theta1: float
    d2: float
    theta2: float
    f: float
    pt_dbm: float = 0.0

    def __post_init__(self):
        for name in ("d1", "d2"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("theta1", "theta2"):
            if not abs(getattr(self, name)) < 90:
                raise ConfigurationError(
                    f"{name} must lie in (-90, 90) deg, got {getattr(self, name)}")
        if not self.f > 0:
            raise ConfigurationError(f"f must be > 0, got {self.f}")

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.f

    @property
    def antenna1(self):
        return antenna_position(self.d1, self.theta1)

    @property
    def antenna2(self):
        return antenna_position(self.d2, self.theta2)

    def endpoints(self, direction: Direction):
        """(tx position, rx position, tx angle, rx angle) for ``direction``."""
        if direction is Direction.DOWNLINK:
            return self.antenna1, self.antenna2, self.theta1, self.theta2
        return self.antenna2, self.antenna1, self.theta2, self.theta1


class DirectLinkKind(enum.Enum):
    NONE = "none"
    FREE_SPACE = "free_space"
    FIXED = "fixed"


@dataclass(frozen=True)
class DirectLink:
    kind: DirectLinkKind = DirectLinkKind.NONE
    value: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "kind", DirectLinkKind(self.kind))
        object.__setattr__(self, "value", complex(self.value))
        if not (math.isfinite(self.value.real) and math.isfinite(self.value.imag)):
            raise ConfigurationError("fixed direct-link value must be finite")

    @classmethod
    def none(cls):
        return cls(DirectLinkKind.NONE)

    @classmethod
    def free_space(cls):
        return cls(DirectLinkKind.FREE_SPACE)

    @classmethod
    def fixed(cls, value):
        return cls(DirectLinkKind.FIXED, complex(value))


@dataclass(frozen=True)
class ChannelSample:
    h_d: complex
    h_ris: complex
    h_total: complex
    direction: Direction
    f: float
    pattern_id: str = ""


@dataclass(frozen=True)
class Scene:
    panel: Panel
    pattern: CodingPattern
    geometry: LinkGeometry
    direct: DirectLink = DirectLink()
    pattern_id: str = ""

    def with_pattern(self, pattern, pattern_id=None):
        return Scene(self.panel, pattern, self.geometry, self.direct,
                     pattern.name if pattern_id is None else pattern_id)


def antenna_position(d, theta_deg) -> np.ndarray:
    if not d > 0:
        raise ConfigurationError(f"antenna distance must be > 0, got {d}")
    t = math.radians(theta_deg)
    return np.array([d * math.sin(t), 0.0, d * math.cos(t)])


def _spreading(r, lam):
    k = 2 * np.pi / lam
    return (lam / (4 * np.pi * r)) * np.exp(-1j * k * r)


def propagation_factor(p_a, p_b, lam) -> complex:
    """Free-space spherical-wave factor (lambda / 4 pi r) exp(-j 2 pi r / lambda)."""
    r = float(np.linalg.norm(np.asarray(p_a, float) - np.asarray(p_b, float)))
    if r == 0.0:
        raise SingularityError("coincident points in propagation_factor")
    return complex(_spreading(r, lam))


def _hop_factors(points, target, lam):
    r = np.linalg.norm(points - np.asarray(target, float), axis=1)
    if np.any(r == 0.0):
        raise SingularityError("antenna placed on an RIS element")
    return _spreading(r, lam)


def cascaded_channel(panel: Panel, coefficients, geometry: LinkGeometry,
                     direction: Direction) -> complex:
    """Sum over elements of Gamma_n * g(tx, n) * g(n, rx), row-major order."""
    gamma = np.asarray(coefficients, dtype=complex)
    if gamma.shape != (panel.n_elements,):
        raise ConfigurationError(
            f"{gamma.size} coefficients for a panel of {panel.n_elements} elements")
    tx, rx, _, _ = geometry.endpoints(direction)
    lam = geometry.wavelength
    pos = panel.element_positions
    r_tx = np.linalg.norm(pos - tx, axis=1)
    r_rx = np.linalg.norm(pos - rx, axis=1)
    if np.any(r_tx == 0.0) or np.any(r_rx == 0.0):
        raise SingularityError("antenna placed on an RIS element")
    # built from r_tx*r_rx and r_tx+r_rx so swapping tx/rx is bit-exact
    two_hop = ((lam / (4 * np.pi)) ** 2 / (r_tx * r_rx)) * np.exp(-2j * np.pi / lam * (r_tx + r_rx))
    return complex((gamma * two_hop).sum())


def direct_channel(geometry: LinkGeometry, model: DirectLink) -> complex:
    if model.kind is DirectLinkKind.NONE:
        return 0j
    if model.kind is DirectLinkKind.FIXED:
        return model.value
    return propagation_factor(geometry.antenna1, geometry.antenna2, geometry.wavelength)


def incident_power_watts(panel: Panel, geometry: LinkGeometry, direction: Direction):
    """Power reaching each element from the transmitter (isotropic free space)."""
    tx, _, _, _ = geometry.endpoints(direction)
    pt_w = 1e-3 * 10 ** (geometry.pt_dbm / 10)
    g = _hop_factors(panel.element_positions, tx, geometry.wavelength)
    return pt_w * np.abs(g) ** 2


def evaluate_link(scene: Scene, direction: Direction) -> ChannelSample:
    geom = scene.geometry
    _, _, th_tx, th_rx = geom.endpoints(direction)
    validate_pattern(scene.panel, scene.pattern)
    power = None
    if getattr(scene.panel.cell_model, "power_dependent", False):
        power = incident_power_watts(scene.panel, geom, direction)
    gamma = apply_pattern(scene.panel, scene.pattern, th_tx, th_rx, direction, power)
    h_ris = cascaded_channel(scene.panel, gamma, geom, direction)
    h_d = direct_channel(geom, scene.direct)
    return ChannelSample(h_d, h_ris, h_d + h_ris, direction, geom.f,
                         scene.pattern_id or scene.pattern.name)


def received_power(pt_dbm, h) -> float:
    """Pt + 20 log10|h| in dBm; -inf when |h| = 0 (below floor)."""
    mag = abs(h)
    if mag == 0:
        return -math.inf
    return pt_dbm + 20 * math.log10(mag)


def format_power(p_dbm, digits=1):
    return "below floor" if p_dbm == -math.inf else f"{p_dbm:.{digits}f}"


def phase_deg(h) -> float:
    return math.degrees(math.atan2(h.imag, h.real))


def _wrapped_phase_diff(a, b):
    if a == 0 or b == 0:
        return 0.0
    return abs(math.degrees(math.atan2((a * b.conjugate()).imag, (a * b.conjugate()).real)))


def _magnitude_diff_db(a, b):
    ma, mb = abs(a), abs(b)
    if ma == mb:
        return 0.0
    if ma == 0 or mb == 0:
        return math.inf
    return abs(20 * math.log10(ma / mb))


@dataclass(frozen=True)
class ReciprocityReport:
    h_up: complex
    h_down: complex
    magnitude_dev_db: float
    phase_dev_deg: float
    reciprocal: bool
    up: ChannelSample = None
    down: ChannelSample = None

    @property
    def verdict(self):
        return "Reciprocal" if self.reciprocal else "Nonreciprocal"

    def render(self, pt_dbm=0.0):
        """Report-style rendering at 0.1 dB / 1 degree precision."""
        pu, pd = received_power(pt_dbm, self.h_up), received_power(pt_dbm, self.h_down)
        return (f"power up/down: {format_power(pu)} / {format_power(pd)} dBm, "
                f"phase up/down: {phase_deg(self.h_up):.0f} / {phase_deg(self.h_down):.0f} deg")


def reciprocity_report(scene: Scene, mag_tol_db=1e-9, phase_tol_deg=1e-9) -> ReciprocityReport:
    up = evaluate_link(scene, Direction.UPLINK)
    down = evaluate_link(scene, Direction.DOWNLINK)
    dm = _magnitude_diff_db(up.h_total, down.h_total)
    dp = _wrapped_phase_diff(up.h_total, down.h_total)
    return ReciprocityReport(up.h_total, down.h_total, dm, dp,
                             dm <= mag_tol_db and dp <= phase_tol_deg, up, down)
