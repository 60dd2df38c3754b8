"""Unit-cell response models, RIS panels and static coding patterns.

Every cell model exposes ``response(control, theta_in, theta_out, direction,
incident_power)`` returning a complex coefficient.  Passive models ignore the
direction and the incident power, which is what makes them reciprocal.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ControlRangeError, UnreachablePhaseError


class Direction(enum.Enum):
    """Link direction.  Uplink: antenna 2 transmits, antenna 1 receives."""

    UPLINK = "uplink"
    DOWNLINK = "downlink"

    @property
    def reverse(self) -> "Direction":
        return Direction.DOWNLINK if self is Direction.UPLINK else Direction.UPLINK


class Mechanism(enum.Enum):
    ACTIVE = "active"
    TIME_VARYING = "time-varying"
    NONLINEAR = "nonlinear"


@dataclass(frozen=True)
class ReciprocityClass:
    mechanism: Mechanism | None = None

    @property
    def reciprocal(self) -> bool:
        return self.mechanism is None

    def __str__(self):
        if self.mechanism is None:
            return "Reciprocal"
        return f"Nonreciprocal({self.mechanism.value})"


RECIPROCAL = ReciprocityClass()


def _check_angles(theta_in, theta_out):
    for name, th in (("theta_in", theta_in), ("theta_out", theta_out)):
        if not abs(th) < 90.0:
            raise ControlRangeError(f"{name}={th} deg outside (-90, 90)")


def _cis_deg(phase_deg):
    return complex(math.cos(math.radians(phase_deg)), math.sin(math.radians(phase_deg)))


@dataclass(frozen=True)
class IdealVaractor:
    """Continuous phase cell: phase rises linearly with the bias voltage."""

    v_min: float = 0.0
    v_max: float = 21.0
    phase_span: float = 360.0
    magnitude: float = 1.0

    continuous = True
    binary = False
    passive = True

    def __post_init__(self):
        if not self.v_max > self.v_min:
            raise ConfigurationError("IdealVaractor needs v_max > v_min")
        if not 0.0 <= self.magnitude <= 1.0:
            raise ConfigurationError(f"passive magnitude {self.magnitude} outside [0, 1]")

    @property
    def control_range(self):
        return (self.v_min, self.v_max)

    def phase(self, voltage):
        return self.phase_span * (voltage - self.v_min) / (self.v_max - self.v_min)

    def response(self, control, theta_in=0.0, theta_out=0.0, direction=None, incident_power=None):
        if not self.v_min <= control <= self.v_max:
            raise ControlRangeError(f"voltage {control} V outside [{self.v_min}, {self.v_max}]")
        return self.magnitude * _cis_deg(self.phase(control))

    def control_for_phase(self, phase_deg):
        lo, hi = sorted((0.0, self.phase_span))
        target = _fold_into(phase_deg, lo, hi)
        if target is None:
            raise UnreachablePhaseError(
                f"phase {phase_deg} deg not reachable with span {self.phase_span} deg")
        return self.v_min + (self.v_max - self.v_min) * target / self.phase_span


def _fold_into(phase_deg, lo, hi):
    """Shift ``phase_deg`` by whole turns into [lo, hi]; None if impossible."""
    t = phase_deg - 360.0 * math.floor((phase_deg - lo) / 360.0)
    if t > hi:
        # 360-periodicity: an endpoint may coincide with the target modulo a turn
        if math.isclose(t - 360.0, lo, abs_tol=1e-9) or math.isclose(t, lo + 360.0, abs_tol=1e-9):
            return lo
        return None
    return t


@dataclass(frozen=True)
class TableVaractor:
    """Measured varactor curve: (voltage, magnitude, phase) samples.

    Magnitude and *unwrapped* phase are interpolated linearly.
    """

    voltages: tuple
    magnitudes: tuple
    phases: tuple

    continuous = True
    binary = False
    passive = True

    def __post_init__(self):
        n = len(self.voltages)
        if n == 0:
            raise ConfigurationError("empty varactor table")
        if len(self.magnitudes) != n or len(self.phases) != n:
            raise ConfigurationError("varactor table columns differ in length")
        v = np.asarray(self.voltages, dtype=float)
        if n > 1 and not np.all(np.diff(v) > 0):
            raise ConfigurationError("varactor table voltages must be strictly increasing")
        m = np.asarray(self.magnitudes, dtype=float)
        if np.any(m < 0) or np.any(m > 1):
            raise ConfigurationError("varactor table magnitude outside [0, 1]")
        object.__setattr__(self, "voltages", tuple(float(x) for x in v))
        object.__setattr__(self, "magnitudes", tuple(float(x) for x in m))
        object.__setattr__(self, "phases", tuple(float(x) for x in self.phases))

    @property
    def v_min(self):
        return self.voltages[0]

    @property
    def v_max(self):
        return self.voltages[-1]

    @property
    def control_range(self):
        return (self.v_min, self.v_max)

    @property
    def unwrapped_phases(self):
        return np.unwrap(np.asarray(self.phases), period=360.0)

    def magnitude_phase(self, voltage):
        """Interpolated (magnitude, unwrapped phase in degrees)."""
        if not self.v_min <= voltage <= self.v_max:
            raise ControlRangeError(f"voltage {voltage} V outside [{self.v_min}, {self.v_max}]")
        v = np.asarray(self.voltages)
        mag = float(np.interp(voltage, v, self.magnitudes))
        ph = float(np.interp(voltage, v, self.unwrapped_phases))
        return mag, ph

    def phase(self, voltage):
        return self.magnitude_phase(voltage)[1]

    def response(self, control, theta_in=0.0, theta_out=0.0, direction=None, incident_power=None):
        mag, ph = self.magnitude_phase(control)
        return mag * _cis_deg(ph)

    def control_for_phase(self, phase_deg, tol=1e-12):
        ph = self.unwrapped_phases
        if len(ph) < 2 or np.any(np.diff(ph) == 0) or not (
                np.all(np.diff(ph) > 0) or np.all(np.diff(ph) < 0)):
            raise UnreachablePhaseError("table phase curve is not strictly monotone")
        lo, hi = float(min(ph[0], ph[-1])), float(max(ph[0], ph[-1]))
        target = _fold_into(phase_deg, lo, hi)
        if target is None:
            raise UnreachablePhaseError(
                f"phase {phase_deg} deg outside table span [{lo:.3f}, {hi:.3f}] deg")
        a, b = self.v_min, self.v_max
        increasing = ph[-1] > ph[0]
        for _ in range(200):
            mid = 0.5 * (a + b)
            below = self.phase(mid) < target
            if below == increasing:
                a = mid
            else:
                b = mid
            if b - a <= tol:
                break
        return 0.5 * (a + b)


def load_varactor_table(path) -> TableVaractor:
    """Read a ``voltage_V,magnitude,phase_deg`` CSV file (header required)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigurationError(f"{path}: empty varactor table") from None
        if header != ["voltage_V", "magnitude", "phase_deg"]:
            raise ConfigurationError(
                f"{path}: header must be voltage_V,magnitude,phase_deg, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ConfigurationError(f"{path}: line {lineno}: expected 3 columns")
            try:
                rows.append(tuple(float(c) for c in row))
            except ValueError:
                raise ConfigurationError(f"{path}: line {lineno}: non-numeric value") from None
    if not rows:
        raise ConfigurationError(f"{path}: empty varactor table")
    v, m, p = zip(*rows)
    return TableVaractor(v, m, p)


@dataclass(frozen=True)
class IdealPin:
    """1-bit cell: control 0 or 1 selects one of two phase states."""

    phase_state_0: float = 0.0
    phase_state_1: float = 180.0
    magnitude: float = 1.0

    continuous = False
    binary = True
    passive = True

    def __post_init__(self):
        if not 0.0 <= self.magnitude <= 1.0:
            raise ConfigurationError(f"passive magnitude {self.magnitude} outside [0, 1]")

    @property
    def control_range(self):
        return (0, 1)

    def response(self, control, theta_in=0.0, theta_out=0.0, direction=None, incident_power=None):
        if control not in (0, 1):
            raise ControlRangeError(f"PIN control must be 0 or 1, got {control}")
        ph = self.phase_state_1 if control == 1 else self.phase_state_0
        return self.magnitude * _cis_deg(ph)


@dataclass(frozen=True)
class AngleDependent:
    """Wraps a base cell with a cos^q taper in both incidence and observation angle."""

    base: object
    q: float = 1.0

    def __post_init__(self):
        if self.q < 0:
            raise ConfigurationError("angular taper exponent must be >= 0")

    @property
    def continuous(self):
        return self.base.continuous

    @property
    def binary(self):
        return self.base.binary

    @property
    def passive(self):
        return self.base.passive

    @property
    def control_range(self):
        return self.base.control_range

    def taper(self, theta_in, theta_out):
        # product first: commutative, so swapping the angles is bit-exact
        c = math.cos(math.radians(theta_in)) * math.cos(math.radians(theta_out))
        return c ** self.q

    def response(self, control, theta_in=0.0, theta_out=0.0, direction=None, incident_power=None):
        g = self.base.response(control, theta_in, theta_out, direction, incident_power)
        return g * self.taper(theta_in, theta_out)

    def phase(self, control):
        return self.base.phase(control)

    def control_for_phase(self, phase_deg):
        return self.base.control_for_phase(phase_deg)


def reflection_coefficient(model, control, theta_in=0.0, theta_out=0.0,
                           direction=Direction.DOWNLINK, incident_power=None) -> complex:
    """Complex coefficient of one cell for the given control and angles."""
    _check_angles(theta_in, theta_out)
    return complex(model.response(control, theta_in, theta_out, direction, incident_power))


def reciprocity_class(model) -> ReciprocityClass:
    """Classify a static cell model by probing both link directions."""
    from .nonreciprocal import ActiveCellModel, NonlinearCellModel

    inner = model.base if isinstance(model, AngleDependent) else model
    if isinstance(inner, NonlinearCellModel):
        if inner.c_fwd != inner.c_rev:
            return ReciprocityClass(Mechanism.NONLINEAR)
        return RECIPROCAL
    if isinstance(inner, ActiveCellModel):
        up = inner.gain(Direction.UPLINK)
        down = inner.gain(Direction.DOWNLINK)
        return RECIPROCAL if up == down else ReciprocityClass(Mechanism.ACTIVE)
    lo, hi = model.control_range
    controls = (lo, hi) if model.binary else np.linspace(lo, hi, 7)
    for v in controls:
        for a, b in ((0.0, 0.0), (30.0, -10.0), (60.0, 5.0)):
            up = reflection_coefficient(model, v, a, b, Direction.UPLINK)
            down = reflection_coefficient(model, v, b, a, Direction.DOWNLINK)
            if up != down:
                return ReciprocityClass(Mechanism.ACTIVE)
    return RECIPROCAL


@dataclass(frozen=True)
class Panel:
    """Rectangular RIS in the z = 0 plane, grouped into super-columns."""

    rows: int
    cols: int
    dx: float
    dy: float
    group_cols: int
    cell_model: object
    element_positions: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def n_elements(self):
        return self.rows * self.cols

    @property
    def n_groups(self):
        return self.cols // self.group_cols

    @property
    def element_groups(self):
        """Group index of each element, row-major."""
        return np.tile(np.arange(self.cols) // self.group_cols, self.rows)

    @property
    def x(self):
        return self.element_positions[:, 0]

    def group_center_x(self):
        col_x = (np.arange(self.cols) - (self.cols - 1) / 2) * self.dx
        return col_x.reshape(self.n_groups, self.group_cols).mean(axis=1)


def build_panel(rows, cols, dx, dy, group_cols, cell_model) -> Panel:
    if rows < 1 or cols < 1:
        raise ConfigurationError("panel needs at least one row and one column")
    if not (dx > 0 and dy > 0):
        raise ConfigurationError("element spacing must be positive")
    if group_cols < 1 or cols % group_cols:
        raise ConfigurationError(f"cols={cols} not divisible by group_cols={group_cols}")
    r, c = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    pos = np.column_stack([
        ((c - (cols - 1) / 2) * dx).ravel(),
        ((r - (rows - 1) / 2) * dy).ravel(),
        np.zeros(rows * cols),
    ])
    pos.setflags(write=False)
    return Panel(int(rows), int(cols), float(dx), float(dy), int(group_cols), cell_model, pos)


class PatternKind(enum.Enum):
    IDENTICAL = "identical"
    GRADIENT = "gradient"
    STRIPE = "stripe"
    CUSTOM = "custom"


@dataclass(frozen=True)
class CodingPattern:
    kind: PatternKind
    values: tuple

    @property
    def name(self):
        return self.kind.value


def make_pattern(kind, panel: Panel, value=0.0, step_deg=90.0, values=None) -> CodingPattern:
    """Build a static coding pattern for ``panel``.

    ``value`` is used by Identical, ``step_deg`` by Gradient (group g targets
    phase g*step_deg), ``values`` by Custom.
    """
    kind = PatternKind(kind)
    model = panel.cell_model
    g = panel.n_groups
    if kind is PatternKind.IDENTICAL:
        vals = (value,) * g
    elif kind is PatternKind.GRADIENT:
        if not getattr(model, "continuous", False):
            raise ConfigurationError("gradient pattern requires a continuous-phase cell model")
        vals = tuple(float(model.control_for_phase(i * step_deg)) for i in range(g))
    elif kind is PatternKind.STRIPE:
        if not getattr(model, "binary", False):
            raise ConfigurationError("stripe pattern requires a binary cell model")
        vals = tuple(i % 2 for i in range(g))
    else:
        if values is None:
            raise ConfigurationError("custom pattern needs explicit values")
        vals = tuple(values)
    pattern = CodingPattern(kind, vals)
    validate_pattern(panel, pattern)
    return pattern


def validate_pattern(panel: Panel, pattern: CodingPattern):
    if len(pattern.values) != panel.n_groups:
        raise ConfigurationError(
            f"pattern has {len(pattern.values)} values, panel has {panel.n_groups} groups")
    model = panel.cell_model
    if getattr(model, "binary", False):
        bad = [v for v in pattern.values if v not in (0, 1)]
        if bad:
            raise ControlRangeError(f"PIN pattern values must be 0/1, got {bad[0]}")
    elif getattr(model, "continuous", False):
        lo, hi = model.control_range
        bad = [v for v in pattern.values if not lo <= v <= hi]
        if bad:
            raise ControlRangeError(f"control {bad[0]} V outside [{lo}, {hi}]")


def apply_pattern(panel: Panel, pattern: CodingPattern, theta_in=0.0, theta_out=0.0,
                  direction=Direction.DOWNLINK, incident_power=None) -> np.ndarray:
    """Per-element coefficients (row-major) for a static pattern.

    ``incident_power`` may be a scalar or a per-element array in watts; only
    power-dependent cells use it.
    """
    validate_pattern(panel, pattern)
    groups = panel.element_groups
    if incident_power is None or np.ndim(incident_power) == 0:
        per_group = np.array([
            reflection_coefficient(panel.cell_model, v, theta_in, theta_out, direction,
                                   incident_power)
            for v in pattern.values], dtype=complex)
        return per_group[groups]
    p = np.asarray(incident_power, dtype=float)
    if p.shape != (panel.n_elements,):
        raise ConfigurationError("incident_power must have one entry per element")
    return np.array([
        reflection_coefficient(panel.cell_model, pattern.values[gi], theta_in, theta_out,
                               direction, float(pi))
        for gi, pi in zip(groups, p)], dtype=complex)
