"""Reciprocity-breaking cells and time-modulated control.

Three mechanisms live here: one-way active cells, periodic piecewise-constant
control schedules (analysed through their harmonic spectrum) and
power-dependent asymmetric cells.
"""

from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import SPEED_OF_LIGHT, Scene, evaluate_link
from .errors import ConfigurationError, ScenarioParseError, ScheduleError
from .models import (CodingPattern, Direction, Mechanism, PatternKind,
                     ReciprocityClass, RECIPROCAL, reflection_coefficient)


# -- active one-way cells ---------------------------------------------------

class ActiveState(enum.Enum):
    BIDIRECTIONAL = "bidirectional"
    FORWARD_ONLY = "forward"
    BACKWARD_ONLY = "backward"
    OFF = "off"


@dataclass(frozen=True)
class ActiveCellModel:
    """Amplifying cell with switchable transmission state.

    Forward is the downlink (antenna 1 -> antenna 2); backward is the uplink.
    """

    state: ActiveState = ActiveState.FORWARD_ONLY
    gain_db: float = 13.0
    isolation_db: float = 60.0

    continuous = False
    binary = False
    passive = False

    def __post_init__(self):
        object.__setattr__(self, "state", ActiveState(self.state))
        if self.isolation_db < 0:
            raise ConfigurationError("isolation_db must be >= 0")

    @property
    def control_range(self):
        return (0.0, 0.0)

    def gain(self, direction: Direction) -> complex:
        passing = 10 ** (self.gain_db / 20)
        blocked = 10 ** (-self.isolation_db / 20)
        if self.state is ActiveState.OFF:
            return 0j
        if self.state is ActiveState.BIDIRECTIONAL:
            return complex(passing)
        forward = direction is Direction.DOWNLINK
        open_ = forward if self.state is ActiveState.FORWARD_ONLY else not forward
        return complex(passing if open_ else blocked)

    def response(self, control, theta_in=0.0, theta_out=0.0, direction=Direction.DOWNLINK,
                 incident_power=None):
        return self.gain(direction)


def active_gain(model: ActiveCellModel, direction: Direction) -> complex:
    return model.gain(direction)


# -- nonlinear asymmetric cells ---------------------------------------------

@dataclass(frozen=True)
class NonlinearCellModel:
    """Saturating transmission t_max / (1 + (c_dir P / p_ref)^gamma).

    The downlink couples weakly into the nonlinear resonator (``c_fwd``) and
    passes; the uplink couples strongly (``c_rev``) and is suppressed.
    """

    t_max: float = 0.9
    c_fwd: float = 0.01
    c_rev: float = 100.0
    gamma: float = 2.0
    p_ref: float = 1e-3

    continuous = False
    binary = False
    passive = True
    power_dependent = True

    def __post_init__(self):
        if not 0 < self.t_max <= 1:
            raise ConfigurationError("t_max must lie in (0, 1]")
        if not 0 <= self.c_fwd < self.c_rev:
            raise ConfigurationError("need 0 <= c_fwd < c_rev")
        if not (self.gamma > 0 and self.p_ref > 0):
            raise ConfigurationError("gamma and p_ref must be positive")

    @property
    def control_range(self):
        return (0.0, 0.0)

    def transmission(self, direction: Direction, p_in: float) -> float:
        if p_in < 0:
            raise ConfigurationError("incident power must be >= 0")
        c = self.c_fwd if direction is Direction.DOWNLINK else self.c_rev
        return self.t_max / (1.0 + (c * p_in / self.p_ref) ** self.gamma)

    def response(self, control, theta_in=0.0, theta_out=0.0, direction=Direction.DOWNLINK,
                 incident_power=None):
        return complex(self.transmission(direction, incident_power or 0.0))


def nonlinear_transmission(model: NonlinearCellModel, direction: Direction, p_in: float) -> float:
    return model.transmission(direction, p_in)


# -- control schedules --------------------------------------------------------

@dataclass(frozen=True)
class ControlSchedule:
    """Periodic piecewise-constant control per group.

    ``segments[g]`` is a tuple of (start_frac, end_frac, control) covering
    [0, 1) of the period without gaps or overlaps.
    """

    period: float
    segments: tuple

    def __post_init__(self):
        if not self.period > 0:
            raise ScheduleError("schedule period must be > 0")
        if not self.segments:
            raise ScheduleError("schedule needs at least one group")
        norm = []
        for g, segs in enumerate(self.segments):
            segs = tuple(sorted((float(s), float(e), v) for s, e, v in segs))
            if not segs:
                raise ScheduleError(f"group {g} has no segments")
            if segs[0][0] != 0.0 or segs[-1][1] != 1.0:
                raise ScheduleError(f"group {g} segments must start at 0 and end at 1")
            for i, (s, e, _) in enumerate(segs):
                if not e > s:
                    raise ScheduleError(f"group {g} segment {i} is empty or reversed")
                if i and s < segs[i - 1][1]:
                    raise ScheduleError(f"group {g} segments overlap at {s}")
                if i and s > segs[i - 1][1]:
                    raise ScheduleError(f"group {g} has a gap before {s}")
            norm.append(segs)
        object.__setattr__(self, "segments", tuple(norm))

    @property
    def f_m(self):
        return 1.0 / self.period

    @property
    def n_groups(self):
        return len(self.segments)

    def is_constant(self):
        return all(len({v for _, _, v in segs}) == 1 for segs in self.segments)

    def value_at(self, group, frac):
        frac = frac % 1.0
        for s, e, v in self.segments[group]:
            if s <= frac < e:
                return v
        return self.segments[group][-1][2]

    def values_at(self, frac):
        return tuple(self.value_at(g, frac) for g in range(self.n_groups))


def constant_schedule(values, period=1e-9) -> ControlSchedule:
    return ControlSchedule(period, tuple(((0.0, 1.0, v),) for v in values))


def square_wave_schedule(n_groups, period=1e-9, low=0, high=1, duty=0.5) -> ControlSchedule:
    seg = ((0.0, duty, low), (duty, 1.0, high))
    return ControlSchedule(period, (seg,) * n_groups)


def _shifted_staircase(levels, shift):
    """Equal-dwell staircase through ``levels``, delayed by ``shift`` periods."""
    m = len(levels)
    shift %= 1.0
    pieces = []
    for i, v in enumerate(levels):
        s, e = i / m + shift, (i + 1) / m + shift
        if s >= 1.0:
            s, e = s - 1.0, e - 1.0
        for a, b in ((s, e),) if e <= 1.0 else ((s, 1.0), (0.0, e - 1.0)):
            if b > a:
                pieces.append((a, b, v))
    pieces.sort()
    # snap float edges so the tiling is exact
    fixed = []
    for i, (a, b, v) in enumerate(pieces):
        a = 0.0 if i == 0 else fixed[-1][1]
        b = 1.0 if i == len(pieces) - 1 else b
        fixed.append((a, b, v))
    return tuple(fixed)


def phase_gradient_schedule(panel, period, beta_s, steps=4, reverse=False) -> ControlSchedule:
    """Time-staircase phase ramp per group with a spatial phase gradient.

    Each group cycles through ``steps`` equally spaced phases (descending when
    ``reverse``), delayed so the +1 harmonic (-1 when reversed) carries phase
    ``beta_s * x_group``; ``beta_s`` is in rad/m.
    """
    model = panel.cell_model
    sign = -1 if reverse else 1
    levels = [float(model.control_for_phase((sign * 360.0 * i / steps) % 360.0))
              for i in range(steps)]
    xs = panel.group_center_x()
    return ControlSchedule(period, tuple(
        _shifted_staircase(levels, -beta_s * x / (2 * math.pi)) for x in xs))


def classify_schedule(schedule: ControlSchedule) -> ReciprocityClass:
    return RECIPROCAL if schedule.is_constant() else ReciprocityClass(Mechanism.TIME_VARYING)


def load_schedule(path) -> ControlSchedule:
    """Read a schedule file::

        [schedule]
        period_s = 2e-09
        [group.0]
        segments = 0.0 0.5 0; 0.5 1.0 1
    """
    path = Path(path)
    cp = configparser.ConfigParser()
    try:
        cp.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ScenarioParseError(str(exc).splitlines()[0], path,
                                 getattr(exc, "lineno", None)) from None
    lines = path.read_text().splitlines()

    def lineno(needle):
        for i, ln in enumerate(lines, 1):
            if ln.strip().startswith(needle):
                return i
        return None

    if not cp.has_section("schedule"):
        raise ScenarioParseError("missing [schedule] section", path)
    unknown = set(cp["schedule"]) - {"period_s"}
    if unknown:
        key = sorted(unknown)[0]
        raise ScenarioParseError("unknown key", path, lineno(key), f"schedule.{key}")
    try:
        period = float(cp["schedule"]["period_s"])
    except (KeyError, ValueError):
        raise ScenarioParseError("period_s missing or not a number", path,
                                 lineno("period_s"), "schedule.period_s") from None
    groups = {}
    for sec in cp.sections():
        if sec == "schedule":
            continue
        if not sec.startswith("group.") or not sec[6:].isdigit():
            raise ScenarioParseError("unknown section", path, lineno(f"[{sec}]"), sec)
        extra = set(cp[sec]) - {"segments"}
        if extra:
            key = sorted(extra)[0]
            raise ScenarioParseError("unknown key", path, lineno(key), f"{sec}.{key}")
        segs = []
        for chunk in cp[sec].get("segments", "").split(";"):
            if not chunk.strip():
                continue
            parts = chunk.split()
            if len(parts) != 3:
                raise ScenarioParseError("segment needs 'start end value'", path,
                                         lineno("segments"), f"{sec}.segments")
            try:
                s, e, v = float(parts[0]), float(parts[1]), float(parts[2])
            except ValueError:
                raise ScenarioParseError("non-numeric segment", path, lineno("segments"),
                                         f"{sec}.segments") from None
            segs.append((s, e, int(v) if v.is_integer() else v))
        groups[int(sec[6:])] = tuple(segs)
    if sorted(groups) != list(range(len(groups))):
        raise ScenarioParseError("group sections must be numbered 0..G-1", path)
    try:
        return ControlSchedule(period, tuple(groups[g] for g in range(len(groups))))
    except ScheduleError as exc:
        raise ScenarioParseError(str(exc), path) from None


def save_schedule(schedule: ControlSchedule, path):
    out = [f"[schedule]\nperiod_s = {schedule.period!r}\n"]
    for g, segs in enumerate(schedule.segments):
        body = "; ".join(f"{s!r} {e!r} {v!r}" for s, e, v in segs)
        out.append(f"[group.{g}]\nsegments = {body}\n")
    Path(path).write_text("\n".join(out))


# -- harmonic analysis --------------------------------------------------------

@dataclass
class HarmonicSpectrum:
    """Per-group Fourier coefficients a[k][g] of Gamma_g(t).

    ``mean_power[g]`` is the time average of |Gamma_g|^2 and ``tail_energy[g]``
    the analytic energy of all harmonics beyond ``k_max``.
    """

    coefficients: dict
    f_m: float
    carrier: float | None = None
    mean_power: np.ndarray = field(default=None, repr=False)
    tail_energy: np.ndarray = field(default=None, repr=False)

    @property
    def k_max(self):
        return max(self.coefficients)

    def harmonics(self):
        return sorted(self.coefficients)

    def __getitem__(self, k):
        return self.coefficients[k]

    def per_element(self, panel):
        groups = panel.element_groups
        return {k: np.asarray(a)[groups] for k, a in self.coefficients.items()}

    def energy(self):
        return sum(np.abs(a) ** 2 for a in self.coefficients.values())

    def parseval_residual(self):
        """sum_k |a_k|^2 + tail - mean |Gamma|^2, per group."""
        return self.energy() + self.tail_energy - self.mean_power


def _segment_gammas(schedule, model, theta_in, theta_out, direction):
    return [[(s, e, reflection_coefficient(model, v, theta_in, theta_out, direction))
             for s, e, v in segs] for segs in schedule.segments]


def _turn(x):
    """exp(j 2 pi x), reduced modulo one turn so integer x gives exactly 1."""
    frac = math.fmod(x, 1.0)
    return complex(math.cos(2 * math.pi * frac), math.sin(2 * math.pi * frac))


def fourier_coefficients(schedule: ControlSchedule, model, k_max: int, theta_in=0.0,
                         theta_out=0.0, direction=Direction.DOWNLINK,
                         carrier=None) -> HarmonicSpectrum:
    """Closed-form Fourier series of each group's piecewise-constant response."""
    if k_max < 1:
        raise ConfigurationError("k_max must be >= 1")
    gsegs = _segment_gammas(schedule, model, theta_in, theta_out, direction)
    coeffs = {}
    for k in range(-k_max, k_max + 1):
        row = np.empty(len(gsegs), dtype=complex)
        for g, segs in enumerate(gsegs):
            if k == 0:
                row[g] = sum(gam * (e - s) for s, e, gam in segs)
            else:
                w = -2j * math.pi * k
                row[g] = sum(gam * (_turn(-k * e) - _turn(-k * s)) for s, e, gam in segs) / w
        coeffs[k] = row
    mean_power = np.array([sum(abs(gam) ** 2 * (e - s) for s, e, gam in segs)
                           for segs in gsegs])
    tail = np.array([_tail_energy(segs, k_max) for segs in gsegs])
    return HarmonicSpectrum(coeffs, schedule.f_m, carrier, mean_power, tail)


def _tail_energy(segs, k_max):
    """Energy in harmonics |k| > k_max from the jump representation.

    a_k = sum_i J_i exp(-j 2 pi k t_i) / (j 2 pi k) with J_i the jump at t_i;
    the sum over |k| > K reduces to cosine series with a Bernoulli closed form.
    """
    times = np.array([s for s, _, _ in segs])
    vals = np.array([gam for _, _, gam in segs])
    jumps = vals - np.roll(vals, 1)
    if not np.any(jumps):
        return 0.0
    delta = (times[:, None] - times[None, :]) % 1.0
    full = math.pi ** 2 * (delta ** 2 - delta + 1.0 / 6.0)
    ks = np.arange(1, k_max + 1)
    partial = (np.cos(2 * math.pi * ks[None, None, :] * delta[..., None]) / ks ** 2).sum(-1)
    form = jumps[:, None] * jumps.conj()[None, :] * (full - partial)
    return float(form.sum().real / (2 * math.pi ** 2))


@dataclass(frozen=True)
class HarmonicMap:
    """Far-field amplitude per harmonic k (rows) and observation angle (columns)."""

    ks: np.ndarray
    thetas: np.ndarray
    amplitudes: np.ndarray
    f: float
    f_m: float

    def __getitem__(self, key):
        k, theta = key
        i = int(np.flatnonzero(self.ks == k)[0])
        j = int(np.argmin(np.abs(self.thetas - theta)))
        return self.amplitudes[i, j]

    def items(self):
        for i, k in enumerate(self.ks):
            for j, th in enumerate(self.thetas):
                yield (int(k), float(th)), complex(self.amplitudes[i, j])

    def __len__(self):
        return self.amplitudes.size


def angle_grid(resolution=0.01, limit=90.0):
    """Uniform grid strictly inside (-limit, limit)."""
    n = int(round(limit / resolution))
    return np.arange(-n + 1, n) * resolution


def harmonic_radiation(panel, spectrum: HarmonicSpectrum, theta_in, f, theta_grid,
                       k_range=None) -> HarmonicMap:
    """Plane-wave array response of each harmonic.

    amplitude(k, theta) = sum_n a_{k,n} exp(j k0 sin(theta_in) x_n
                                            + j k_k sin(theta) x_n)
    with k_k the wavenumber at the shifted frequency f + k f_m.
    """
    thetas = np.asarray(theta_grid, dtype=float)
    if thetas.size == 0:
        raise ConfigurationError("empty angle grid")
    if np.any(np.abs(thetas) >= 90):
        raise ConfigurationError("angle grid must lie inside (-90, 90)")
    ks = np.array(list(k_range) if k_range is not None else spectrum.harmonics())
    a_el = spectrum.per_element(panel)
    rows, cols = panel.rows, panel.cols
    x_col = panel.x[:cols]
    k_in = 2 * math.pi * f / SPEED_OF_LIGHT
    incident = np.exp(1j * k_in * math.sin(math.radians(theta_in)) * x_col)
    s_out = np.sin(np.radians(thetas))
    out = np.zeros((ks.size, thetas.size), dtype=complex)
    for i, k in enumerate(ks):
        if int(k) not in a_el:
            continue
        # every element of a column shares x, so rows collapse first
        w = a_el[int(k)].reshape(rows, cols).sum(axis=0) * incident
        k_out = 2 * math.pi * (f + k * spectrum.f_m) / SPEED_OF_LIGHT
        out[i] = np.exp(1j * k_out * np.outer(s_out, x_col)) @ w
    return HarmonicMap(ks, thetas, out, f, spectrum.f_m)


def dominant_response(hmap: HarmonicMap, rel_tie=1e-12):
    """(k, theta, amplitude) of the strongest entry, or None when all are zero.

    Near-ties are broken by smaller |k|, then smaller theta.
    """
    mags = np.abs(hmap.amplitudes)
    if mags.size == 0:
        raise ConfigurationError("empty harmonic map")
    peak = mags.max()
    if peak == 0:
        return None
    cand = np.argwhere(mags >= peak * (1 - rel_tie))
    i, j = min(cand, key=lambda ij: (abs(int(hmap.ks[ij[0]])), hmap.thetas[ij[1]]))
    return int(hmap.ks[i]), float(hmap.thetas[j]), complex(hmap.amplitudes[i, j])


def _phase_slope(panel, coeffs):
    """Least-squares slope (rad/m) of arg(a_g) against group centre x."""
    if panel.n_groups < 2 or np.any(coeffs == 0):
        return 0.0
    xs = panel.group_center_x()
    ph = np.unwrap(np.angle(coeffs))
    return float(np.polyfit(xs, ph, 1)[0])


@dataclass(frozen=True)
class RoundTripResult:
    """Angles are in the specular frame: positive means mirror side of incidence."""

    theta1: float
    f1: float
    theta2: float
    f2: float
    theta3: float
    f3: float
    k1: int
    k2: int
    reciprocal: bool
    momentum_lhs: float
    momentum_rhs: float
    grid_resolution: float

    @property
    def momentum_imbalance(self):
        return self.momentum_lhs - self.momentum_rhs


def _pass(panel, schedule, theta_in, f, k_max, grid):
    spec = fourier_coefficients(schedule, panel.cell_model, k_max, carrier=f)
    hmap = harmonic_radiation(panel, spec, theta_in, f, grid)
    dom = dominant_response(hmap)
    if dom is None:
        raise ScheduleError("no dominant harmonic: the surface radiates nothing")
    k, theta_out, _ = dom
    return k, -theta_out, f + k * spec.f_m, _phase_slope(panel, spec[k])


def round_trip_test(panel, schedule: ControlSchedule, theta1, f1, schedule_down=None,
                    k_max=4, grid_resolution=0.01, angle_tol=0.01) -> RoundTripResult:
    """Uplink pass from (theta1, f1), then downlink pass launched at (theta2, f2)."""
    grid = angle_grid(grid_resolution)
    down = schedule if schedule_down is None else schedule_down
    k1, theta2, f2, slope1 = _pass(panel, schedule, theta1, f1, k_max, grid)
    k2, theta3, f3, slope2 = _pass(panel, down, theta2, f2, k_max, grid)
    c = SPEED_OF_LIGHT
    lhs = 2 * math.pi * f3 / c * math.sin(math.radians(theta3))
    rhs = 2 * math.pi * f1 / c * math.sin(math.radians(theta1)) + slope1 + slope2
    reciprocal = abs(theta3 - theta1) <= angle_tol and f3 == f1
    return RoundTripResult(theta1, f1, theta2, f2, theta3, f3, k1, k2, reciprocal,
                           lhs, rhs, grid_resolution)


def momentum_tolerance(result: RoundTripResult):
    """Ledger tolerance implied by the angle grid (one cell on each output angle)."""
    c = SPEED_OF_LIGHT
    step = math.radians(result.grid_resolution)
    return 2 * math.pi / c * (result.f3 * step + result.f2 * step)


# -- brute-force time-domain validator ---------------------------------------

def _primitive(segs_gamma, tau):
    """Integral of Gamma over [0, tau] for periodic piecewise-constant Gamma."""
    edges = np.array([0.0] + [e for _, e, _ in segs_gamma])
    vals = np.array([g for _, _, g in segs_gamma])
    cum = np.concatenate([[0.0], np.cumsum(vals * np.diff(edges))])
    whole = np.floor(tau)
    frac = tau - whole
    re = np.interp(frac, edges, cum.real)
    im = np.interp(frac, edges, cum.imag)
    return whole * cum[-1] + re + 1j * im


def time_domain_oracle(panel, schedule: ControlSchedule, theta_in, f, theta_out,
                       n_periods=4, samples_per_period=4096, k_max=8) -> dict:
    """Spectral lines at f + k f_m seen at ``theta_out``, from time samples.

    Each element's response is synthesised as cell-averaged samples of
    Gamma_n(t - delay_n), weighted by its incident and carrier phase, summed
    in time, and transformed with an FFT.  Bin k is divided by the known
    sample-and-hold response of the averaging cell.
    """
    if samples_per_period < 64:
        raise ConfigurationError("samples_per_period must be >= 64")
    if n_periods < 4:
        raise ConfigurationError("n_periods must be >= 4")
    if samples_per_period <= 4 * k_max:
        raise ConfigurationError("aliasing guard: samples_per_period must exceed 4*k_max")
    gsegs = _segment_gammas(schedule, panel.cell_model, 0.0, 0.0, Direction.DOWNLINK)
    n = n_periods * samples_per_period
    step = 1.0 / samples_per_period
    t0 = np.arange(n + 1) * step
    c = SPEED_OF_LIGHT
    k_in = 2 * math.pi * f / c
    s_in, s_out = math.sin(math.radians(theta_in)), math.sin(math.radians(theta_out))
    signal = np.zeros(n, dtype=complex)
    groups = panel.element_groups
    for idx in range(panel.n_elements):
        x = panel.element_positions[idx, 0]
        delay = -x * s_out / c
        weight = np.exp(1j * k_in * s_in * x) * np.exp(-2j * math.pi * f * delay)
        tau = t0 - delay * schedule.f_m
        segs = gsegs[groups[idx]]
        avg = np.diff(_primitive(segs, tau)) / step
        signal += weight * avg
    spectrum = np.fft.fft(signal) / n
    lines = {}
    for k in range(-k_max, k_max + 1):
        if k == 0:
            hold = 1.0
        else:
            w = 2 * math.pi * k * step
            hold = (np.exp(1j * w) - 1) / (1j * w)
        lines[k] = complex(spectrum[(k * n_periods) % n] / hold)
    return lines


# -- TDD slots -----------------------------------------------------------------

def frozen_pattern(schedule: ControlSchedule, slot_time) -> CodingPattern:
    frac = (slot_time % schedule.period) / schedule.period
    return CodingPattern(PatternKind.CUSTOM, schedule.values_at(frac))


def tdd_slot_channel(scene: Scene, schedule: ControlSchedule, slot_time, direction):
    if slot_time < 0:
        raise ConfigurationError("slot_time must be >= 0")
    if schedule.n_groups != scene.panel.n_groups:
        raise ConfigurationError(
            f"schedule has {schedule.n_groups} groups, panel has {scene.panel.n_groups}")
    pattern = frozen_pattern(schedule, slot_time)
    return evaluate_link(scene.with_pattern(pattern, f"slot@{slot_time:g}s"), direction)
