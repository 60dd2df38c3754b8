"""Scenario files and measurement-campaign style experiments.

Scenario files are INI documents with the sections ``scenario``, ``geometry``,
``panel``, ``model`` (optional), ``pattern`` and ``direct_link``::

    [scenario]
    id = ris1-a
    label = RIS 1
    no_phase = false

    [geometry]
    d1_m = 1.5
    theta1_deg = 30
    d2_m = 0.5
    theta2_deg = 0
    f_hz = 4.25e9
    pt_dbm = 0

    [panel]
    rows = 8
    cols = 8
    dx_m = 0.035          ; optional, defaults to half a wavelength
    dy_m = 0.035          ; optional, defaults to half a wavelength
    group_cols = 2
    model = ideal_varactor ; ideal_varactor | table | ideal_pin | active | nonlinear
    angle_q = 0           ; optional cos^q angular taper

    [model]               ; optional, keys depend on panel.model
    v_min = 0
    v_max = 21

    [pattern]
    kinds = identical, gradient
    identical_value = 0
    gradient_step_deg = 90

    [direct_link]
    kind = fixed          ; none | free_space | fixed
    value_re = 0.003
    value_im = 0.0015

Model keys: ideal_varactor (v_min, v_max, phase_span_deg, magnitude), table
(file, relative to the scenario file), ideal_pin (phase0_deg, phase1_deg,
magnitude), active (state, gain_db, isolation_db), nonlinear (t_max, c_fwd,
c_rev, gamma, p_ref_w).  Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import (SPEED_OF_LIGHT, DirectLink, DirectLinkKind, Direction,
                      LinkGeometry, Scene, cascaded_channel, evaluate_link,
                      phase_deg, received_power)
from .errors import (ConfigurationError, FitError, RisError, ScenarioParseError,
                     UnreachablePhaseError)
from .models import (AngleDependent, CodingPattern, IdealPin, IdealVaractor,
                     PatternKind, TableVaractor, apply_pattern, build_panel,
                     load_varactor_table, make_pattern)
from .nonreciprocal import ActiveCellModel, NonlinearCellModel

FIXTURE_ENV = "RISRECIP_FIXTURE_DIR"
FIXTURE_IDS = ("ris1-a", "ris1-b", "ris2-a", "ris2-b")

REPORT_FIELDS = ("scenario", "pattern", "p_up_dbm", "p_down_dbm", "phase_up_deg",
                 "phase_down_deg")
TRAJECTORY_FIELDS = ("voltage_v", "re_up", "im_up", "re_down", "im_down")


@dataclass(frozen=True)
class PatternSpec:
    kind: PatternKind
    value: float = 0.0
    step_deg: float = 90.0
    values: tuple | None = None

    def build(self, panel):
        return make_pattern(self.kind, panel, value=self.value, step_deg=self.step_deg,
                            values=self.values)


@dataclass(frozen=True)
class PanelSpec:
    rows: int
    cols: int
    dx: float
    dy: float
    group_cols: int


@dataclass(frozen=True)
class Scenario:
    id: str
    geometry: LinkGeometry
    panel_spec: PanelSpec
    model: object
    patterns: tuple
    direct: DirectLink = DirectLink()
    label: str = ""
    no_phase: bool = False
    model_file: str | None = None

    @property
    def panel(self):
        p = self.panel_spec
        return build_panel(p.rows, p.cols, p.dx, p.dy, p.group_cols, self.model)

    def pattern(self, kind):
        kind = PatternKind(kind)
        for spec in self.patterns:
            if spec.kind is kind:
                return spec.build(self.panel)
        if kind is PatternKind.IDENTICAL:
            return make_pattern(kind, self.panel, value=self.model.control_range[0])
        return PatternSpec(kind).build(self.panel)

    def scene(self, kind=None):
        kind = self.patterns[0].kind if kind is None else PatternKind(kind)
        pattern = self.pattern(kind)
        return Scene(self.panel, pattern, self.geometry, self.direct, pattern.name)

    def setup_text(self):
        g = self.geometry
        return (f"P_t={g.pt_dbm:g} dBm, f={g.f / 1e9:g} GHz, d_1={g.d1:g} m, "
                f"theta_1={g.theta1:g} deg, d_2={g.d2:g} m, theta_2={g.theta2:g} deg")


# -- file I/O -------------------------------------------------------------------

_KEYS = {
    "scenario": {"id", "label", "no_phase", "description"},
    "geometry": {"d1_m", "theta1_deg", "d2_m", "theta2_deg", "f_hz", "pt_dbm"},
    "panel": {"rows", "cols", "dx_m", "dy_m", "group_cols", "model", "angle_q"},
    "pattern": {"kinds", "identical_value", "gradient_step_deg", "custom_values"},
    "direct_link": {"kind", "value_re", "value_im"},
}
_MODEL_KEYS = {
    "ideal_varactor": {"v_min", "v_max", "phase_span_deg", "magnitude"},
    "table": {"file"},
    "ideal_pin": {"phase0_deg", "phase1_deg", "magnitude"},
    "active": {"state", "gain_db", "isolation_db"},
    "nonlinear": {"t_max", "c_fwd", "c_rev", "gamma", "p_ref_w"},
}


def fixture_dir() -> Path:
    env = os.environ.get(FIXTURE_ENV)
    return Path(env) if env else Path(__file__).parent / "fixtures"


def resolve_scenario_path(ref) -> Path:
    path = Path(ref)
    if path.is_file():
        return path
    candidate = fixture_dir() / f"{ref}.ini"
    if candidate.is_file():
        return candidate
    raise ScenarioParseError(f"no scenario file or fixture named '{ref}'")


class _Reader:
    def __init__(self, path, text):
        self.path = path
        self.lines = text.splitlines()
        self.cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            self.cp.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ScenarioParseError(str(exc).splitlines()[0], path,
                                     getattr(exc, "lineno", None)) from None

    def line_of(self, section, key=None):
        in_sec = False
        for i, ln in enumerate(self.lines, 1):
            s = ln.strip()
            if s.startswith("["):
                in_sec = s == f"[{section}]"
                if in_sec and key is None:
                    return i
            elif in_sec and key is not None and s.split("=")[0].strip() == key:
                return i
        return None

    def error(self, msg, section, key=None):
        field_ = f"{section}.{key}" if key else section
        return ScenarioParseError(msg, self.path, self.line_of(section, key), field_)

    def has(self, section, key):
        return self.cp.has_option(section, key)

    def get(self, section, key, conv=str, default=None):
        if not self.cp.has_section(section):
            if default is not None:
                return default
            raise ScenarioParseError(f"missing section [{section}]", self.path)
        if not self.cp.has_option(section, key):
            if default is not None:
                return default
            raise self.error("missing required key", section, key)
        raw = self.cp.get(section, key).strip()
        try:
            return conv(raw)
        except (ValueError, ConfigurationError) as exc:
            raise self.error(f"bad value {raw!r} ({exc})", section, key) from None


def _bool(raw):
    low = raw.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError("expected true/false")


def _angle(raw):
    v = float(raw)
    if not abs(v) < 90:
        raise ValueError("angle must lie in (-90, 90) deg")
    return v


def _positive(raw):
    v = float(raw)
    if not v > 0:
        raise ValueError("must be > 0")
    return v


def _control(raw):
    v = float(raw)
    return int(v) if v.is_integer() else v


def load_scenario(ref) -> Scenario:
    """Load a scenario file, or a shipped fixture by id (e.g. ``ris1-a``)."""
    path = resolve_scenario_path(ref)
    r = _Reader(path, path.read_text())
    model_kind = r.get("panel", "model") if r.cp.has_section("panel") else None
    allowed = dict(_KEYS)
    if model_kind is not None:
        if model_kind not in _MODEL_KEYS:
            raise r.error(f"unknown model '{model_kind}'", "panel", "model")
        allowed["model"] = _MODEL_KEYS[model_kind]
    for sec in r.cp.sections():
        if sec not in allowed:
            raise r.error("unknown section", sec)
        for key in r.cp[sec]:
            if key not in allowed[sec]:
                raise r.error("unknown key", sec, key)
    for sec in ("scenario", "geometry", "panel", "pattern", "direct_link"):
        if not r.cp.has_section(sec):
            raise ScenarioParseError(f"missing section [{sec}]", path)

    sid = r.get("scenario", "id")
    f = r.get("geometry", "f_hz", _positive)
    try:
        geometry = LinkGeometry(
            r.get("geometry", "d1_m", _positive), r.get("geometry", "theta1_deg", _angle),
            r.get("geometry", "d2_m", _positive), r.get("geometry", "theta2_deg", _angle),
            f, r.get("geometry", "pt_dbm", float, 0.0))
    except ConfigurationError as exc:
        raise ScenarioParseError(str(exc), path, r.line_of("geometry")) from None

    model, model_file = _read_model(r, model_kind, path)
    q = r.get("panel", "angle_q", float, 0.0)
    if q:
        model = AngleDependent(model, q)
    half = SPEED_OF_LIGHT / f / 2
    panel_spec = PanelSpec(r.get("panel", "rows", int), r.get("panel", "cols", int),
                           r.get("panel", "dx_m", _positive, half),
                           r.get("panel", "dy_m", _positive, half),
                           r.get("panel", "group_cols", int))
    try:
        build_panel(panel_spec.rows, panel_spec.cols, panel_spec.dx, panel_spec.dy,
                    panel_spec.group_cols, model)
    except ConfigurationError as exc:
        raise r.error(str(exc), "panel") from None

    patterns = []
    for raw in r.get("pattern", "kinds").split(","):
        raw = raw.strip()
        try:
            kind = PatternKind(raw)
        except ValueError:
            raise r.error(f"unknown pattern kind '{raw}'", "pattern", "kinds") from None
        values = None
        if kind is PatternKind.CUSTOM:
            values = tuple(_control(v) for v in r.get("pattern", "custom_values").split(","))
        patterns.append(PatternSpec(
            kind, r.get("pattern", "identical_value", _control, model.control_range[0]),
            r.get("pattern", "gradient_step_deg", float, 90.0), values))

    dkind = r.get("direct_link", "kind")
    try:
        dkind = DirectLinkKind(dkind)
    except ValueError:
        raise r.error(f"unknown direct-link kind '{dkind}'", "direct_link", "kind") from None
    value = 0j
    if dkind is DirectLinkKind.FIXED:
        value = complex(r.get("direct_link", "value_re", float),
                        r.get("direct_link", "value_im", float))
    scenario = Scenario(sid, geometry, panel_spec, model, tuple(patterns),
                        DirectLink(dkind, value), r.get("scenario", "label", str, sid),
                        r.get("scenario", "no_phase", _bool, False), model_file)
    for spec in scenario.patterns:
        try:
            spec.build(scenario.panel)
        except RisError as exc:
            raise r.error(str(exc), "pattern") from None
    return scenario


def _read_model(r, kind, path):
    g = lambda key, conv=float, default=None: r.get("model", key, conv, default)  # noqa: E731
    try:
        if kind == "ideal_varactor":
            return IdealVaractor(g("v_min", float, 0.0), g("v_max", float, 21.0),
                                 g("phase_span_deg", float, 360.0), g("magnitude", float, 1.0)), None
        if kind == "ideal_pin":
            return IdealPin(g("phase0_deg", float, 0.0), g("phase1_deg", float, 180.0),
                            g("magnitude", float, 1.0)), None
        if kind == "table":
            ref = g("file", str)
            return load_varactor_table(path.parent / ref), ref
        if kind == "active":
            return ActiveCellModel(g("state", str, "forward"), g("gain_db", float, 13.0),
                                   g("isolation_db", float, 60.0)), None
        return NonlinearCellModel(g("t_max", float, 0.9), g("c_fwd", float, 0.01),
                                  g("c_rev", float, 100.0), g("gamma", float, 2.0),
                                  g("p_ref_w", float, 1e-3)), None
    except ConfigurationError as exc:
        raise r.error(str(exc), "model") from None


def _model_section(model, model_file):
    if isinstance(model, IdealVaractor):
        return "ideal_varactor", {"v_min": model.v_min, "v_max": model.v_max,
                                  "phase_span_deg": model.phase_span,
                                  "magnitude": model.magnitude}
    if isinstance(model, IdealPin):
        return "ideal_pin", {"phase0_deg": model.phase_state_0,
                             "phase1_deg": model.phase_state_1, "magnitude": model.magnitude}
    if isinstance(model, TableVaractor):
        if model_file is None:
            raise ConfigurationError("table model has no source file to reference")
        return "table", {"file": model_file}
    if isinstance(model, ActiveCellModel):
        return "active", {"state": model.state.value, "gain_db": model.gain_db,
                          "isolation_db": model.isolation_db}
    if isinstance(model, NonlinearCellModel):
        return "nonlinear", {"t_max": model.t_max, "c_fwd": model.c_fwd,
                             "c_rev": model.c_rev, "gamma": model.gamma,
                             "p_ref_w": model.p_ref}
    raise ConfigurationError(f"cannot serialise model {type(model).__name__}")


def scenario_text(s: Scenario) -> str:
    model, q = s.model, 0.0
    if isinstance(model, AngleDependent):
        model, q = model.base, model.q
    kind, params = _model_section(model, s.model_file)
    g, p = s.geometry, s.panel_spec
    out = io.StringIO()
    w = out.write
    w(f"[scenario]\nid = {s.id}\nlabel = {s.label}\nno_phase = {str(s.no_phase).lower()}\n\n")
    w(f"[geometry]\nd1_m = {g.d1!r}\ntheta1_deg = {g.theta1!r}\nd2_m = {g.d2!r}\n"
      f"theta2_deg = {g.theta2!r}\nf_hz = {g.f!r}\npt_dbm = {g.pt_dbm!r}\n\n")
    w(f"[panel]\nrows = {p.rows}\ncols = {p.cols}\ndx_m = {p.dx!r}\ndy_m = {p.dy!r}\n"
      f"group_cols = {p.group_cols}\nmodel = {kind}\n")
    if q:
        w(f"angle_q = {q!r}\n")
    w("\n[model]\n")
    for k, v in params.items():
        w(f"{k} = {v if isinstance(v, str) else repr(v)}\n")
    # all specs of one scenario share the scalar parameters
    first = s.patterns[0]
    w(f"\n[pattern]\nkinds = {', '.join(ps.kind.value for ps in s.patterns)}\n"
      f"identical_value = {first.value!r}\ngradient_step_deg = {first.step_deg!r}\n")
    custom = [ps for ps in s.patterns if ps.values is not None]
    if custom:
        w(f"custom_values = {', '.join(repr(v) for v in custom[0].values)}\n")
    w(f"\n[direct_link]\nkind = {s.direct.kind.value}\n")
    if s.direct.kind is DirectLinkKind.FIXED:
        w(f"value_re = {s.direct.value.real!r}\nvalue_im = {s.direct.value.imag!r}\n")
    return out.getvalue()


def atomic_write_text(path, text):
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_scenario(scenario: Scenario, path):
    atomic_write_text(path, scenario_text(scenario))


# -- trajectories ------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryPoint:
    voltage: float
    h_up: complex
    h_down: complex


def voltage_sweep(scene: Scene, v_steps=211):
    """Apply one common voltage to every group, stepping linearly over the range."""
    model = scene.panel.cell_model
    if not getattr(model, "continuous", False):
        raise ConfigurationError("voltage sweep needs a continuous (varactor) cell model")
    if v_steps < 2:
        raise ConfigurationError("v_steps must be >= 2")
    lo, hi = model.control_range
    points = []
    for v in np.linspace(lo, hi, v_steps):
        pattern = CodingPattern(PatternKind.IDENTICAL, (float(v),) * scene.panel.n_groups)
        s = scene.with_pattern(pattern, f"sweep@{v:g}V")
        points.append(TrajectoryPoint(float(v), evaluate_link(s, Direction.UPLINK).h_total,
                                      evaluate_link(s, Direction.DOWNLINK).h_total))
    return points


@dataclass(frozen=True)
class CircleFit:
    center: complex
    radius: float
    rms_residual: float


def circle_fit(points) -> CircleFit:
    """Algebraic (Kasa) least-squares circle through complex points."""
    z = np.asarray(points, dtype=complex)
    if z.size < 3:
        raise FitError("circle fit needs at least 3 points")
    origin = z.mean()
    scale = np.abs(z - origin).max()
    if scale == 0:
        raise FitError("all points coincide")
    u = (z - origin) / scale
    a = np.column_stack([2 * u.real, 2 * u.imag, np.ones(u.size)])
    b = np.abs(u) ** 2
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise FitError("points are collinear or degenerate")
    (cx, cy, c), *_ = np.linalg.lstsq(a, b, rcond=None)
    r = math.sqrt(c + cx * cx + cy * cy)
    center = origin + scale * complex(cx, cy)
    radius = scale * r
    resid = np.abs(z - center) - radius
    return CircleFit(complex(center), float(radius), float(np.sqrt(np.mean(resid ** 2))))


def trajectory_rows(points):
    if not points:
        raise ConfigurationError("empty trajectory")
    return [(p.voltage, p.h_up.real, p.h_up.imag, p.h_down.real, p.h_down.imag)
            for p in points]


def trajectory_csv(points) -> str:
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(TRAJECTORY_FIELDS)
    for row in trajectory_rows(points):
        wr.writerow([repr(float(v)) for v in row])
    return out.getvalue()


def trajectory_json(points) -> str:
    recs = [dict(zip(TRAJECTORY_FIELDS, map(float, row))) for row in trajectory_rows(points)]
    return json.dumps(recs, indent=2) + "\n"


def save_trajectory(points, path):
    path = Path(path)
    text = trajectory_json(points) if path.suffix == ".json" else trajectory_csv(points)
    atomic_write_text(path, text)


# -- measurement reports ----------------------------------------------------------------

@dataclass(frozen=True)
class ReportRow:
    scenario: str
    pattern: str
    p_up_dbm: float
    p_down_dbm: float
    phase_up_deg: float | None
    phase_down_deg: float | None


def pattern_table(scenarios, patterns=None):
    """One row per (scenario, pattern); ``patterns`` maps scenario id to kinds."""
    rows = []
    for sc in scenarios:
        kinds = (patterns or {}).get(sc.id) or [ps.kind for ps in sc.patterns]
        for kind in kinds:
            scene = sc.scene(kind)
            up = evaluate_link(scene, Direction.UPLINK).h_total
            down = evaluate_link(scene, Direction.DOWNLINK).h_total
            pt = sc.geometry.pt_dbm
            rows.append(ReportRow(
                sc.id, PatternKind(kind).value, received_power(pt, up), received_power(pt, down),
                None if sc.no_phase else phase_deg(up),
                None if sc.no_phase else phase_deg(down)))
    return rows


def _fmt(v):
    return "NA" if v is None else repr(float(v))


def report_csv(rows) -> str:
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(REPORT_FIELDS)
    for r in rows:
        wr.writerow([r.scenario, r.pattern, _fmt(r.p_up_dbm), _fmt(r.p_down_dbm),
                     _fmt(r.phase_up_deg), _fmt(r.phase_down_deg)])
    return out.getvalue()


def report_json(rows) -> str:
    def num(v):
        if v is None:
            return "NA"
        return v if math.isfinite(v) else "below floor"
    recs = [{"scenario": r.scenario, "pattern": r.pattern, "p_up_dbm": num(r.p_up_dbm),
             "p_down_dbm": num(r.p_down_dbm), "phase_up_deg": num(r.phase_up_deg),
             "phase_down_deg": num(r.phase_down_deg)} for r in rows]
    return json.dumps(recs, indent=2) + "\n"


def save_report(rows, path):
    """Write ``rows`` as CSV, or JSON when the path ends in ``.json``."""
    path = Path(path)
    atomic_write_text(path, report_json(rows) if path.suffix == ".json" else report_csv(rows))


def render_table(rows, scenarios) -> str:
    """Plain-text table in the measurement-report column layout."""
    by_id = {s.id: s for s in scenarios}
    head = ("RIS sample", "Measurement setup", "RIS coding pattern",
            "Received signal power (Uplink/Downlink, dBm)",
            "Received signal phase (Uplink/Downlink, degree)")
    body = []
    for r in rows:
        sc = by_id[r.scenario]
        pw = f"{r.p_up_dbm:.1f} / {r.p_down_dbm:.1f}"
        ph = ("NA" if r.phase_up_deg is None
              else f"{r.phase_up_deg:.0f} / {r.phase_down_deg:.0f}")
        body.append((sc.label, sc.setup_text(), r.pattern.capitalize(), pw, ph))
    widths = [max(len(x[i]) for x in [head, *body]) for i in range(5)]
    sep = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    line = lambda cells: "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"  # noqa: E731
    return "\n".join([sep, line(head), sep, *(line(b) for b in body), sep]) + "\n"


# -- pattern optimisation ----------------------------------------------------------

@dataclass(frozen=True)
class OptimizationResult:
    pattern: CodingPattern
    gain_db: float
    gain_db_up: float
    gain_db_down: float
    h_up: complex
    h_down: complex


def _group_contributions(scene, values, direction=Direction.DOWNLINK):
    """Cascaded contribution of each group when it takes each of ``values``."""
    panel, geom = scene.panel, scene.geometry
    _, _, th_tx, th_rx = geom.endpoints(direction)
    groups = panel.element_groups
    out = np.empty((panel.n_groups, len(values)), dtype=complex)
    for j, v in enumerate(values):
        pattern = CodingPattern(PatternKind.CUSTOM, (v,) * panel.n_groups)
        gamma = apply_pattern(panel, pattern, th_tx, th_rx, direction)
        for g in range(panel.n_groups):
            out[g, j] = cascaded_channel(panel, np.where(groups == g, gamma, 0), geom, direction)
    return out


def _gain_db(h, ref):
    if abs(ref) == 0:
        return math.inf if abs(h) > 0 else 0.0
    if abs(h) == 0:
        return -math.inf
    return 20 * math.log10(abs(h) / abs(ref))


def optimize_pattern(scene: Scene, mode: str) -> OptimizationResult:
    """Search group settings; modes: continuous_align, exhaustive_bits, greedy_bits."""
    model = scene.panel.cell_model
    panel = scene.panel
    h_d = evaluate_link(scene, Direction.DOWNLINK).h_d
    if mode == "continuous_align":
        if not getattr(model, "continuous", False):
            raise ConfigurationError("continuous_align needs a continuous cell model")
        values = _align_groups(scene, h_d)
    elif mode in ("exhaustive_bits", "greedy_bits"):
        if not getattr(model, "binary", False):
            raise ConfigurationError(f"{mode} needs a binary cell model")
        contrib = _group_contributions(scene, (0, 1))
        if mode == "exhaustive_bits":
            if panel.n_groups > 20:
                raise ConfigurationError("exhaustive search limited to 20 groups")
            values = _exhaustive(contrib, h_d)
        else:
            values = _greedy(contrib, h_d)
    else:
        raise ConfigurationError(f"unknown optimisation mode '{mode}'")
    pattern = CodingPattern(PatternKind.CUSTOM, tuple(values))
    lo = model.control_range[0]
    ident = CodingPattern(PatternKind.IDENTICAL, (lo,) * panel.n_groups)
    opt_scene = scene.with_pattern(pattern, f"optimized-{mode}")
    ref_scene = scene.with_pattern(ident)
    h_up = evaluate_link(opt_scene, Direction.UPLINK).h_total
    h_down = evaluate_link(opt_scene, Direction.DOWNLINK).h_total
    g_up = _gain_db(h_up, evaluate_link(ref_scene, Direction.UPLINK).h_total)
    g_down = _gain_db(h_down, evaluate_link(ref_scene, Direction.DOWNLINK).h_total)
    return OptimizationResult(pattern, g_down, g_up, g_down, h_up, h_down)


def _align_groups(scene, h_d):
    model = scene.panel.cell_model
    target = math.atan2(h_d.imag, h_d.real) if h_d != 0 else 0.0
    unit = _group_contributions(scene, (model.control_range[0],))[:, 0]
    ref_phase = model.phase(model.control_range[0])
    lo, hi = model.control_range
    grid = np.linspace(lo, hi, 2101)
    values = []
    for s in unit:
        want = math.degrees(target - math.atan2(s.imag, s.real)) + ref_phase
        try:
            values.append(float(model.control_for_phase(want % 360.0)))
        except UnreachablePhaseError:
            # limited span: best projection onto the target direction
            contrib = _group_contributions_single(scene, s, grid)
            values.append(float(grid[int(np.argmax((contrib * np.exp(-1j * target)).real))]))
    return values


def _group_contributions_single(scene, unit, grid):
    model = scene.panel.cell_model
    g0 = model.response(grid[0])
    return np.array([unit * model.response(v) / g0 for v in grid])


def _exhaustive(contrib, h_d):
    n = contrib.shape[0]
    bits = ((np.arange(2 ** n)[:, None] >> np.arange(n)[None, ::-1]) & 1).astype(np.int8)
    total = h_d + np.where(bits == 1, contrib[:, 1], contrib[:, 0]).sum(axis=1)
    best = int(np.argmax(np.abs(total)))
    return [int(b) for b in bits[best]]


def _greedy(contrib, h_d):
    n = contrib.shape[0]
    bits = [0] * n

    def value(b):
        return abs(h_d + sum(contrib[g, b[g]] for g in range(n)))

    current = value(bits)
    changed = True
    while changed:
        changed = False
        for g in range(n):
            trial = bits.copy()
            trial[g] ^= 1
            v = value(trial)
            if v > current:
                bits, current, changed = trial, v, True
    return bits


def all_fixtures():
    return [load_scenario(i) for i in FIXTURE_IDS]
