import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risrecip.channel import (SPEED_OF_LIGHT, ChannelSample, DirectLink, Direction,
                              LinkGeometry, Scene, antenna_position, cascaded_channel,
                              direct_channel, evaluate_link, format_power,
                              propagation_factor, received_power, reciprocity_report)
from risrecip.errors import ConfigurationError, SingularityError
from risrecip.models import (AngleDependent, CodingPattern, IdealPin, IdealVaractor,
                             PatternKind, TableVaractor, apply_pattern, build_panel,
                             make_pattern)
from risrecip.nonreciprocal import ActiveCellModel, ActiveState

VARACTOR = IdealVaractor()
RIS1A_GEOMETRY = LinkGeometry(1.5, 30.0, 0.5, 0.0, 4.25e9, 0.0)


def friis(r, lam):
    return lam / (4 * math.pi * r) * cmath.exp(-2j * math.pi * r / lam)


def dist(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def test_antenna_position():
    assert np.array_equal(antenna_position(0.5, 0.0), [0.0, 0.0, 0.5])
    # hand trigonometry: sin 30 = 1/2, cos 30 = sqrt(3)/2
    assert antenna_position(1.5, 30.0) == pytest.approx([0.75, 0.0, 1.5 * math.sqrt(3) / 2],
                                                        abs=1e-15)
    assert antenna_position(1.5, 30.0)[2] == pytest.approx(1.29904, abs=5e-6)
    grazing = antenna_position(1.0, 90.0 - 1e-9)
    assert 0 < grazing[2] < 1e-10
    with pytest.raises(ConfigurationError):
        antenna_position(0.0, 0.0)


def test_geometry_validation():
    with pytest.raises(ConfigurationError):
        LinkGeometry(0.0, 0.0, 1.0, 0.0, 1e9)
    with pytest.raises(ConfigurationError):
        LinkGeometry(1.0, 90.0, 1.0, 0.0, 1e9)
    with pytest.raises(ConfigurationError):
        LinkGeometry(1.0, 0.0, 1.0, 0.0, 0.0)


def test_direction_endpoints():
    up = RIS1A_GEOMETRY.endpoints(Direction.UPLINK)
    down = RIS1A_GEOMETRY.endpoints(Direction.DOWNLINK)
    assert np.array_equal(up[0], RIS1A_GEOMETRY.antenna2) and np.array_equal(up[1], RIS1A_GEOMETRY.antenna1)
    assert np.array_equal(down[0], RIS1A_GEOMETRY.antenna1) and down[2:] == (30.0, 0.0)


def test_propagation_factor_examples():
    lam = 0.07055
    g = propagation_factor((0, 0, 0), (0, 0, lam / (4 * math.pi)), lam)
    assert abs(g) == pytest.approx(1.0, rel=1e-15)
    g1 = propagation_factor((0, 0, 0), (0, 0, 1.0), lam)
    g2 = propagation_factor((0, 0, 0), (0, 0, 2.0), lam)
    assert abs(g2) == pytest.approx(abs(g1) / 2, rel=1e-15)
    # 0.07055 / (4 pi 1.5) evaluated with decimal arithmetic: 0.0037427937450...
    g = propagation_factor((0, 0, 0), (1.5, 0, 0), lam)
    assert abs(g) == pytest.approx(0.0037427937450444, rel=1e-12)
    assert cmath.phase(g) == pytest.approx(cmath.phase(cmath.exp(-2j * math.pi * 1.5 / lam)),
                                           abs=1e-9)
    with pytest.raises(SingularityError):
        propagation_factor((1, 2, 3), (1, 2, 3), lam)


def test_cascaded_null_surface():
    p = build_panel(4, 4, 0.035, 0.035, 1, VARACTOR)
    assert cascaded_channel(p, np.zeros(16), RIS1A_GEOMETRY, Direction.UPLINK) == 0


def test_cascaded_single_element_boresight():
    p = build_panel(1, 1, 0.01, 0.01, 1, VARACTOR)
    geo = LinkGeometry(1.2, 0.0, 0.7, 0.0, 5e9)
    lam = geo.wavelength
    h = cascaded_channel(p, [1.0], geo, Direction.DOWNLINK)
    assert h == pytest.approx(friis(1.2, lam) * friis(0.7, lam), rel=1e-14)
    expected_phase = math.remainder(-2 * math.pi * 1.9 / lam, 2 * math.pi)
    assert cmath.phase(h) == pytest.approx(expected_phase, abs=1e-9)


def test_cascaded_two_by_two_hand_sum():
    lam = SPEED_OF_LIGHT / 4.25e9
    d = lam / 2
    p = build_panel(2, 2, d, d, 1, VARACTOR)
    pattern = make_pattern("gradient", p, step_deg=90.0)
    gamma = apply_pattern(p, pattern)
    # explicit element coordinates, row-major, and plain-python Friis terms
    a1 = (1.5 * math.sin(math.radians(30)), 0.0, 1.5 * math.cos(math.radians(30)))
    a2 = (0.0, 0.0, 0.5)
    cells = [(-d / 2, -d / 2, 0.0), (d / 2, -d / 2, 0.0), (-d / 2, d / 2, 0.0), (d / 2, d / 2, 0.0)]
    coeffs = [1, 1j, 1, 1j]
    oracle = sum(c * friis(dist(a1, e), lam) * friis(dist(e, a2), lam)
                 for c, e in zip(coeffs, cells))
    for direction in Direction:
        h = cascaded_channel(p, gamma, RIS1A_GEOMETRY, direction)
        assert abs(h - oracle) <= 1e-12 * abs(oracle)


def test_cascaded_errors():
    p = build_panel(2, 2, 0.01, 0.01, 1, VARACTOR)
    with pytest.raises(ConfigurationError):
        cascaded_channel(p, np.ones(3), RIS1A_GEOMETRY, Direction.UPLINK)


def test_direct_channel():
    assert direct_channel(RIS1A_GEOMETRY, DirectLink.none()) == 0j
    assert direct_channel(RIS1A_GEOMETRY, DirectLink.fixed(0.3 + 0.1j)) == 0.3 + 0.1j
    r12 = dist((0.75, 0.0, 1.5 * math.sqrt(3) / 2), (0.0, 0.0, 0.5))
    h = direct_channel(RIS1A_GEOMETRY, DirectLink.free_space())
    assert abs(h) == pytest.approx(RIS1A_GEOMETRY.wavelength / (4 * math.pi * r12), rel=1e-13)
    with pytest.raises(ConfigurationError):
        DirectLink.fixed(complex(math.inf, 0))


def _ris1a_scene(direct=DirectLink.none(), kind="identical"):
    lam = RIS1A_GEOMETRY.wavelength
    p = build_panel(8, 8, lam / 2, lam / 2, 2, VARACTOR)
    return Scene(p, make_pattern(kind, p), RIS1A_GEOMETRY, direct)


def test_evaluate_link_composition_and_oracle():
    scene = _ris1a_scene(DirectLink.fixed(0.3), "gradient")
    s = evaluate_link(scene, Direction.DOWNLINK)
    assert isinstance(s, ChannelSample)
    assert s.h_total == s.h_d + s.h_ris and s.h_d == 0.3
    assert s.direction is Direction.DOWNLINK and s.pattern_id == "gradient"
    lam = RIS1A_GEOMETRY.wavelength
    gamma = apply_pattern(scene.panel, scene.pattern)
    a1, a2 = tuple(RIS1A_GEOMETRY.antenna1), tuple(RIS1A_GEOMETRY.antenna2)
    oracle = sum(complex(gm) * friis(dist(a1, tuple(e)), lam) * friis(dist(tuple(e), a2), lam)
                 for gm, e in zip(gamma, scene.panel.element_positions))
    assert math.isfinite(abs(s.h_total))
    assert abs(s.h_ris - oracle) <= 1e-12 * abs(oracle)


def test_evaluate_link_identical_both_directions():
    scene = _ris1a_scene(DirectLink.free_space())
    assert evaluate_link(scene, Direction.UPLINK).h_total == \
        evaluate_link(scene, Direction.DOWNLINK).h_total


def test_received_power_examples():
    assert received_power(0.0, 1.0) == 0.0
    assert received_power(0.0, 0.1) == pytest.approx(-20.0, abs=1e-12)
    # 10 + 20 log10(0.00374) = -38.5426...
    assert received_power(10.0, 0.00374) == pytest.approx(-38.5426, abs=1e-4)
    assert received_power(0.0, 0.0) == -math.inf
    assert format_power(-math.inf) == "below floor"
    assert format_power(-42.64) == "-42.6"


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-12, 1e3), st.floats(-1e3, 1e3), st.floats(-60, 60))
def test_received_power_shift(mag, ph, pt):
    h = mag * cmath.exp(1j * ph)
    assert received_power(pt, h) - received_power(0.0, h) == pytest.approx(pt, abs=1e-9)


def test_reciprocity_report_passive_exact():
    rep = reciprocity_report(_ris1a_scene(DirectLink.fixed(1e-4 + 2e-4j), "gradient"))
    assert rep.magnitude_dev_db == 0.0 and rep.phase_dev_deg == 0.0
    assert rep.verdict == "Reciprocal"
    up, down = rep.render().split("phase")[0].split(":")[1].split("/")
    assert up.strip() == down.replace("dBm,", "").strip()


def test_reciprocity_report_forward_only_active():
    lam = RIS1A_GEOMETRY.wavelength
    p = build_panel(4, 4, lam / 2, lam / 2, 1, ActiveCellModel(ActiveState.FORWARD_ONLY, 13, 60))
    scene = Scene(p, CodingPattern(PatternKind.CUSTOM, (0.0,) * 4), RIS1A_GEOMETRY)
    rep = reciprocity_report(scene)
    # 13 dB passing gain against -60 dB isolation
    assert rep.magnitude_dev_db == pytest.approx(73.0, abs=1e-9)
    assert rep.verdict == "Nonreciprocal"


def random_passive_scene(rng):
    f = rng.choice([4.25e9, 27e9])
    lam = SPEED_OF_LIGHT / f
    geo = LinkGeometry(rng.uniform(0.3, 2.0), rng.uniform(-60, 60), rng.uniform(0.3, 2.0),
                       rng.uniform(-60, 60), f, rng.uniform(-10, 10))
    kind = rng.integers(3)
    if kind == 0:
        model = VARACTOR
    elif kind == 1:
        model = TableVaractor((0.0, 7.0, 14.0, 21.0), tuple(rng.uniform(0.3, 1, 4)),
                              (0.0, -80.0, -170.0, -250.0))
    else:
        model = IdealPin()
    if rng.random() < 0.5:
        model = AngleDependent(model, rng.uniform(0, 3))
    rows, gcols = int(rng.integers(1, 7)), int(rng.integers(1, 4))
    cols = gcols * int(rng.integers(1, 5))
    panel = build_panel(rows, cols, lam / 2, lam / 2, gcols, model)
    lo, hi = model.control_range
    if getattr(model, "binary", False):
        vals = tuple(int(b) for b in rng.integers(0, 2, panel.n_groups))
    else:
        vals = tuple(rng.uniform(lo, hi, panel.n_groups))
    direct = [DirectLink.none(), DirectLink.free_space(),
              DirectLink.fixed(complex(*rng.normal(0, 1e-3, 2)))][int(rng.integers(3))]
    return Scene(panel, CodingPattern(PatternKind.CUSTOM, vals), geo, direct)


def test_random_scene_reciprocity():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        scene = random_passive_scene(rng)
        up = evaluate_link(scene, Direction.UPLINK)
        down = evaluate_link(scene, Direction.DOWNLINK)
        assert abs(up.h_total - down.h_total) <= 1e-12 * abs(up.h_total)
        assert up.h_total - (up.h_d + up.h_ris) == 0


@settings(max_examples=100, deadline=None)
@given(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
       st.integers(0, 2 ** 32 - 1))
def test_linearity(alpha, seed):
    rng = np.random.default_rng(seed)
    scene = random_passive_scene(rng)
    gamma = apply_pattern(scene.panel, scene.pattern)
    h = cascaded_channel(scene.panel, gamma, scene.geometry, Direction.UPLINK)
    h2 = cascaded_channel(scene.panel, alpha * gamma, scene.geometry, Direction.UPLINK)
    assert abs(h2 - alpha * h) <= 1e-12 * max(abs(alpha * h), 1e-300)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_superposition(seed):
    rng = np.random.default_rng(seed)
    scene = random_passive_scene(rng)
    gamma = apply_pattern(scene.panel, scene.pattern)
    mask = rng.random(gamma.size) < 0.5
    geo = scene.geometry
    full = cascaded_channel(scene.panel, gamma, geo, Direction.DOWNLINK)
    parts = (cascaded_channel(scene.panel, np.where(mask, gamma, 0), geo, Direction.DOWNLINK)
             + cascaded_channel(scene.panel, np.where(mask, 0, gamma), geo, Direction.DOWNLINK))
    scale = np.abs(gamma).sum() * (geo.wavelength / (4 * math.pi)) ** 2 / (geo.d1 * geo.d2)
    assert abs(full - parts) <= 1e-12 * max(abs(full), scale)


def test_antenna_on_element_is_singular():
    p = build_panel(1, 1, 0.01, 0.01, 1, VARACTOR)
    geo = LinkGeometry(1.0, 0.0, 1.0, 0.0, 1e9)
    object.__setattr__(p, "element_positions", np.array([[0.0, 0.0, 1.0]]))
    with pytest.raises(SingularityError):
        cascaded_channel(p, [1.0], geo, Direction.UPLINK)
