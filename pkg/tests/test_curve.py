import numpy as np
import pytest
from scipy import integrate

from curve import (Curve, DegenerateCurveError, apriori_bounds, area, c1h_norm, deformation_ratio, digest,
                   dissipation, energy, holder_seminorm, read_csv, star_norm, validate, write_csv)
from initial_conditions import make_initial
from spectral import get_plan


def demo_exact(theta):
    r = 1 + np.cos(7 * theta) / 4
    dr = -7 * np.sin(7 * theta) / 4
    x = r * np.cos(theta) + np.cos(2 * theta) / 8
    y = r * np.sin(theta) + np.sin(2 * theta) / 8
    dx = dr * np.cos(theta) - r * np.sin(theta) - np.sin(2 * theta) / 4
    dy = dr * np.sin(theta) + r * np.cos(theta) + np.cos(2 * theta) / 4
    return x, y, dx, dy


def quad(f):
    value, _ = integrate.quad(f, 0.0, 2 * np.pi, limit=400, epsabs=1e-12, epsrel=1e-12)
    return value


def test_curve_validation():
    with pytest.raises(ValueError):
        Curve(np.zeros((16, 3)))
    with pytest.raises(ValueError):
        Curve(np.full((16, 2), np.nan))
    with pytest.raises(ValueError):
        Curve(np.zeros((15, 2)))
    c = Curve.from_xy(np.arange(16.0), np.zeros(16))
    assert c.n == 16
    with pytest.raises(ValueError):
        c.xy[0, 0] = 1.0


def test_star_norm_circle(unit_circle):
    assert star_norm(unit_circle) == pytest.approx(2 / np.pi, abs=2e-4)
    assert star_norm(unit_circle.scaled(3.0)) == pytest.approx(3 * 2 / np.pi, abs=6e-4)


def test_star_norm_coincident_nodes(unit_circle):
    xy = unit_circle.xy.copy()
    xy[5] = xy[3]
    assert star_norm(Curve(xy)) == 0.0
    with pytest.raises(DegenerateCurveError):
        validate(Curve(xy))


def test_area_energy_circles(unit_circle):
    assert area(unit_circle) == pytest.approx(np.pi, abs=1e-12)
    assert energy(unit_circle) == pytest.approx(np.pi, abs=1e-12)
    big = make_initial('circle', {'A': 2.0}, 128)
    assert area(big) == pytest.approx(4 * np.pi, abs=1e-12)
    assert energy(big) == pytest.approx(4 * np.pi, abs=1e-11)


def test_area_demo_matches_quadrature(demo):
    def integrand(theta):
        x, y, dx, dy = demo_exact(theta)
        return 0.5 * (x * dy - y * dx)
    assert area(demo) == pytest.approx(quad(integrand), abs=1e-9)


def test_energy_unlabeled_matches_quadrature():
    c = make_initial('unlabeled', {}, 128)

    def integrand(theta):
        dx = -np.sin(theta) - 0.4 * np.sin(2 * theta) - 0.2 * np.cos(2 * theta)
        dy = np.cos(theta) + 0.4 * np.cos(2 * theta) - 0.2 * np.sin(2 * theta)
        return 0.5 * (dx ** 2 + dy ** 2)
    assert energy(c) == pytest.approx(quad(integrand), abs=1e-9)
    assert energy(c) == pytest.approx(1.2 * np.pi, abs=1e-12)


def test_scaling_and_translation(demo):
    a = 1.7
    assert area(demo.scaled(a)) == pytest.approx(a ** 2 * area(demo), rel=1e-12)
    assert energy(demo.scaled(a)) == pytest.approx(a ** 2 * energy(demo), rel=1e-12)
    assert star_norm(demo.scaled(a)) == pytest.approx(a * star_norm(demo), rel=1e-12)
    assert star_norm(demo.translated((0.4, -1.1))) == pytest.approx(star_norm(demo), rel=1e-12)


def test_rotation_invariance(demo):
    rotated = demo.rotated(0.3)
    assert area(rotated) == pytest.approx(area(demo), rel=1e-12)
    assert energy(rotated) == pytest.approx(energy(demo), rel=1e-12)
    assert star_norm(rotated) == pytest.approx(star_norm(demo), rel=1e-12)


def test_grid_refinement_agreement():
    coarse = make_initial('demo', {}, 64)
    fine = make_initial('demo', {}, 128)
    assert area(coarse) == pytest.approx(area(fine), abs=1e-10)
    assert energy(coarse) == pytest.approx(energy(fine), abs=1e-10)


def test_holder_seminorm():
    plan = get_plan(128)
    v = np.sin(plan.theta)
    with pytest.raises(ValueError):
        holder_seminorm(v, 1.0)
    with pytest.raises(ValueError):
        holder_seminorm(v, 0.0)
    assert holder_seminorm(np.full(128, 2.0), 0.5) == 0.0
    assert holder_seminorm(2 * v, 0.5) == 2 * holder_seminorm(v, 0.5)
    # |sin a - sin b| <= |a - b| <= |a - b|^gamma when |a - b| < 1
    assert 0.0 < holder_seminorm(v, 0.5) <= 1.0


def test_c1h_norm(unit_circle):
    assert c1h_norm(np.tile([3.0, 4.0], (32, 1))) == pytest.approx(5.0)
    assert c1h_norm(unit_circle.xy) == pytest.approx(2.0, abs=1e-12)
    assert c1h_norm(np.zeros((32, 2))) == 0.0


def test_deformation_ratio(unit_circle, demo):
    assert deformation_ratio(unit_circle, 0.0) == pytest.approx(np.pi / 2, abs=1e-3)
    assert deformation_ratio(demo.scaled(2.5), 0.25) == pytest.approx(deformation_ratio(demo, 0.25), rel=1e-12)
    with pytest.raises(ValueError):
        deformation_ratio(demo, 1.5)
    xy = unit_circle.xy.copy()
    xy[1] = xy[0]
    with pytest.raises(DegenerateCurveError):
        deformation_ratio(Curve(xy))


def test_dissipation_matches_energy_decay(demo):
    from biop import rhs
    from integrator import step

    velocity = rhs(demo)
    d = dissipation(demo, velocity)
    assert d > 0.0
    dt = 1e-4
    rate = (energy(step(demo, dt)) - energy(demo)) / dt
    assert rate == pytest.approx(-d, rel=1e-2)


def test_apriori_bounds_hold_on_circle(unit_circle):
    bounds = apriori_bounds(unit_circle, energy(unit_circle), area(unit_circle))
    assert bounds['holds']
    assert bounds['star_norm_upper'] == pytest.approx(1.0)


def test_negative_area_warns(unit_circle, caplog):
    reversed_curve = Curve(unit_circle.xy[:, ::-1])
    assert area(reversed_curve) < 0
    validate(reversed_curve)
    assert "negative area" in caplog.text


def test_csv_round_trip(tmp_path, demo):
    path = tmp_path / 'demo.csv'
    write_csv(demo, path)
    text = path.read_bytes().decode()
    assert text.startswith('theta,x,y\n')
    assert '\r' not in text
    np.testing.assert_array_equal(read_csv(path).xy, demo.xy)
    assert digest(read_csv(path)) == digest(demo)


def holder_by_offset(v, gamma):
    """Hölder quotient scanned offset by offset, independent of the pairwise matrices."""
    n = v.shape[0]
    h = 2 * np.pi / n
    best = 0.0
    for s in range(1, n // 2 + 1):
        d = s * h
        if d >= 1.0:
            break
        gap = v - np.roll(v, -s, axis=0)
        size = np.abs(gap) if gap.ndim == 1 else np.hypot(gap[:, 0], gap[:, 1])
        best = max(best, float(np.max(size)) / d ** gamma)
    return best


def test_holder_seminorm_scalar_dense_oracle():
    v = np.sin(get_plan(128).theta)
    value = holder_seminorm(v, 0.5)
    assert value == pytest.approx(holder_by_offset(v, 0.5), rel=1e-12)
    dense = holder_by_offset(np.sin(get_plan(4096).theta), 0.5)
    # sup over 0 < s < 1 of 2 sin(s/2) / s^gamma is reached as s -> 1
    assert dense == pytest.approx(2 * np.sin(0.5), abs=1e-3)
    assert dense - 1e-2 <= value <= dense + 5e-3


def test_holder_seminorm_vector_input(unit_circle, demo):
    assert holder_seminorm(unit_circle.xy, 0.5) == pytest.approx(holder_by_offset(unit_circle.xy, 0.5), rel=1e-12)
    assert holder_seminorm(demo.xy, 0.3) == pytest.approx(holder_by_offset(demo.xy, 0.3), rel=1e-12)


def test_deformation_ratio_demo_pairwise(demo):
    n = demo.n
    h = 2 * np.pi / n
    _, _, dx, dy = demo_exact(demo.plan.theta)
    tangent = np.column_stack([dx, dy])
    chord_ratios = [np.min(np.hypot(*(demo.xy - np.roll(demo.xy, -s, axis=0)).T)) / (s * h)
                    for s in range(1, n // 2 + 1)]
    numerator = np.max(np.hypot(dx, dy)) + holder_by_offset(tangent, 0.25)
    assert deformation_ratio(demo, 0.25) == pytest.approx(numerator / min(chord_ratios), rel=1e-10)


def test_csv_read_keeps_full_precision(tmp_path):
    c = make_initial('random_fourier', {'seed': 7}, 64)
    path = tmp_path / 'random.csv'
    write_csv(c, path)
    np.testing.assert_array_equal(read_csv(path).xy, c.xy)
