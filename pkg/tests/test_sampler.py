import cmath
import math

import numpy as np
import pytest

from odk.density import GeneratorFamily
from odk.errors import CapZero, DimensionTooHigh, ValidationError
from odk.matrix_group import CommutingGroup
from odk.sampler import (
    coverage_report,
    coverage_sweep,
    emit_plot_data,
    read_plot_data,
    sample_orbit,
    sample_scalar_orbit_annulus,
    sample_subgroup,
    sample_subgroup_windowed,
)

R2 = math.sqrt(2)


def test_subgroup_of_one():
    pts = sample_subgroup(GeneratorFamily.real_float([[1.0]]), 2)
    assert sorted(pts[:, 0]) == [-2, -1, 0, 1, 2]


def test_one_three_halves_is_half_integers():
    pts = sample_subgroup(GeneratorFamily.real_float([[1.0], [1.5]]), 30)
    assert np.allclose(2 * pts, np.round(2 * pts))
    inside = np.unique(pts[np.abs(pts[:, 0]) <= 5, 0])
    assert np.allclose(inside, np.arange(-10, 11) / 2)


def test_one_sqrt2_dispersion():
    pts = sample_subgroup(GeneratorFamily.real_float([[1.0], [R2]]), 1000)
    rep = coverage_report(pts, 0.5, 0.001, center=[0.5])
    assert rep.dispersion < 0.01


def test_windowed_enumerates_every_translate():
    # basis {1}; the sqrt2 coefficient ranges over [-50, 50]; every k + m sqrt2 in [-1, 1) appears
    fam = GeneratorFamily.real_float([[1.0], [R2]])
    win = np.sort(sample_subgroup_windowed(fam, 50, 1.0)[:, 0])
    m = np.arange(-50, 51)
    frac = m * R2 - np.floor(m * R2)
    expected = np.sort(np.concatenate([frac, frac - 1]))
    assert np.allclose(win, expected)


def test_orbit_of_two():
    g = CommutingGroup(([[2.0]],))
    pts = sample_orbit(g, 1.0, 3)
    assert np.allclose(sorted(pts[:, 0].real), [1 / 8, 1 / 4, 1 / 2, 1, 2, 4, 8])
    assert np.allclose(pts.imag, 0)
    rep = coverage_report(pts, 1.0, 0.1)
    assert rep.occupied <= 10


def test_rotation_orbit_stays_on_circle():
    g = CommutingGroup(([[cmath.exp(2j * math.pi * R2)]],))
    pts = sample_orbit(g, 1.0, 200)
    assert np.allclose(np.abs(pts), 1)
    rep = coverage_report(pts, 1.5, 0.05, annulus=(0.5, 1.5))
    assert rep.occupancy < 0.5


def test_annulus_enumeration_matches_box():
    g = CommutingGroup(([[cmath.exp(R2 + 1j)]], [[cmath.exp(1 + 1j * R2)]]))
    box = sample_orbit(g, 1.0, 30)[:, 0]
    box = box[(np.abs(box) >= 0.5) & (np.abs(box) <= 1.5)]
    ann = sample_scalar_orbit_annulus(g, 1.0, 30, 0.5, 1.5)[:, 0]
    key = lambda z: (round(z.real, 9), round(z.imag, 9))
    assert sorted(map(key, box)) == sorted(map(key, ann))


def test_coverage_examples():
    h = 0.5
    centers = (np.stack(np.meshgrid(np.arange(-0.75, 1, h), np.arange(-0.75, 1, h)), -1)).reshape(-1, 2)
    rep = coverage_report(centers, 1.0, h)
    assert rep.occupancy == 1.0 and rep.dispersion <= h / 2 * math.sqrt(2)
    rep = coverage_report(np.zeros((1, 2)), 1.0, 0.5)
    assert rep.occupancy == 1 / 16
    rep = coverage_report(np.zeros((0, 2)), 1.0, 0.5, dim=2)
    assert rep.occupancy == 0 and rep.dispersion == pytest.approx(2 * math.sqrt(2))


def test_coverage_errors():
    with pytest.raises(DimensionTooHigh):
        coverage_report(np.zeros((1, 5)), 1.0, 0.5)
    with pytest.raises(ValidationError):
        coverage_report(np.zeros((1, 2)), 1.0, 0.0)
    with pytest.raises(CapZero):
        sample_subgroup(GeneratorFamily.real_float([[1.0]]), 2, cap=0)


def test_random_draw_above_cap_is_symmetric():
    pts = sample_subgroup(GeneratorFamily.real_float([[1.0], [R2], [math.sqrt(3)]]), 100, cap=1000, seed=3)
    assert len(pts) == 1000
    assert np.allclose(np.sort(pts[:, 0]), np.sort(-pts[:, 0]))


def test_sweep_plateaus_for_lines():
    fam = GeneratorFamily.real_float([[1, 0], [0, 1], [R2, R2]])
    reps = coverage_sweep(fam)
    assert reps[-1].occupancy <= 0.5
    assert len({round(r.occupancy, 3) for r in reps[-3:]}) == 1


def test_csv(tmp_path):
    pts = np.array([[0.1, 1 / 3], [R2, -1e-300], [math.pi, 2.0]])
    path = tmp_path / "p.csv"
    emit_plot_data(pts, path)
    assert len(path.read_text().splitlines()) == 4
    assert np.array_equal(read_plot_data(path), pts)
    emit_plot_data(np.zeros((0, 2)), path)
    assert path.read_text().splitlines() == ["x0,x1"]
