import itertools

import numpy as np
import pytest

from src.core.analysis import (angle_field, angular_error_deg, indefiniteness_report, orientation,
                               orientation_delta_stats, orientation_error_stats, orientation_field,
                               rank_profile)
from src.core.filterbank import ResponseField, uniform_responses
from src.core.linalg import SymMat, identity, outer
from src.core.synth import linear_symmetric, snap_to_grid, wave_from_angle
from src.core.tensor import COUNTEREXAMPLE_Q, TensorField, gradient_tensor, tensor_bg, tensor_gk
from src.core.tessellation import icosa6
from src.utils.errors import ParameterError


def diag(*values):
    return SymMat.from_dense(np.diag(values))


def test_orientation_of_rank_one():
    n1 = icosa6().directions[0]
    est = orientation(outer(n1))
    assert np.allclose(np.abs(est.direction), np.abs(n1), atol=1e-12)
    assert np.isclose(est.certainty, 1.0)
    assert abs(est.tls_error) < 1e-12


def test_orientation_of_identity():
    a = orientation(identity(3))
    b = orientation(identity(3))
    assert a.certainty == 0.0
    assert np.array_equal(a.direction, b.direction)
    assert np.isclose(a.tls_error, 2.0)


def test_orientation_of_zero_tensor():
    est = orientation(SymMat(2, np.zeros(3)))
    assert est.certainty == 0.0
    assert np.isclose(np.linalg.norm(est.direction), 1.0)


def test_orientation_scale_invariance():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 3))
    t = SymMat.from_dense(a @ a.T)
    base = orientation(t)
    scaled = orientation(t.scaled(7.0))
    assert np.allclose(scaled.direction, base.direction, atol=1e-12)
    assert np.isclose(scaled.certainty, base.certainty, atol=1e-12)
    assert np.isclose(scaled.tls_error, 7.0 * base.tls_error)


def test_orientation_half_space_convention():
    est = orientation(outer([0.6, -0.8]))
    assert est.direction[1] > 0


def test_orientation_of_synthetic_wave():
    spec = snap_to_grid((64, 64), wave_from_angle(30.0, 0.8))
    f = linear_symmetric((64, 64), spec)
    est = orientation(gradient_tensor(f).at((32, 32)))
    assert abs(est.angle_deg - spec.angle_deg()) < 0.5
    assert est.certainty > 0.999


def test_tls_error_nonnegative_on_psd_input():
    rng = np.random.default_rng(1)
    for _ in range(100):
        a = rng.standard_normal((3, 2))
        t = SymMat.from_dense(a @ a.T)
        assert orientation(t).tls_error >= -1e-12 * t.trace()


def test_gk_tls_error_can_be_negative():
    t = tensor_gk(uniform_responses(COUNTEREXAMPLE_Q, (1,)), icosa6()).at((0,))
    assert orientation(t).tls_error < 0


def test_rank_profile_examples():
    assert rank_profile(diag(1.0, 0.0, 0.0), 1e-6).near_zero_count == 2
    assert rank_profile(diag(1.0, 1.0, 0.0), 1e-6).near_zero_count == 1
    assert rank_profile(diag(1.0, 1.0, 1.0), 1e-6).near_zero_count == 0
    profile = rank_profile(diag(4.0, 1.0, 0.0), 1e-3)
    assert np.isclose(profile.threshold, 4e-3)
    assert profile.to_dict()['near_zero_count'] == 1


@pytest.mark.parametrize('n', [1, 2, 3, 4])
def test_rank_profile_all_binary_diagonals(n):
    for values in itertools.product([0.0, 1.0], repeat=n):
        profile = rank_profile(diag(*values), 1e-3)
        if any(values):
            assert profile.near_zero_count == n - int(sum(values))
            assert not profile.degenerate
        else:
            assert profile.degenerate and profile.near_zero_count == n
        assert 0 <= profile.near_zero_count <= n


def test_rank_profile_validation():
    for tol in (0.0, 1.0, -0.5):
        with pytest.raises(ParameterError):
            rank_profile(identity(2), tol)
    degenerate = rank_profile(diag(-1.0, -2.0))
    assert degenerate.degenerate and degenerate.near_zero_count == 2
    zero = rank_profile(SymMat(3, np.zeros(6)))
    assert zero.degenerate and zero.near_zero_count == 3


def test_angular_error():
    assert np.isclose(angular_error_deg([1.0, 0.0], [-1.0, 0.0]), 0.0)
    assert np.isclose(angular_error_deg([1.0, 0.0], [0.0, 2.0]), 90.0)
    assert np.isclose(angular_error_deg([1.0, 0.0], [1.0, 1.0]), 45.0)


def test_orientation_field_and_angles():
    f = linear_symmetric((32, 32), snap_to_grid((32, 32), wave_from_angle(45.0, 1.0)))
    of = orientation_field(gradient_tensor(f))
    angles = angle_field(of)
    assert angles.shape == (32, 32)
    assert np.allclose(np.degrees(angles), 45.0, atol=1e-6)
    assert np.all((of.certainty >= 0.0) & (of.certainty <= 1.0))
    stats = orientation_error_stats(of, np.array([1.0, 1.0]), margin=4)
    assert stats.count == 24 * 24 and stats.max_deg < 1e-4
    with pytest.raises(ParameterError):
        orientation_error_stats(of, np.array([1.0, 1.0]), margin=16)


def test_angle_field_needs_two_dimensions():
    tf = tensor_bg(uniform_responses([1.0] * 6, (2, 2)), icosa6())
    with pytest.raises(ParameterError):
        angle_field(orientation_field(tf))


def test_orientation_delta_stats():
    f = linear_symmetric((16, 16), snap_to_grid((16, 16), wave_from_angle(0.0, 1.0)))
    of = orientation_field(gradient_tensor(f))
    delta = orientation_delta_stats(of, of)
    assert delta.count == 256 and delta.max_deg < 1e-4


def test_indefiniteness_of_bg_field():
    rng = np.random.default_rng(2)
    q = [np.abs(rng.standard_normal((8, 8))) for _ in range(6)]
    tf = tensor_bg([ResponseField(v) for v in q], icosa6())
    report = indefiniteness_report(tf)
    assert report.negative_pixels == 0 and report.fraction_negative == 0.0
    assert sum(report.histogram) == 64


def test_indefiniteness_of_counterexample_field():
    tf = tensor_gk(uniform_responses(COUNTEREXAMPLE_Q, (5, 5)), icosa6())
    report = indefiniteness_report(tf)
    assert report.fraction_negative == 1.0
    ratio = report.min_eigenvalue / 0.75
    assert np.isclose(report.worst_ratio, ratio)
    # every pixel lands in the same bin
    assert max(report.histogram) == 25
    rows = report.to_rows()
    assert rows[0] == {'metric': 'pixels', 'value': 25}
    assert len(rows) == 5 + 20


def test_indefiniteness_of_zero_field():
    report = indefiniteness_report(TensorField(np.zeros((3, 4, 4)), 'bg'))
    assert report.fraction_negative == 0.0
    assert report.min_eigenvalue == 0.0
    assert report.worst_ratio == 0.0
