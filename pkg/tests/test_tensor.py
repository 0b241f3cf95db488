import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.core.analysis import orientation, orientation_field
from src.core.filterbank import ResponseField, apply_bank, make_bank, uniform_responses
from src.core.linalg import SymMat, char_poly_eigenvalues, eig_sym, eig_sym_batch
from src.core.synth import (Profile, ScalarField, WaveSpec, linear_symmetric, snap_to_grid, superpose,
                            wave_from_angle)
from src.core.tensor import (COUNTEREXAMPLE_Q, Construction, FrameCoefficients, TensorField,
                             dft_gradient_tensor, global_field, gradient_tensor, spectral_moment_tensor,
                             tensor_bg, tensor_gk, upsample2x)
from src.core.tessellation import DirectionSet, half_circle, icosa6
from src.utils.errors import ParameterError


def responses(q, shape=(1,)):
    return uniform_responses(q, shape)


def random_field_responses(rng, k, pixels):
    q = rng.random((k, pixels)) * rng.choice([1e-6, 1.0, 1e6], size=(k, 1))
    return [ResponseField(row, label=f"n{i + 1}") for i, row in enumerate(q)]


def bandlimited(rng, dims, fraction=4):
    """Random real image with no spectral content at or above π·2/fraction per axis."""
    spectrum = np.fft.fftn(rng.standard_normal(dims))
    for axis, m in enumerate(dims):
        keep = np.abs(np.fft.fftfreq(m) * m) < m / fraction
        shape = [1] * len(dims)
        shape[axis] = m
        spectrum = spectrum * keep.reshape(shape)
    return ScalarField(np.real(np.fft.ifftn(spectrum)))


# ---------------------------------------------------------------------------
# T_GK and T_BG
# ---------------------------------------------------------------------------

def test_counterexample_gk_is_indefinite():
    t = tensor_gk(responses(COUNTEREXAMPLE_Q), icosa6()).at((0,))
    oracle = char_poly_eigenvalues(t)
    jacobi = eig_sym(t).eigenvalues
    assert np.allclose(jacobi, oracle, atol=1e-9)
    assert abs(t.trace() - 0.75) <= 1e-12
    assert np.sum(oracle < 0) == 2
    assert np.isclose(oracle.sum(), 0.75, atol=1e-12)


def test_counterexample_bg_is_psd():
    t = tensor_bg(responses(COUNTEREXAMPLE_Q), icosa6()).at((0,))
    assert char_poly_eigenvalues(t)[-1] >= -1e-12
    assert np.isclose(t.trace(), 1.5, atol=1e-12)


def test_single_excitation():
    q = (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    gk = eig_sym(tensor_gk(responses(q), icosa6()).at((0,))).eigenvalues
    bg = eig_sym(tensor_bg(responses(q), icosa6()).at((0,))).eigenvalues
    assert np.allclose(gk, [1.0, -0.25, -0.25], atol=1e-12)
    assert np.allclose(bg, [1.0, 0.0, 0.0], atol=1e-12)


@pytest.mark.parametrize('c', [1e-3, 1.0, 7.5])
def test_uniform_responses_give_multiples_of_identity(c):
    q = [c] * 6
    bg = tensor_bg(responses(q), icosa6()).at((0,)).to_dense()
    gk = tensor_gk(responses(q), icosa6()).at((0,)).to_dense()
    assert np.allclose(bg, 2.0 * c * np.eye(3), atol=1e-12 * max(c, 1.0))
    assert np.allclose(gk, c * np.eye(3), atol=1e-12 * max(c, 1.0))


def test_gk_needs_coefficients_off_icosa6():
    q = responses([1.0] * 6)
    with pytest.raises(ParameterError):
        tensor_gk(q, half_circle(6))
    t = tensor_gk(q, half_circle(6), FrameCoefficients(1.0, 0.5)).at((0,))
    assert np.allclose(t.to_dense(), 0.0, atol=1e-12)


def test_frame_coefficients_validation():
    with pytest.raises(ParameterError):
        FrameCoefficients(0.0, 0.25)
    with pytest.raises(ParameterError):
        FrameCoefficients(1.0, -0.1)


def test_count_mismatch():
    with pytest.raises(ParameterError):
        tensor_bg(responses([1.0] * 5), icosa6())
    with pytest.raises(ParameterError):
        tensor_gk(responses([1.0] * 7), icosa6())


@pytest.mark.parametrize('dirs', [icosa6()] + [half_circle(k) for k in range(3, 13)],
                         ids=lambda d: d.name)
def test_bg_is_psd_for_random_responses(dirs):
    rng = np.random.default_rng(len(dirs))
    q = random_field_responses(rng, len(dirs), 10_000)
    tf = tensor_bg(q, dirs)
    w, _ = eig_sym_batch(tf.dense())
    assert np.all(w[..., -1] >= -1e-12 * tf.trace())


def test_gk_counterexample_field_is_indefinite_everywhere():
    tf = tensor_gk(uniform_responses(COUNTEREXAMPLE_Q, (4, 5)), icosa6())
    assert tf.grid == (4, 5)
    assert np.all(tf.min_eigenvalues() < 0)
    assert not tf.is_psd()


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6,), elements=st.floats(min_value=0.0, max_value=100.0)),
       arrays(np.float64, (6,), elements=st.floats(min_value=0.0, max_value=100.0)),
       st.floats(min_value=0.0, max_value=10.0))
def test_constructions_are_linear(q1, q2, c):
    dirs = icosa6()
    for build in (tensor_bg, tensor_gk):
        a = build(responses(q1), dirs).planes
        b = build(responses(q2), dirs).planes
        ab = build(responses(q1 + c * q2), dirs).planes
        assert np.allclose(ab, a + c * b, atol=1e-9 * (1.0 + np.abs(ab).max()))


def test_bg_rotation_equivariance():
    rng = np.random.default_rng(11)
    base = half_circle(7)
    t = 0.3
    rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    rotated = DirectionSet(dim=2, directions=base.directions @ rot.T)
    q = responses(rng.random(7))
    a = tensor_bg(q, base).at((0,)).to_dense()
    b = tensor_bg(q, rotated).at((0,)).to_dense()
    assert np.allclose(b, rot @ a @ rot.T, atol=1e-12)


def test_tensor_field_helpers():
    tf = tensor_bg(uniform_responses([1.0, 2.0, 3.0], (2, 3)), half_circle(3))
    assert tf.dim == 2 and tf.tag is Construction.BG
    assert np.allclose(tf.trace(), 6.0)
    assert np.allclose(tf.mean().to_dense(), tf.at((1, 2)).to_dense())
    assert tf.dense().shape == (2, 3, 2, 2)
    with pytest.raises(ValueError):
        tf.planes[0, 0, 0] = 1.0
    with pytest.raises(ParameterError):
        TensorField(np.zeros((4, 2, 2)), Construction.BG)


# ---------------------------------------------------------------------------
# Global moment tensors
# ---------------------------------------------------------------------------

def test_constant_image_has_zero_moments():
    f = ScalarField(np.full((16, 16), 2.5))
    assert np.allclose(spectral_moment_tensor(f).entries, 0.0, atol=1e-20)
    assert np.allclose(dft_gradient_tensor(f).entries, 0.0, atol=1e-20)


def test_cosine_moments():
    m = 32
    w0 = 2.0 * np.pi * 3 / m
    f = linear_symmetric((m, m), WaveSpec((1.0, 0.0), w0))
    expected = w0 ** 2 * m * m / 2.0
    for t in (spectral_moment_tensor(f), dft_gradient_tensor(f)):
        assert np.isclose(t[0, 0], expected, rtol=1e-12)
        assert abs(t[0, 1]) < 1e-10 and abs(t[1, 1]) < 1e-10


def test_parseval_equivalence():
    rng = np.random.default_rng(2024)
    shapes = [(16, 16), (16, 32), (32, 32), (48, 64), (64, 64), (8, 8, 8)]
    for k in range(100):
        f = ScalarField(rng.standard_normal(shapes[k % len(shapes)]))
        a = spectral_moment_tensor(f)
        b = dft_gradient_tensor(f)
        assert (a + b.scaled(-1.0)).frobenius() < 1e-10 * a.frobenius()


def test_moments_need_even_dims():
    with pytest.raises(ParameterError):
        spectral_moment_tensor(ScalarField(np.zeros((15, 16))))


def test_global_field_wraps_tensor():
    t = SymMat(2, [1.0, 0.5, 2.0])
    tf = global_field(t, 2)
    assert tf.grid == (1, 1) and tf.tag is Construction.SPECTRAL
    assert np.array_equal(tf.mean().entries, t.entries)


# ---------------------------------------------------------------------------
# Upsampling
# ---------------------------------------------------------------------------

def test_upsample_constant():
    up = upsample2x(ScalarField(np.full((8, 6), 1.5)))
    assert up.dims == (16, 12)
    assert np.allclose(up.values, 1.5, atol=1e-12)


def test_upsample_preserves_samples():
    rng = np.random.default_rng(5)
    for dims in [(8, 8), (16, 10), (6, 6, 6)]:
        f = ScalarField(rng.standard_normal(dims))
        up = upsample2x(f)
        assert np.allclose(up.values[tuple(slice(None, None, 2) for _ in dims)], f.values, atol=1e-10)


def test_upsample_pure_wave():
    w0 = 2.0 * np.pi * 3 / 16
    f = linear_symmetric((16, 16), WaveSpec((0.0, 1.0), w0))
    up = upsample2x(f)
    expected = linear_symmetric((32, 32), WaveSpec((0.0, 1.0), w0 / 2.0))
    assert np.allclose(up.values, expected.values, atol=1e-12)


def test_upsampled_global_tensor_scaling():
    rng = np.random.default_rng(6)
    for dims in [(16, 16), (8, 8, 8)]:
        f = bandlimited(rng, dims, fraction=2)
        fine = spectral_moment_tensor(upsample2x(f)).scaled(4.0 / 2 ** len(dims))
        coarse = spectral_moment_tensor(f)
        assert np.allclose(fine.entries, coarse.entries, rtol=1e-10, atol=1e-12)


# ---------------------------------------------------------------------------
# Gradient tensor field
# ---------------------------------------------------------------------------

def test_gradient_constant_image():
    tf = gradient_tensor(ScalarField(np.full((16, 16), 4.0)))
    assert tf.tag is Construction.GRADIENT
    assert np.allclose(tf.planes, 0.0, atol=1e-20)


def test_gradient_wave_at_30_degrees():
    f = linear_symmetric((64, 64), wave_from_angle(30.0, 0.8), periodic=False)
    tf = gradient_tensor(f, inner_scale=1.0, outer_scale=3.0, boundary='periodic')
    of = orientation_field(tf)
    interior = (slice(17, -17), slice(17, -17))
    truth = np.array([np.cos(np.radians(30.0)), np.sin(np.radians(30.0))])
    cosines = np.abs(of.directions[interior] @ truth)
    assert np.degrees(np.arccos(np.clip(cosines, 0.0, 1.0))).max() < 0.5


SWEEP_ANGLES = [float(a) for a in np.linspace(0.0, 180.0, 25, endpoint=False)]


@pytest.mark.parametrize('angle', SWEEP_ANGLES)
def test_gradient_orientation_sweep(angle):
    f = linear_symmetric((64, 64), wave_from_angle(angle, 0.8), periodic=False)
    of = orientation_field(gradient_tensor(f))
    interior = (slice(17, -17), slice(17, -17))
    t = np.radians(angle)
    cosines = np.abs(of.directions[interior] @ np.array([np.cos(t), np.sin(t)]))
    assert np.degrees(np.arccos(np.clip(cosines, 0.0, 1.0))).max() <= 0.5
    w = of.eigenvalues[interior]
    assert np.all(np.abs(w[..., 1]) < 1e-3 * w[..., 0])


@pytest.mark.parametrize('angle', SWEEP_ANGLES)
def test_bank_bg_orientation_sweep(angle):
    spec = snap_to_grid((64, 64), wave_from_angle(angle, 0.8))
    f = linear_symmetric((64, 64), spec)
    dirs = half_circle(6)
    est = orientation(tensor_bg(apply_bank(f, make_bank(dirs, exponent=3)), dirs).mean())
    err = np.degrees(np.arccos(min(1.0, abs(float(est.direction @ np.array(spec.direction))))))
    assert err < 0.5
    ratio = of.eigenvalues[interior][..., 1] / of.eigenvalues[interior][..., 0]
    assert ratio.max() < 1e-3


def test_gradient_orthogonal_waves_are_isotropic():
    w0 = 2.0 * np.pi * 8 / 64
    f = superpose([linear_symmetric((64, 64), WaveSpec((1.0, 0.0), w0)),
                   linear_symmetric((64, 64), WaveSpec((0.0, 1.0), w0))])
    w = eig_sym(gradient_tensor(f).mean()).eigenvalues
    assert 0.9 <= w[1] / w[0] <= 1.0


def test_bank_bg_orthogonal_waves_are_isotropic():
    w0 = 2.0 * np.pi * 10 / 64
    f = superpose([linear_symmetric((64, 64), WaveSpec((1.0, 0.0), w0)),
                   linear_symmetric((64, 64), WaveSpec((0.0, 1.0), w0))])
    dirs = half_circle(6)
    tf = tensor_bg(apply_bank(f, make_bank(dirs, exponent=3)), dirs)
    w = eig_sym(tf.mean()).eigenvalues
    assert 0.9 <= w[1] / w[0] <= 1.0


@pytest.mark.parametrize('bins', [(1, 0), (7, 4), (5, 5), (2, 9), (0, 6), (-3, 8), (-8, 3)])
def test_bank_bg_orientation_of_on_grid_waves(bins):
    dims = (64, 64)
    omega = 2.0 * np.pi * np.array(bins) / 64
    spec = WaveSpec(tuple(omega), float(np.linalg.norm(omega)))
    f = linear_symmetric(dims, spec)
    dirs = half_circle(6)
    tf = tensor_bg(apply_bank(f, make_bank(dirs, exponent=3)), dirs)
    est = orientation(tf.mean())
    err = np.degrees(np.arccos(min(1.0, abs(float(est.direction @ np.array(spec.direction))))))
    assert err < 2.0


def test_gradient_reflect_and_spectral_modes():
    f = linear_symmetric((32, 32), WaveSpec((1.0, 0.0), 2.0 * np.pi * 4 / 32))
    for kwargs in ({'boundary': 'reflect'}, {'derivative': 'spectral'}):
        tf = gradient_tensor(f, **kwargs)
        est = orientation(tf.at((16, 16)))
        assert np.allclose(np.abs(est.direction), [1.0, 0.0], atol=1e-6)


def test_gradient_upsample_agrees_for_bandlimited_input():
    rng = np.random.default_rng(8)
    f = bandlimited(rng, (32, 32))
    plain = gradient_tensor(f, 1.0, 2.0, derivative='spectral')
    up = gradient_tensor(f, 1.0, 2.0, derivative='spectral', upsample=True)
    assert up.planes.shape == plain.planes.shape
    assert np.allclose(up.planes, plain.planes, atol=1e-8)


def test_gradient_upsample_defaults_to_spectral_derivatives():
    rng = np.random.default_rng(8)
    f = bandlimited(rng, (32, 32))
    plain = gradient_tensor(f, 1.0, 2.0, derivative='spectral')
    assert np.allclose(gradient_tensor(f, 1.0, 2.0, upsample=True).planes, plain.planes, atol=1e-8)


def test_gradient_upsample_with_sampled_kernels_is_approximate():
    rng = np.random.default_rng(8)
    f = bandlimited(rng, (32, 32))
    plain = gradient_tensor(f, 1.0, 2.0, derivative='gaussian')
    up = gradient_tensor(f, 1.0, 2.0, derivative='gaussian', upsample=True)
    scale = np.abs(plain.planes).max()
    assert np.abs(up.planes - plain.planes).max() < 2e-3 * scale


def test_gradient_upsample_with_reflect_boundary_uses_sampled_kernels():
    f = linear_symmetric((16, 16), WaveSpec((1.0, 0.0), 2.0 * np.pi * 2 / 16))
    tf = gradient_tensor(f, boundary='reflect', upsample=True)
    assert tf.grid == (16, 16)
    with pytest.raises(ParameterError):
        gradient_tensor(f, boundary='reflect', derivative='spectral', upsample=True)


def test_gradient_is_psd():
    rng = np.random.default_rng(9)
    tf = gradient_tensor(ScalarField(rng.standard_normal((24, 24))), 1.0, 2.0)
    assert tf.is_psd()


def test_gradient_parameters():
    f = ScalarField(np.zeros((8, 8)))
    with pytest.raises(ParameterError):
        gradient_tensor(f, inner_scale=0.0)
    with pytest.raises(ParameterError):
        gradient_tensor(f, outer_scale=-1.0)
    with pytest.raises(ParameterError):
        gradient_tensor(f, boundary='mirror')
    with pytest.raises(ParameterError):
        gradient_tensor(f, derivative='spectral', boundary='reflect')
    assert gradient_tensor(f, outer_scale=0.0).grid == (8, 8)


def test_square_profile_orientation():
    f = linear_symmetric((64, 64), WaveSpec((0.0, 1.0), 2.0 * np.pi * 4 / 64, Profile.SQUARE))
    est = orientation(gradient_tensor(f).mean())
    assert np.allclose(est.direction, [0.0, 1.0], atol=1e-9)
