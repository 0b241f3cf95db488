import numpy as np
import pytest

from src.config import (RunConfig, config, load_run_config, parse_bool, parse_coeff, parse_dims, parse_wave,
                        parse_waves)
from src.core.synth import Profile
from src.utils.errors import UsageError


def test_defaults_validate():
    run = load_run_config()
    assert run.dims == (64, 64)
    assert run.construction == 'gradient'
    assert run.coeff is None


def test_parse_dims():
    assert parse_dims('64x64') == (64, 64)
    assert parse_dims('8X8x8') == (8, 8, 8)
    assert parse_dims('64') == (64,)
    for bad in ('ax4', '0x4', ''):
        with pytest.raises(UsageError):
            parse_dims(bad)


def test_parse_coeff():
    assert parse_coeff('1.25,0.25') == (1.25, 0.25)
    for bad in ('1.25', 'a,b', '1,2,3'):
        with pytest.raises(UsageError):
            parse_coeff(bad)


def test_parse_bool():
    assert parse_bool('true') and parse_bool('1') and parse_bool('Yes')
    assert not parse_bool('off')
    with pytest.raises(UsageError):
        parse_bool('maybe')


def test_parse_wave_angle_form():
    w = parse_wave('30:0.8')
    assert np.isclose(w.angle_deg(), 30.0)
    assert w.frequency == 0.8 and w.profile is Profile.COSINE
    w = parse_wave('90:0.5:square:2:0.1')
    assert w.profile is Profile.SQUARE and w.amplitude == 2.0 and w.phase == 0.1


def test_parse_wave_vector_form():
    w = parse_wave('0,0,2:1.0:gauss_modulated')
    assert w.direction == (0.0, 0.0, 1.0)
    assert w.profile is Profile.GAUSS_MODULATED


@pytest.mark.parametrize('bad', ['30', '30:4.0', '30:0.8:triangle', 'x:0.8', '1:2:3:4:5:6'])
def test_parse_wave_rejects(bad):
    with pytest.raises(UsageError):
        parse_wave(bad)


def test_parse_waves_splits_on_semicolon():
    waves = parse_waves('0:0.5; 90:0.5;')
    assert len(waves) == 2


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / 'run.conf'
    path.write_text(
        "# wave setup\n"
        "dims=32x32\n"
        "waves=0:0.5;90:0.5\n"
        "periodic=false\n"
        "coeff=1.0,0.5\n"
        "threads=2\n"
        "truth_angle=30\n"
    )
    run = load_run_config(path, {'threads': 4, 'noise': None})
    assert run.dims == (32, 32)
    assert len(run.waves) == 2
    assert run.periodic is False
    assert run.coeff == (1.0, 0.5)
    assert run.threads == 4
    assert run.noise == 0.0
    assert run.truth_angle == 30.0


def test_unknown_keys_rejected(tmp_path):
    path = tmp_path / 'run.conf'
    path.write_text("dims=32x32\ncolour=blue\n")
    with pytest.raises(UsageError, match='colour'):
        load_run_config(path)
    with pytest.raises(UsageError):
        load_run_config(None, {'colour': 'blue'})


def test_bad_values_rejected(tmp_path):
    path = tmp_path / 'run.conf'
    path.write_text("threads=many\n")
    with pytest.raises(UsageError):
        load_run_config(path)
    with pytest.raises(UsageError):
        load_run_config(tmp_path / 'missing.conf')


def test_thread_count_read_from_environment(monkeypatch):
    monkeypatch.setenv('STF_THREADS', '3')
    assert config.THREADS == 3
    assert load_run_config().threads == 3


def test_malformed_thread_environment_is_a_usage_error(monkeypatch):
    monkeypatch.setenv('STF_THREADS', 'many')
    with pytest.raises(UsageError, match='STF_THREADS'):
        config.THREADS
    with pytest.raises(UsageError):
        load_run_config()


def test_derivative_follows_upsampling_unless_set(tmp_path):
    assert load_run_config().derivative is None
    path = tmp_path / 'run.conf'
    path.write_text("derivative=gaussian\nupsample=true\nthreads=2\n")
    run = load_run_config(path)
    assert run.derivative == 'gaussian' and run.upsample and run.threads == 2
    with pytest.raises(UsageError):
        load_run_config(None, {'derivative': 'finite'})


@pytest.mark.parametrize('override', [
    {'kind': 'wavelet'},
    {'construction': 'hessian'},
    {'threads': 0},
    {'noise': -1.0},
    {'rel_tol': 1.0},
    {'coeff': (0.0, 0.25)},
    {'inner_scale': 0.0},
    {'boundary': 'mirror'},
])
def test_validation(override):
    with pytest.raises(UsageError):
        load_run_config(None, override)


def test_run_config_validate_returns_self():
    run = RunConfig()
    assert run.validate() is run
