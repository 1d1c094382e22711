import json

import numpy as np
import pandas as pd
import pytest

from errors import ArchiveShapeError, ArchiveVersionError, ConfigurationError, CorruptArchiveError
from geometry.domain import build_domain
from geometry.fields import random_smooth_map, random_tangent_spinor
from main import run
from modules import (
    FieldArchive,
    apply_overrides,
    config_from_dict,
    decode_archive,
    encode_archive,
    export_csv,
    load_archive,
    load_config,
    map_from_archive,
    save_archive,
    spinor_from_archive,
    state_archive,
)

SMALL = ['--override', 'domain.n=8', '--override', 'action.alpha=1.5']


def test_archive_round_trip(tmp_path, domain, torus, rng):
    phi = random_smooth_map(domain, torus, rng, amplitude=0.05, winding=((1, 0), (0, 1)))
    psi = random_tangent_spinor(phi, rng)
    path = save_archive(tmp_path / 'state.sdaf', state_archive(phi, psi, metadata={'seed': 7}))
    archive = load_archive(path)
    assert archive.metadata['seed'] == 7
    restored = map_from_archive(archive, domain, torus)
    np.testing.assert_array_equal(restored.values, phi.values)
    np.testing.assert_array_equal(restored.winding, phi.winding)
    np.testing.assert_array_equal(spinor_from_archive(archive, restored), psi)


def test_corrupt_and_foreign_archives(tmp_path):
    blob = encode_archive(FieldArchive(arrays={'phi': np.zeros((4, 4, 2))}))
    with pytest.raises(CorruptArchiveError):
        decode_archive(b'NOPE' + blob[4:])
    with pytest.raises(CorruptArchiveError):
        decode_archive(blob[:-3])
    with pytest.raises(CorruptArchiveError):
        decode_archive(blob + b'\x00')
    with pytest.raises(ArchiveVersionError):
        decode_archive(encode_archive(FieldArchive(arrays={}, version='sdaf-0')))
    with pytest.raises(CorruptArchiveError):
        load_archive(tmp_path / 'missing.sdaf')


def test_archive_grid_must_match(domain, torus, rng):
    archive = state_archive(random_smooth_map(domain, torus, rng, winding=((1, 0), (0, 1))))
    with pytest.raises(ArchiveShapeError):
        map_from_archive(archive, build_domain(16, 2 * np.pi), torus)
    assert spinor_from_archive(archive, map_from_archive(archive, domain, torus)) is None


def test_csv_export_orders_columns_and_writes_sidecar(tmp_path):
    frame = pd.DataFrame({'residual': [1e-14, 2e-14], 'note': ['a', 'b'], 'eigenvalue': [-0.5, 0.5],
                          'index': [0, 1]})
    path = export_csv(frame, tmp_path / 'spectrum.csv', 'spectrum', description='test')
    assert path.read_text().splitlines()[0] == 'index,eigenvalue,residual,note'
    sidecar = json.loads((tmp_path / 'spectrum.schema.json').read_text())
    assert sidecar['rows'] == 2
    assert [c['name'] for c in sidecar['columns']] == ['index', 'eigenvalue', 'residual', 'note']
    assert sidecar['columns'][3]['description'] == ''


def test_malformed_config_reports_position(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text('{"action": {"alpha": 1.5,}}')
    with pytest.raises(ConfigurationError) as info:
        load_config(path)
    assert info.value.key == "config"
    assert "line 1" in str(info.value)


def test_overrides_build_nested_blocks():
    raw = apply_overrides({}, ['action.alpha=1.4', 'target.kind=sphere', 'domain.n=8'])
    assert raw == {'action': {'alpha': 1.4}, 'target': {'kind': 'sphere'}, 'domain': {'n': 8}}
    with pytest.raises(ConfigurationError):
        apply_overrides({}, ['no-equals-sign'])
    with pytest.raises(ConfigurationError):
        apply_overrides({'seed': 1}, ['seed.value=2'])


def test_validation_errors_name_the_key():
    with pytest.raises(ConfigurationError) as info:
        config_from_dict({'action': {'alpha': 3.0}})
    assert info.value.key == "action.alpha"
    with pytest.raises(ConfigurationError) as info:
        config_from_dict({'action': {'alpha': 1.5}, 'domain': {'n': 8}, 'diagnostics': {'radius': 0.1}})
    assert info.value.key == "diagnostics.radius"
    with pytest.raises(ConfigurationError) as info:
        config_from_dict({'action': {'alpha': 1.5}, 'class': {'winding': [[1, 0]]}})
    assert info.value.key == "class.winding"


def test_config_file_with_cli_settings(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'action': {'alpha': 1.5, 'k': 4}, 'domain': {'n': 8}}))
    config = load_config(path, ['solver.max_iters=10'], experiment='flow', seed=3, output_dir=str(tmp_path))
    assert config.action_config().perturbation_scale == pytest.approx(0.25)
    assert config.solver_config().max_iters == 10
    assert config.seed == 3
    assert config.fingerprint() == load_config(path, ['solver.max_iters=10'], experiment='flow', seed=3,
                                               output_dir=str(tmp_path)).fingerprint()


def test_solve_writes_outputs_and_archive_restarts(tmp_path):
    out = tmp_path / 'solve'
    assert run(['solve', '--out', str(out), '--seed', '5'] + SMALL) == 0
    for name in ('config.json', 'report.json', 'summary.pdf', 'state.sdaf', 'history.csv', 'history.schema.json'):
        assert (out / name).exists()
    report = json.loads((out / 'report.json').read_text())
    assert report['verdict'] == 'PASS'
    assert report['provenance']['seed'] == 5
    assert report['results']['converged']

    spectrum = tmp_path / 'spectrum'
    code = run(['spectrum', '--out', str(spectrum), '--override', 'initial.kind=archive',
                '--override', f'initial.path={out / "state.sdaf"}'] + SMALL)
    assert code == 0
    assert (spectrum / 'spectrum.csv').read_text().splitlines()[0] == 'index,eigenvalue,residual,band_weight'
    results = json.loads((spectrum / 'report.json').read_text())['results']
    assert results['kernel'] == 16
    assert results['physical_kernel'] == 4


def test_growth_check_failure_exit_code(tmp_path):
    code = run(['growthcheck', '--out', str(tmp_path), '--override', 'action.perturbation=power',
                '--override', 'action.perturbation_params={"mu": 4, "coefficient": -1}'] + SMALL)
    assert code == 2
    report = json.loads((tmp_path / 'report.json').read_text())
    assert report['results']['failed'] == ['F2', 'F4']


def test_configuration_errors_exit_with_one(tmp_path):
    assert run(['solve', '--out', str(tmp_path), '--override', 'domain.n=8']) == 1
    assert not (tmp_path / 'report.json').exists()
