import json
import os

import pandas as pd
import pytest

from main import main

PERMITTIVITY_ARGS = ['permittivity', '--omega-min', '0.01', '--omega-max', '100', '--points', '400']


def read(path):
    with open(path, 'rb') as f:
        return f.read()


def pass_lines(output_dir):
    with open(os.path.join(output_dir, 'report.txt'), encoding='utf-8') as f:
        return [line for line in f if line.startswith('PASS')]


def report_text(output_dir):
    with open(os.path.join(output_dir, 'report.txt'), encoding='utf-8') as f:
        return f.read()


def test_permittivity_command_writes_table(output_dir):
    status = main(PERMITTIVITY_ARGS + ['--out', output_dir])
    assert status == 0
    df = pd.read_csv(os.path.join(output_dir, 'permittivity.csv'))
    assert list(df.columns) == ['omega', 'eps_r', 'eps_i', 'n_r', 'n_i']
    assert len(df) == 400
    assert df['omega'].iloc[0] == pytest.approx(0.01)
    assert df['omega'].iloc[-1] == pytest.approx(100.0)
    assert len(pass_lines(output_dir)) == 3
    assert os.path.exists(os.path.join(output_dir, 'run.log'))

    with open(os.path.join(output_dir, 'summary.json'), encoding='utf-8') as f:
        summary = json.load(f)
    assert summary['exit_status'] == 0
    assert summary['checks']['failed'] == []


def test_outputs_are_byte_identical_across_runs(tmp_path):
    first, second = str(tmp_path / 'a'), str(tmp_path / 'b')
    assert main(PERMITTIVITY_ARGS + ['--out', first]) == 0
    assert main(PERMITTIVITY_ARGS + ['--out', second]) == 0
    assert read(os.path.join(first, 'permittivity.csv')) == read(os.path.join(second, 'permittivity.csv'))
    assert read(os.path.join(first, 'report.txt')) != b''


def test_zero_gamma_config_exits_with_status_two(tmp_path, output_dir, capsys):
    config = tmp_path / 'bad.ini'
    config.write_text("[medium]\ngamma = 0\n", encoding='utf-8')
    status = main(['permittivity', '--config', str(config), '--out', output_dir])
    assert status == 2
    assert 'medium.gamma' in capsys.readouterr().err
    assert not os.path.exists(os.path.join(output_dir, 'report.txt'))


def test_unknown_command_exits_with_status_two():
    assert main(['plot']) == 2


def test_failed_check_exits_with_status_one(tmp_path, output_dir):
    config = tmp_path / 'short.ini'
    config.write_text("[grid]\nenergy_omega_max = 2\n", encoding='utf-8')
    status = main(['energy', '--config', str(config), '--out', output_dir])
    assert status == 1
    with open(os.path.join(output_dir, 'report.txt'), encoding='utf-8') as f:
        report = f.read()
    assert 'FAIL  secular cancellation' in report
    assert 'TruncationError' in report


def test_energy_command(output_dir):
    assert main(['energy', '--out', output_dir]) == 0
    df = pd.read_csv(os.path.join(output_dir, 'energy_report.csv'))
    assert len(df) == 1
    assert df['identity_residual'].iloc[0] <= 1e-6
    assert df['cancellation_residual'].iloc[0] <= 1e-8
    assert len(pass_lines(output_dir)) == 8
    report = report_text(output_dir)
    assert 'secular cancellation: int w^4 eps_I (n_r - Re sqrt(eps)) dw / (2 pi^2) = 0' in report
    assert 'Eq.' not in report


def test_dielectric_command(output_dir):
    assert main(['dielectric', '--out', output_dir, '--points', '50', '--temperature', '0.5']) == 0
    spectra_e = pd.read_csv(os.path.join(output_dir, 'spectra_E.csv'))
    spectra_h = pd.read_csv(os.path.join(output_dir, 'spectra_H.csv'))
    assert len(spectra_e) == len(spectra_h) == 50
    assert (spectra_e['antinormal'] > spectra_e['normal']).all()


def test_sweep_tags_rows(tmp_path, output_dir):
    config = tmp_path / 'sweep.ini'
    config.write_text("[grid]\npoints = 20\n\n[sweep]\nparameter = medium.gamma\nvalues = 0.05, 0.2\n",
                      encoding='utf-8')
    assert main(['permittivity', '--config', str(config), '--out', output_dir]) == 0
    df = pd.read_csv(os.path.join(output_dir, 'permittivity.csv'))
    assert list(df.columns)[0] == 'medium.gamma'
    assert len(df) == 40
    assert sorted(df['medium.gamma'].unique()) == [0.05, 0.2]
    assert len(pass_lines(output_dir)) == 6


@pytest.mark.slow
def test_verify_all_on_defaults(output_dir):
    assert main(['verify-all', '--out', output_dir]) == 0
    assert len(pass_lines(output_dir)) >= 12
    assert os.path.exists(os.path.join(output_dir, 'oscillator_compare.csv'))
    assert os.path.exists(os.path.join(output_dir, 'energy_report.csv'))


def test_no_shift_flag_changes_oscillator_checks(tmp_path):
    shifted, plain = str(tmp_path / 'shifted'), str(tmp_path / 'plain')
    main(['oscillator', '--n-modes', '1000', '--out', shifted])
    main(['oscillator', '--n-modes', '1000', '--no-shift', '--out', plain])
    assert report_text(shifted) != report_text(plain)
    assert 'absorbed into w0' in report_text(plain)
    assert 'with the cut-off shift kept' in report_text(shifted)


def test_dielectric_command_in_low_loss_medium(tmp_path, output_dir):
    config = tmp_path / 'low_loss.ini'
    config.write_text("[medium]\ngamma = 0.01\n\n[grid]\npoints = 20\n", encoding='utf-8')
    main(['dielectric', '--config', str(config), '--out', output_dir])
    passed = ''.join(pass_lines(output_dir))
    for name in ('k-integral', 'electric spectrum', 'magnetic spectrum', 'propagator trace'):
        assert f"PASS  {name}:" in passed
