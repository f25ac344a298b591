import csv
import io as _io
import json

import numpy as np
import pytest

from ccube import io
from ccube.cli import main
from ccube.geometry import Gna, Nested, Uniform
from ccube.scene import table_config, two_target_scene
from ccube.signal import coarray_from_snapshots, synthesize


class TestSchema:

    @pytest.mark.parametrize('tag', ['C-Cube', 'U-Cube', 'C-C', 'UCU'])
    def test_config_round_trip(self, tag):
        cfg = table_config(tag, sigma_n2=0.25)
        d = json.loads(io.dumps(io.config_to_dict(cfg)))
        assert io.config_from_dict(d) == cfg

    def test_explicit_schemes(self):
        cfg = table_config('C-Cube').with_(spatial=Nested(3, 3), fo=Gna(3, 3, 2, 3),
                                           pri=Uniform(4))
        assert io.config_from_dict(io.config_to_dict(cfg)) == cfg

    def test_tag_shorthand(self):
        cfg = io.config_from_dict({'tag': 'CUC', 'm': 3, 'n': 4, 'L_r': 50})
        assert cfg == table_config('CUC', 3, 4, L_r=50)

    def test_scene_degrees(self):
        d = io.scene_to_dict(two_target_scene())
        assert d['targets'][0]['theta_deg'] == pytest.approx(10)
        back = io.scene_from_dict(d)
        assert np.allclose(back.params(), two_target_scene().params(), rtol=1e-15)

    def test_schema_version(self):
        with pytest.raises(ValueError):
            io.check_schema({'schema': 2})

    def test_complex_encoding(self):
        a = np.arange(6).reshape(2, 3) + 1j * np.arange(6, 12).reshape(2, 3)
        enc = io.encode_complex(a)
        assert enc['data'][:4] == [0.0, 6.0, 1.0, 7.0]
        assert np.array_equal(io.decode_complex(enc), a)

    def test_coarray_round_trip(self):
        cfg = table_config('C-Cube')
        cv = coarray_from_snapshots(synthesize(cfg, two_target_scene(), 0), cfg)
        doc = json.loads(io.dumps(io.coarray_to_dict(cv, cfg)))
        back, cfg2 = io.coarray_from_dict(doc)
        assert cfg2 == cfg
        assert np.array_equal(back.rx, cv.rx) and np.array_equal(back.rz, cv.rz)
        assert doc['L_s'] == 7 and doc['L_t'] == 7

    def test_wrong_artifact(self):
        with pytest.raises(ValueError):
            io.coarray_from_dict({'schema': 1, 'artifact': 'snapshots'})


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCli:

    def test_geometry(self, capsys):
        code, out, _ = run(['geometry'], capsys)
        doc = json.loads(out)
        assert code == 0 and doc['schema'] == 1
        assert doc['spatial']['values'] == [0, 2, 3, 4, 6, 9]
        assert doc['spatial']['contiguous_halfwidth'] == 7

    def test_geometry_scheme(self, capsys):
        code, out, _ = run(['geometry', '--scheme', '{"kind": "coprime", "m": 3, "n": 7}'],
                           capsys)
        assert json.loads(out)['profile']['contiguous_halfwidth'] == 23

    def test_simulate_estimate(self, tmp_path, capsys):
        art = tmp_path / 'cv.json'
        assert main(['--seed', '4', 'simulate', '--snr', '20', '--out', str(art)]) == 0
        doc = json.loads(art.read_text())
        assert doc['artifact'] == 'coarray' and doc['ordering']['s_lags'][0] == -7
        code, out, _ = run(['estimate', '--input', str(art), '-Q', '2'], capsys)
        est = json.loads(out)
        thetas = sorted(t['theta_deg'] for t in est['targets'])
        assert thetas == pytest.approx([10, 45], abs=0.5)
        assert 'eig_cond' in est['diagnostics']

    def test_simulate_deterministic(self, tmp_path):
        a, b, c = (tmp_path / n for n in ('a.json', 'b.json', 'c.json'))
        main(['simulate', '--seed', '1', '--snr', '5', '--artifact', 'snapshots', '--out', str(a)])
        main(['simulate', '--seed', '1', '--snr', '5', '--artifact', 'snapshots', '--out', str(b)])
        main(['simulate', '--seed', '2', '--snr', '5', '--artifact', 'snapshots', '--out', str(c)])
        assert a.read_text() == b.read_text() != c.read_text()

    def test_config_file(self, tmp_path, capsys):
        cfg = {'schema': 1, 'radar': {'tag': 'U-Cube'},
               'scene': {'targets': [{'theta_deg': 30, 'phi_deg': 10, 'r': 800, 'v': 50}]}}
        p = tmp_path / 'cfg.json'
        p.write_text(json.dumps(cfg))
        code, out, _ = run(['crb', '--config', str(p), '--snr', '10'], capsys)
        doc = json.loads(out)
        assert code == 0 and doc['exists'] and doc['n_params'] == 4
        assert doc['rcrb']['theta']['unit'] == 'deg'
        assert len(doc['rcrb']['r']['values']) == 1

    def test_bad_schema(self, tmp_path, capsys):
        p = tmp_path / 'cfg.json'
        p.write_text(json.dumps({'schema': 9}))
        code, _, err = run(['--config', str(p), 'geometry'], capsys)
        assert code == 2 and 'schema' in err

    def test_coupling(self, capsys):
        code, out, _ = run(['coupling'], capsys)
        rows = list(csv.reader(_io.StringIO(out)))
        assert rows[0] == ['design', 'parameter', 'value']
        assert ['U-Cube', 'reference', '0.76'] in rows
        code, out, _ = run(['coupling', '--format', 'json'], capsys)
        assert len(json.loads(out)['designs']) == 8

    def test_occupancy(self, capsys):
        code, out, _ = run(['occupancy', '--L-min', '6', '--L-max', '8'], capsys)
        rows = list(csv.reader(_io.StringIO(out)))
        assert rows[0] == ['scheme', 'L_f', 'eta'] and len(rows) == 1 + 3 * 4

    def test_montecarlo(self, tmp_path):
        a, b = tmp_path / 'a.csv', tmp_path / 'b.csv'
        argv = ['montecarlo', '--configs', 'C-Cube,U-Cube', '--snr-grid', '0,10',
                '--trials', '2', '--seed', '5']
        assert main(argv + ['--out', str(a)]) == 0
        assert main(argv + ['--out', str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        lines = a.read_text(encoding='utf-8').splitlines()
        assert len(lines) == 5 and lines[1].startswith('U-Cube,0.0,2,0,')

    def test_montecarlo_json(self, capsys):
        code, out, _ = run(['montecarlo', '--configs', 'C-Cube', '--trials', '1',
                            '--noiseless', '--format', 'json'], capsys)
        doc = json.loads(out)
        assert doc['schema'] == 1 and doc['rows'][0]['rmse_r'] < 1e-6

    def test_invalid_seed(self):
        with pytest.raises(SystemExit):
            main(['geometry', '--seed', '-1'])
