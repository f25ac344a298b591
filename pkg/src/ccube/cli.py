"""Command-line harness.

Every subcommand reads an optional JSON config (``--config``, ``"schema": 1``)
whose sections are:

* ``radar``: a :class:`~ccube.scene.RadarConfig` (explicit schemes or a
  configuration ``tag``), defaulting to the C-Cube configuration.
* ``scene``: ``{"targets": [{"theta_deg", "phi_deg", "r", "v", "sigma2"}]}``,
  defaulting to the two-target scene.
* ``experiment``: fields of :class:`~ccube.experiments.ExperimentSpec`.
* ``coupling``: ``{"h1_abs", "h1_phase_deg"}``.
* ``occupancy``: ``{"B_over_delta_f", "L_min", "L_max", "alpha", "beta"}``.

Command-line flags override config values. Output goes to ``--out`` or
standard output.
"""
import argparse
import csv
import io as _io
import json
import sys

import numpy as np

from . import io
from .altdesigns import CouplingModel, COUPLING_DESIGNS, coupling_table, occupancy_sweep
from .ccing import CCingError, ccing
from .crb import crb, noise_for_snr
from .experiments import ExperimentSpec, apply_snr, rows_to_csv, run_montecarlo
from .geometry import generate_index_set, lag_counts, scheme_from_dict
from .scene import ValidationError, two_target_scene
from .signal import CoarrayError, coarray_from_snapshots, synthesize


def _default_config():
    return {'schema': io.SCHEMA_VERSION}


def _load_config(path):
    return _default_config() if path is None else io.load_json(path)


def _radar(cfg):
    return io.config_from_dict(cfg.get('radar', {'tag': 'C-Cube'}))


def _scene(cfg):
    return io.scene_from_dict(cfg['scene']) if 'scene' in cfg else two_target_scene()


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, 'w', encoding='utf-8', newline='') as f:
            f.write(text)


def _json_text(doc):
    return io.dumps(doc) + '\n'


def _csv_text(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _nan_to_none(x):
    return None if isinstance(x, float) and not np.isfinite(x) else x


def cmd_geometry(args, cfg):
    if args.scheme is not None:
        spec = scheme_from_dict(json.loads(args.scheme))
        doc = {'schema': io.SCHEMA_VERSION, 'scheme': spec.to_dict(),
               'profile': io.profile_to_dict(generate_index_set(spec))}
    else:
        config = _radar(cfg)
        doc = {'schema': io.SCHEMA_VERSION, 'config': io.config_to_dict(config)}
        for name, s in (('spatial', config.spatial_set), ('fo', config.fo_set),
                        ('pri', config.pri_set)):
            doc[name] = io.profile_to_dict(s)
        doc['lag_counts'] = list(lag_counts(config.spatial_set, config.fo_set, config.pri_set))
    return _json_text(doc)


def cmd_simulate(args, cfg):
    config = _radar(cfg)
    scene = _scene(cfg)
    snr = args.snr if args.snr is not None else cfg.get('snr_db')
    ss = np.random.SeedSequence(args.seed)
    s_sig, s_noise = ss.spawn(2)
    snap = synthesize(config, scene, s_sig, sigma_n2=0.0)
    if snr is not None:
        snap = apply_snr(snap, float(snr), s_noise)
    if args.artifact == 'snapshots':
        doc = io.snapshots_to_dict(snap, config)
    else:
        doc = io.coarray_to_dict(coarray_from_snapshots(snap, config), config)
    doc['scene'] = io.scene_to_dict(scene)
    return _json_text(doc)


def cmd_estimate(args, cfg):
    with open(args.input, 'r', encoding='utf-8') as f:
        cv, config = io.coarray_from_dict(json.load(f))
    est = ccing(cv, args.Q, config, noisy=not args.noiseless)
    return _json_text(io.estimates_to_dict(est))


def cmd_crb(args, cfg):
    config = _radar(cfg)
    scene = _scene(cfg)
    snr = args.snr if args.snr is not None else cfg.get('snr_db')
    sigma_n2 = noise_for_snr(scene, float(snr)) if snr is not None else None
    doc = io.crb_to_dict(crb(config, scene, sigma_n2=sigma_n2))
    doc['sigma_n2'] = config.sigma_n2 if sigma_n2 is None else sigma_n2
    return _json_text(doc)


def cmd_coupling(args, cfg):
    c = cfg.get('coupling', {})
    h1_abs = args.h1_abs if args.h1_abs is not None else c.get('h1_abs', 0.3)
    h1_deg = args.h1_phase_deg if args.h1_phase_deg is not None else c.get('h1_phase_deg', 60.0)
    model = CouplingModel(h1_abs * np.exp(1j * np.deg2rad(h1_deg)))
    table = coupling_table(model)
    if args.format == 'json':
        return _json_text({'schema': io.SCHEMA_VERSION, 'designs': [
            {'design': name, 'scheme': spec.to_dict(), 'sensors_per_axis': n,
             'aperture': ap, 'leakage': lk, 'reference': ref}
            for (name, n, ap, lk, ref), (_, spec, _) in zip(table, COUPLING_DESIGNS)]})
    rows = []
    for name, n, ap, lk, ref in table:
        rows += [(name, 'sensors_per_axis', n), (name, 'aperture', ap),
                 (name, 'leakage', lk), (name, 'reference', ref)]
    return _csv_text(('design', 'parameter', 'value'), rows)


def cmd_occupancy(args, cfg):
    c = cfg.get('occupancy', {})

    def pick(name, default):
        v = getattr(args, name)
        return c.get(name, default) if v is None else v

    ratio = pick('B_over_delta_f', 0.1)
    L = range(int(pick('L_min', 6)), int(pick('L_max', 40)) + 1)
    rows = occupancy_sweep(L, B=ratio, delta_f=1.0, alpha=int(pick('alpha', 2)),
                           beta=int(pick('beta', 3)))
    if args.format == 'json':
        return _json_text({'schema': io.SCHEMA_VERSION, 'B_over_delta_f': ratio, 'rows': [
            {'scheme': s, 'L_f': l, 'eta': _nan_to_none(e)} for s, l, e in rows]})
    return _csv_text(('scheme', 'L_f', 'eta'), rows)


def experiment_from_dict(d, seed=None):
    """Builds an :class:`ExperimentSpec` from the ``experiment`` section."""
    d = dict(d)
    if 'scene' in d:
        d['scene'] = None if d['scene'] is None else io.scene_from_dict(d['scene'])
    if seed is not None:
        d['master_seed'] = seed
    spec = ExperimentSpec(**d)
    if spec.trials < 1:
        raise ValueError('trials must be at least 1.')
    if not all(np.isfinite(s) for s in spec.snr_grid):
        raise ValueError('SNR values must be finite.')
    return spec


def cmd_montecarlo(args, cfg):
    d = dict(cfg.get('experiment', {}))
    if 'scene' not in d:
        d['scene'] = cfg.get('scene', io.scene_to_dict(two_target_scene()))
    if args.random_scene:
        d['scene'] = None
    if args.configs is not None:
        d['config_matrix'] = [t.strip() for t in args.configs.split(',') if t.strip()]
    if args.snr_grid is not None:
        d['snr_grid'] = [float(s) for s in args.snr_grid.split(',')]
    for name in ('trials', 'workers', 'n_targets', 'power_sd'):
        v = getattr(args, name)
        if v is not None:
            d[name] = v
    if args.crb:
        d['compute_crb'] = True
    if args.noiseless:
        d['noiseless'] = True
    spec = experiment_from_dict(d, args.seed)
    rows = run_montecarlo(spec)
    if args.format == 'json':
        return _json_text({'schema': io.SCHEMA_VERSION, 'rows': [
            {k: _nan_to_none(v) for k, v in r.__dict__.items()
             if args.timing or k != 'wall_time'} for r in rows]})
    return rows_to_csv(rows, timing=args.timing)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=argparse.SUPPRESS,
                        help='JSON config file (schema 1).')
    common.add_argument('--seed', type=int, default=argparse.SUPPRESS,
                        help='Master seed (non-negative integer).')
    common.add_argument('--out', default=argparse.SUPPRESS,
                        help='Output path (default: standard output).')
    common.add_argument('--format', choices=('csv', 'json'), default=argparse.SUPPRESS,
                        help='Output format of tabular subcommands.')

    p = argparse.ArgumentParser(prog='ccube', parents=[common],
                                description='Co-prime L-shaped FDA toolkit.')
    sub = p.add_subparsers(dest='command', required=True)

    g = sub.add_parser('geometry', parents=[common], help='Index sets and lag profiles.')
    g.add_argument('--scheme', help='A single scheme as JSON, e.g. \'{"kind": "coprime", '
                                    '"m": 3, "n": 7}\'.')
    g.set_defaults(func=cmd_geometry)

    s = sub.add_parser('simulate', parents=[common], help='Synthesize snapshots or coarray.')
    s.add_argument('--snr', type=float, help='Per-element SNR in dB (default: noiseless).')
    s.add_argument('--artifact', choices=('coarray', 'snapshots'), default='coarray')
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser('estimate', parents=[common], help='Run the estimator on a coarray.')
    e.add_argument('--input', required=True, help='Coarray artifact from "simulate".')
    e.add_argument('-Q', type=int, required=True, help='Number of targets.')
    e.add_argument('--noiseless', action='store_true',
                   help='Use the tight pseudo-inverse tolerance.')
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser('crb', parents=[common], help='Cramer-Rao bound of a scene.')
    c.add_argument('--snr', type=float, help='Per-target SNR in dB fixing the noise power.')
    c.set_defaults(func=cmd_crb)

    k = sub.add_parser('coupling', parents=[common], help='Coupling leakage of alternatives.')
    k.add_argument('--h1-abs', type=float)
    k.add_argument('--h1-phase-deg', type=float)
    k.set_defaults(func=cmd_coupling)

    o = sub.add_parser('occupancy', parents=[common], help='Spectrum occupancy sweep.')
    o.add_argument('--B-over-delta-f', dest='B_over_delta_f', type=float)
    o.add_argument('--L-min', dest='L_min', type=int)
    o.add_argument('--L-max', dest='L_max', type=int)
    o.add_argument('--alpha', type=int)
    o.add_argument('--beta', type=int)
    o.set_defaults(func=cmd_occupancy)

    m = sub.add_parser('montecarlo', parents=[common], help='Seeded Monte Carlo sweep.')
    m.add_argument('--configs', help='Comma-separated configuration tags, e.g. "C-Cube,U-Cube".')
    m.add_argument('--snr-grid', help='Comma-separated SNR values in dB.')
    m.add_argument('--trials', type=int)
    m.add_argument('--workers', type=int)
    m.add_argument('--n-targets', dest='n_targets', type=int)
    m.add_argument('--power-sd', dest='power_sd', type=float)
    m.add_argument('--random-scene', action='store_true',
                   help='Draw a random scene per trial instead of the fixed one.')
    m.add_argument('--crb', action='store_true', help='Add RCRB columns.')
    m.add_argument('--noiseless', action='store_true')
    m.add_argument('--timing', action='store_true', help='Add the wall_time column.')
    m.set_defaults(func=cmd_montecarlo)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (('config', None), ('seed', None), ('out', None), ('format', None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    if args.seed is not None and args.seed < 0:
        parser.error('--seed must be non-negative.')
    if args.format is None:
        args.format = 'json' if args.command in ('geometry', 'simulate', 'estimate', 'crb') \
            else 'csv'
    try:
        cfg = _load_config(args.config)
        if args.seed is None:
            args.seed = int(cfg.get('seed', 0))
        text = args.func(args, cfg)
    except (ValueError, ValidationError, CCingError, CoarrayError, OSError) as e:
        sys.stderr.write('ccube {0}: error: {1}\n'.format(args.command, e))
        return 2
    _emit(text, args.out)
    return 0


if __name__ == '__main__':
    sys.exit(main())
