"""JSON schema (version 1) for configurations, scenes and artifacts.

Units on the wire are SI, except angles which are in degrees. Complex arrays
are flattened in C order and stored as interleaved ``[re, im, re, im, ...]``
lists together with their shape.
"""
import json

import numpy as np

from .geometry import difference_profile, scheme_from_dict
from .scene import DEFAULT_PHYSICS, RadarConfig, Target, TargetScene, table_config

SCHEMA_VERSION = 1

_PHYSICS_KEYS = ('f_b', 'delta_f', 'd', 'T', 'T_p', 'L_r', 'sigma_n2')


def check_schema(doc):
    v = doc.get('schema', SCHEMA_VERSION)
    if v != SCHEMA_VERSION:
        raise ValueError('Unsupported schema version {0}; expected {1}.'.format(v, SCHEMA_VERSION))
    return doc


def encode_complex(a):
    a = np.asarray(a, dtype=complex)
    flat = np.empty(2 * a.size)
    flat[0::2] = a.real.ravel()
    flat[1::2] = a.imag.ravel()
    return {'shape': list(a.shape), 'data': flat.tolist()}


def decode_complex(d):
    flat = np.asarray(d['data'], dtype=float)
    return (flat[0::2] + 1j * flat[1::2]).reshape(d['shape'])


def config_to_dict(config):
    d = {k: getattr(config, k) for k in _PHYSICS_KEYS}
    d['spatial'] = config.spatial.to_dict()
    d['fo'] = None if config.fo is None else config.fo.to_dict()
    d['pri'] = config.pri.to_dict()
    return d


def config_from_dict(d):
    """Builds a :class:`RadarConfig`.

    Either give explicit ``spatial``/``fo``/``pri`` schemes or a configuration
    ``tag`` with optional ``m``, ``n``, ``m_t`` and ``n_t``. Missing physical
    constants take their defaults.
    """
    d = dict(d)
    physics = dict(DEFAULT_PHYSICS)
    physics.update({k: d[k] for k in _PHYSICS_KEYS if k in d})
    if 'tag' in d:
        return table_config(d['tag'], d.get('m', 2), d.get('n', 3),
                            d.get('m_t'), d.get('n_t'), **physics)
    fo = d.get('fo')
    return RadarConfig(spatial=scheme_from_dict(d['spatial']),
                       fo=None if fo is None else scheme_from_dict(fo),
                       pri=scheme_from_dict(d['pri']), **physics)


def scene_to_dict(scene):
    return {'targets': [
        {'theta_deg': float(np.rad2deg(t.theta)), 'phi_deg': float(np.rad2deg(t.phi)),
         'r': float(t.r), 'v': float(t.v), 'sigma2': float(t.sigma2)}
        for t in scene]}


def scene_from_dict(d):
    return TargetScene(tuple(
        Target.from_degrees(t['theta_deg'], t['phi_deg'], t['r'], t['v'], t.get('sigma2', 1.0))
        for t in d.get('targets', [])))


def profile_to_dict(index_set):
    p = difference_profile(index_set)
    return {'values': list(index_set.values), 'lags': list(p.lags),
            'contiguous_halfwidth': p.contiguous_halfwidth, 'holes': list(p.holes),
            'nonneg_count': p.nonneg_count}


def snapshots_to_dict(snap, config):
    return {
        'schema': SCHEMA_VERSION,
        'artifact': 'snapshots',
        'config': config_to_dict(config),
        'sigma_n2': snap.sigma_n2,
        'ordering': {
            'row': '((fo_idx * K) + k) * P + n',
            'fo_offsets': config.fo_offsets.tolist(),
            'spatial': list(config.spatial_set.values),
            'pri': list(config.pri_set.values),
            'complex': 'interleaved re, im; C order',
        },
        'x': encode_complex(snap.x),
        'z': encode_complex(snap.z),
    }


def coarray_to_dict(cv, config):
    return {
        'schema': SCHEMA_VERSION,
        'artifact': 'coarray',
        'config': config_to_dict(config),
        'L_s': cv.L_s, 'L_f': cv.L_f, 'L_t': cv.L_t,
        'ordering': {
            'index': '(f_idx * n_t + t_idx) * n_s + s_idx',
            's_lags': cv.s_lags.tolist(),
            'f_lags': cv.f_lags.tolist(),
            't_lags': cv.t_lags.tolist(),
            'complex': 'interleaved re, im; C order',
        },
        'rx': encode_complex(cv.rx),
        'rz': encode_complex(cv.rz),
    }


def coarray_from_dict(d):
    """Returns ``(CoarrayVectors, RadarConfig)`` from a coarray artifact."""
    from .signal import CoarrayVectors
    check_schema(d)
    if d.get('artifact') != 'coarray':
        raise ValueError('Not a coarray artifact.')
    o = d['ordering']
    cv = CoarrayVectors(decode_complex(d['rx']), decode_complex(d['rz']),
                        np.asarray(o['s_lags'], dtype=np.int64),
                        np.asarray(o['f_lags'], dtype=np.int64),
                        np.asarray(o['t_lags'], dtype=np.int64))
    return cv, config_from_dict(d['config'])


def estimates_to_dict(est):
    def clean(a):
        return [None if not np.isfinite(x) else float(x) for x in a]
    return {
        'schema': SCHEMA_VERSION,
        'artifact': 'estimates',
        'targets': [
            {'theta_deg': t, 'phi_deg': p, 'r': r, 'v': v}
            for t, p, r, v in zip(clean(np.rad2deg(est.theta)), clean(np.rad2deg(est.phi)),
                                  clean(est.r), clean(est.v))],
        'diagnostics': est.diagnostics,
    }


def crb_to_dict(report):
    rc = report.rcrb()
    conv = {'theta': np.rad2deg, 'phi': np.rad2deg, 'r': lambda x: x, 'v': lambda x: x}
    units = {'theta': 'deg', 'phi': 'deg', 'r': 'm', 'v': 'm/s'}
    out = {'schema': SCHEMA_VERSION, 'artifact': 'crb', 'exists': report.exists,
           'fim_rank': report.fim_rank, 'n_params': report.n_params, 'rcrb': {}}
    for k in ('theta', 'phi', 'r', 'v'):
        vals = conv[k](rc[k])
        out['rcrb'][k] = {'unit': units[k],
                          'values': [None if not np.isfinite(x) else float(x) for x in vals]}
    return out


def dumps(doc):
    return json.dumps(doc, indent=1, sort_keys=False, allow_nan=False)


def load_json(path):
    with open(path, 'r', encoding='utf-8') as f:
        return check_schema(json.load(f))
