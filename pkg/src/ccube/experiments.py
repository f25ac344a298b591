"""Metrics and the seeded Monte Carlo harness.

Seeds are derived with :class:`numpy.random.SeedSequence` spawn keys, so every
trial owns disjoint streams that do not depend on the order of the
configuration list or on the number of workers:

* scene of trial ``j``: ``SeedSequence(master, spawn_key=(0, j))``
* signal of trial ``j`` for configuration ``c`` at SNR index ``s``:
  ``SeedSequence(master, spawn_key=(1, c, s, j))`` where ``c`` is the
  position of the tag in :data:`TAG_ORDER`.
"""
import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.optimize import linear_sum_assignment

from .ccing import CCingError, ccing
from .crb import crb, noise_for_snr
from .scene import SCENE_BOX, TargetScene, ValidationError, canonical_tag, \
    check_feasibility, display_tag, random_scene, resolution_bins, table_config
from .signal import SnapshotSet, analytic_covariance, coarray_from_snapshots, \
    extract_coarray, synthesize

TAG_ORDER = ('UUU', 'UUC', 'UCU', 'UCC', 'CUU', 'CUC', 'CCU', 'CCC',
             'U-U', 'U-C', 'C-U', 'C-C')
PARAMS = ('theta', 'phi', 'r', 'v')


def measured_snr(snap, sigma_n2):
    """Per-element SNR (dB) of noiseless snapshots for a noise power."""
    sig = np.sum(np.abs(snap.x) ** 2) + np.sum(np.abs(snap.z) ** 2)
    return 10 * np.log10(sig / (2 * snap.x.size * sigma_n2))


def apply_snr(snap, target_snr_db, seed):
    """Adds noise so that the realized per-element SNR hits a target.

    The noise power solves ``10 log10((|x|^2 + |z|^2) / (2 N L_r sigma_n2))
    = target`` on the given noiseless snapshots, where ``N`` is the number of
    rows per axis.

    Args:
        snap (~ccube.signal.SnapshotSet): Noiseless snapshots.
        target_snr_db (float): Target SNR in dB.
        seed: Seed of the noise streams.

    Returns:
        ~ccube.signal.SnapshotSet: Noisy snapshots carrying the chosen
        ``sigma_n2``.

    Raises:
        ValueError: If the snapshots carry no signal energy.
    """
    if not np.isfinite(target_snr_db):
        raise ValueError('SNR must be finite.')
    sig = np.sum(np.abs(snap.x) ** 2) + np.sum(np.abs(snap.z) ** 2)
    if sig <= 0:
        raise ValueError('SNR is undefined for a zero-signal scene.')
    sigma_n2 = sig / (2 * snap.x.size * 10 ** (target_snr_db / 10))
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    sx, sz = ss.spawn(2)
    s = np.sqrt(sigma_n2 / 2)

    def noise(seq):
        rng = np.random.default_rng(seq)
        return s * (rng.standard_normal(snap.x.shape) + 1j * rng.standard_normal(snap.x.shape))

    return SnapshotSet(snap.x + noise(sx), snap.z + noise(sz), float(sigma_n2))


def _as_params(est):
    if hasattr(est, 'params'):
        return np.asarray(est.params(), dtype=float)
    return np.atleast_2d(np.asarray(est, dtype=float))


def hit_rate(estimates, truth, tolerances):
    """Fraction of true targets matched within one tolerance per dimension.

    Matching is greedy and one-to-one: true targets are visited in order and
    each takes the closest unused estimate (normalized by the tolerances)
    that lies within every tolerance.

    Args:
        estimates: EstimateSet or Q x 4 array ``(theta, phi, r, v)``.
        truth: TargetScene or Q x 4 array.
        tolerances (dict): Per-dimension tolerances. A dimension whose
            tolerance is ``None`` is ignored.

    Returns:
        float: Hit rate in [0, 1].

    Raises:
        ValueError: If the numbers of estimates and targets differ.
    """
    e = _as_params(estimates)
    t = truth.params() if isinstance(truth, TargetScene) else _as_params(truth)
    if e.shape[0] != t.shape[0]:
        raise ValueError('Expected {0} estimates, got {1}.'.format(t.shape[0], e.shape[0]))
    if t.shape[0] == 0:
        return 1.0
    dims = [i for i, k in enumerate(PARAMS) if tolerances.get(k) is not None]
    tol = np.array([tolerances[PARAMS[i]] for i in dims], dtype=float)
    used = np.zeros(e.shape[0], dtype=bool)
    hits = 0
    for q in range(t.shape[0]):
        dist = np.abs(e[:, dims] - t[q, dims]) / tol
        ok = np.all(dist <= 1.0, axis=1) & ~used
        ok &= np.all(np.isfinite(dist), axis=1)
        if np.any(ok):
            score = np.where(ok, dist.sum(axis=1), np.inf)
            used[int(np.argmin(score))] = True
            hits += 1
    return hits / t.shape[0]


def match_estimates(estimates, truth, scales=None):
    """Reorders estimates to the truth by optimal assignment.

    The cost is the sum of absolute errors divided by ``scales`` (one per
    dimension, NaN dimensions ignored).

    Returns:
        ~numpy.ndarray: Q x 4 estimates aligned with the truth rows.
    """
    e = _as_params(estimates)
    t = truth.params() if isinstance(truth, TargetScene) else _as_params(truth)
    if e.shape != t.shape:
        raise ValueError('Estimate and truth shapes differ.')
    if scales is None:
        scales = np.array([0.1, 0.1, 500.0, 100.0])
    cost = np.abs(e[None, :, :] - t[:, None, :]) / np.asarray(scales, dtype=float)
    cost = np.nansum(cost, axis=2)
    _, col = linear_sum_assignment(cost)
    return e[col]


def rmse(trial_estimates, truth, scales=None):
    """Trial-averaged root-mean-square error per parameter.

    Every trial's estimates are matched to the truth by optimal assignment,
    then ``(1/J) sum_j sqrt(mean_q err^2)`` is evaluated per parameter.

    Args:
        trial_estimates (list): EstimateSets or Q x 4 arrays, one per trial.
        truth: TargetScene or Q x 4 array shared by all trials, or a list of
            them (one per trial).

    Returns:
        dict: RMSE per parameter name.
    """
    if len(trial_estimates) == 0:
        return {k: float('nan') for k in PARAMS}
    truths = truth if isinstance(truth, (list, tuple)) else [truth] * len(trial_estimates)
    acc = np.zeros(4)
    for est, tr in zip(trial_estimates, truths):
        t = tr.params() if isinstance(tr, TargetScene) else _as_params(tr)
        e = match_estimates(est, t, scales)
        acc += np.sqrt(np.mean((e - t) ** 2, axis=0))
    acc /= len(trial_estimates)
    return dict(zip(PARAMS, acc.tolist()))


def power_spread_scene(base_scene, sd):
    """Reassigns target powers on a linear ramp with a given standard deviation.

    The mean power of ``base_scene`` is kept; the population standard
    deviation of the new powers equals ``sd``.

    Raises:
        ValueError: If ``sd`` is negative or would make a power non-positive.
    """
    if sd < 0:
        raise ValueError('sd must be non-negative.')
    Q = len(base_scene)
    mean = float(np.mean(base_scene.sigma2))
    if sd == 0 or Q == 0:
        return base_scene.with_powers(np.full(Q, mean))
    if Q == 1:
        raise ValueError('A single target cannot have a power spread.')
    ramp = np.arange(Q, dtype=float)
    ramp = (ramp - ramp.mean()) / ramp.std()
    powers = mean + sd * ramp
    if np.any(powers <= 0):
        raise ValueError('sd={0} is too large for mean power {1}.'.format(sd, mean))
    return base_scene.with_powers(powers)


@dataclass
class ExperimentSpec:
    """Monte Carlo sweep description.

    Attributes:
        config_matrix (list): configuration tags to evaluate.
        snr_grid (list): SNR values in dB.
        trials (int): Monte Carlo trials per (tag, SNR) cell.
        master_seed (int): Root seed.
        m, n (int): Co-prime pair for every co-prime dimension.
        physics (dict): Overrides of the default physical constants.
        scene (TargetScene): Fixed scene. ``None`` draws a random scene per
            trial with ``n_targets`` targets.
        n_targets (int): Scene size for random scenes.
        power_sd (float): Standard deviation of target powers.
        min_sep_bins (float): Minimum separation of random targets in
            resolution bins of the tolerance reference.
        tolerance_reference (str): Tag whose resolution bins define the hit
            tolerances for every configuration. ``None`` uses each
            configuration's own bins.
        tolerances (dict): Explicit tolerances, overriding the bins.
        noiseless (bool): Skip noise (SNR grid then only labels rows).
        compute_crb (bool): Attach root CRBs to rows (fixed scenes only).
        workers (int): Worker processes.
    """
    config_matrix: list = field(default_factory=lambda: ['C-Cube', 'U-Cube'])
    snr_grid: list = field(default_factory=lambda: [10.0])
    trials: int = 200
    master_seed: int = 0
    m: int = 2
    n: int = 3
    physics: dict = field(default_factory=dict)
    scene: TargetScene = None
    n_targets: int = 3
    power_sd: float = 0.0
    min_sep_bins: float = 1.0
    tolerance_reference: str = 'C-Cube'
    tolerances: dict = None
    noiseless: bool = False
    compute_crb: bool = False
    workers: int = 1

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError('trials must be a positive integer.')
        if not all(np.isfinite(s) for s in self.snr_grid):
            raise ValueError('SNR values must be finite.')
        for t in self.config_matrix:
            canonical_tag(t)

    def config(self, tag):
        return table_config(tag, self.m, self.n, **self.physics)


@dataclass
class MetricsRow:
    """Aggregated metrics of one (configuration, SNR) cell.

    Angles are in radians, range in meters and velocity in m/s.
    """
    tag: str
    snr_db: float
    trials: int
    failed: int
    rmse_theta: float
    rmse_phi: float
    rmse_r: float
    rmse_v: float
    hit_rate: float
    rcrb_theta: float
    rcrb_phi: float
    rcrb_r: float
    rcrb_v: float
    note: str = ''
    wall_time: float = 0.0


CSV_COLUMNS = tuple(f.name for f in fields(MetricsRow) if f.name != 'wall_time')


@dataclass
class TrialOutcome:
    tag: str
    snr_index: int
    trial: int
    hits: int
    n_targets: int
    estimates: np.ndarray = None
    truth: np.ndarray = None
    error: str = None


def trial_scene(spec, trial, tolerances=None):
    """Scene of one trial (fixed, or random from the trial's scene seed)."""
    if spec.scene is not None:
        scene = spec.scene
    else:
        rng = np.random.default_rng(np.random.SeedSequence(spec.master_seed, spawn_key=(0, trial)))
        sep = None
        if tolerances is not None and spec.min_sep_bins > 0:
            sep = {k: (None if v is None else spec.min_sep_bins * v)
                   for k, v in tolerances.items()}
        scene = random_scene(rng, spec.n_targets, SCENE_BOX, sep)
    if spec.power_sd:
        scene = power_spread_scene(scene, spec.power_sd)
    return scene


def signal_seed(spec, tag, snr_index, trial):
    c = TAG_ORDER.index(canonical_tag(tag))
    return np.random.SeedSequence(spec.master_seed, spawn_key=(1, c, snr_index, trial))


def spec_tolerances(spec, tag):
    if spec.tolerances is not None:
        return dict(spec.tolerances)
    ref = tag if spec.tolerance_reference is None else spec.tolerance_reference
    tol = resolution_bins(spec.config(ref))
    if not spec.config(tag).has_fo:
        tol['r'] = None
    return tol


def run_trial(spec, tag, snr_index, trial):
    """Runs one trial and returns a :class:`TrialOutcome`."""
    config = spec.config(tag)
    tol = spec_tolerances(spec, tag)
    scene = trial_scene(spec, trial, spec_tolerances(spec, spec.tolerance_reference or tag))
    truth = scene.params()
    Q = len(scene)
    snr = spec.snr_grid[snr_index]
    seeds = signal_seed(spec, tag, snr_index, trial).spawn(2)
    try:
        if spec.noiseless:
            # Exact model covariance, free of finite-snapshot cross terms.
            Rx, Rz = analytic_covariance(config, scene, 0.0)
            cv = extract_coarray(Rx, Rz, config)
        else:
            snap = synthesize(config, scene, seeds[0], sigma_n2=0.0)
            cv = coarray_from_snapshots(apply_snr(snap, snr, seeds[1]), config)
        est = ccing(cv, Q, config, noisy=not spec.noiseless)
    except (CCingError, ValidationError, np.linalg.LinAlgError) as e:
        return TrialOutcome(tag, snr_index, trial, 0, Q, None, truth, type(e).__name__)
    e = est.params()
    hits = int(round(hit_rate(e, truth, tol) * Q))
    return TrialOutcome(tag, snr_index, trial, hits, Q, e, truth)


def _run_cell(args):
    spec, tag, si = args
    start = time.perf_counter()
    outcomes = [run_trial(spec, tag, si, j) for j in range(spec.trials)]
    return (tag, si, outcomes, time.perf_counter() - start)


def _skip_reason(spec, tag):
    config = spec.config(tag)
    scene = spec.scene if spec.scene is not None else None
    Q = len(scene) if scene is not None else spec.n_targets
    probe = scene if scene is not None else TargetScene(())
    rep = check_feasibility(config, probe)
    bad = []
    # Recovery conditions depend only on Q; re-evaluate them at the scene size.
    for name, val in (('C4', rep.C4), ('C5', rep.C5), ('C6', rep.C6), ('C7', rep.C7)):
        if val is None:
            continue
        if scene is None:
            val = _condition_at(config, name, Q)
        if val is False:
            bad.append(name)
    if scene is not None:
        bad += [k for k in ('C1', 'C2', 'C3', 'A3') if getattr(rep, k) is False]
    return ('infeasible: ' + ','.join(bad)) if bad else None


def _condition_at(config, name, Q):
    from .geometry import difference_profile, generate_index_set
    if name == 'C4':
        specs = [s for s in (config.spatial, config.fo) if s is not None and not s.is_uniform]
        return all(difference_profile(generate_index_set(s)).contiguous_halfwidth > (Q - 1) / 2
                   for s in specs)
    if name == 'C5':
        return difference_profile(config.pri_set).contiguous_halfwidth > (Q - 1) / 2
    if name == 'C6':
        return config.n_sensors > Q
    return config.n_pulses > Q


def _rcrb(spec, tag, snr):
    if spec.scene is None or not spec.compute_crb:
        return {k: float('nan') for k in PARAMS}
    config = spec.config(tag)
    rep = crb(config, spec.scene, sigma_n2=noise_for_snr(spec.scene, snr))
    if not rep.exists:
        return {k: float('nan') for k in PARAMS}
    out = {}
    for k in PARAMS:
        d = np.real(np.diag(getattr(rep, 'crb_' + k)))
        out[k] = float(np.sqrt(np.mean(d))) if np.all(np.isfinite(d)) else float('nan')
    return out


def aggregate(spec, tag, si, outcomes, wall_time=0.0):
    """Folds trial outcomes of one cell into a :class:`MetricsRow`."""
    ok = [o for o in outcomes if o.error is None]
    total = sum(o.n_targets for o in outcomes)
    hr = sum(o.hits for o in outcomes) / total if total else float('nan')
    err = rmse([o.estimates for o in ok], [o.truth for o in ok]) if ok else \
        {k: float('nan') for k in PARAMS}
    if not spec.config(tag).has_fo:
        err['r'] = float('nan')
    rc = _rcrb(spec, tag, spec.snr_grid[si])
    failed = len(outcomes) - len(ok)
    note = ''
    if failed:
        kinds = sorted({o.error for o in outcomes if o.error})
        note = 'failed: ' + ','.join(kinds)
    return MetricsRow(display_tag(tag), float(spec.snr_grid[si]), len(outcomes), failed,
                      err['theta'], err['phi'], err['r'], err['v'], hr,
                      rc['theta'], rc['phi'], rc['r'], rc['v'], note, wall_time)


def run_trials(spec):
    """Runs every feasible cell and returns raw outcomes.

    Returns:
        tuple: ``(outcomes, skipped)`` where ``outcomes`` maps
        ``(tag, snr_index)`` to a list of :class:`TrialOutcome` and
        ``skipped`` maps tags to reasons.
    """
    skipped = {}
    jobs = []
    for tag in spec.config_matrix:
        reason = _skip_reason(spec, tag)
        if reason:
            skipped[tag] = reason
            continue
        for si in range(len(spec.snr_grid)):
            jobs.append((spec, tag, si))
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as ex:
            results = list(ex.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    outcomes = {(tag, si): (out, wt) for tag, si, out, wt in results}
    return outcomes, skipped


def run_montecarlo(spec):
    """Runs the sweep and returns one :class:`MetricsRow` per cell.

    Rows are sorted by tag position in :data:`TAG_ORDER` and SNR. Skipped
    configurations yield a row with NaN metrics and the reason in ``note``.
    """
    outcomes, skipped = run_trials(spec)
    rows = []
    for (tag, si), (out, wt) in outcomes.items():
        rows.append(aggregate(spec, tag, si, out, wt))
    nan = float('nan')
    for tag, reason in skipped.items():
        for s in spec.snr_grid:
            rows.append(MetricsRow(display_tag(tag), float(s), 0, 0, nan, nan, nan, nan, nan,
                                   nan, nan, nan, nan, reason))
    rows.sort(key=lambda r: (TAG_ORDER.index(canonical_tag(r.tag)), r.snr_db))
    return rows


def rows_to_csv(rows, timing=False):
    """Serializes rows to CSV text. Floats use their shortest round-trip
    representation; wall time is only written when ``timing`` is set."""
    cols = CSV_COLUMNS + (('wall_time',) if timing else ())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(cols)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v
                    for v in (getattr(r, c) for c in cols)])
    return buf.getvalue()


def rows_from_csv(text):
    """Parses CSV text written by :func:`rows_to_csv`."""
    reader = csv.DictReader(io.StringIO(text))
    types = {f.name: f.type for f in fields(MetricsRow)}
    rows = []
    for rec in reader:
        kw = {}
        for k, v in rec.items():
            t = types[k]
            kw[k] = v if t in (str, 'str') else (int(v) if t in (int, 'int') else float(v))
        rows.append(MetricsRow(**kw))
    return rows
