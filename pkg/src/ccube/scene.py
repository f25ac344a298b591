"""Radar configuration, target scenes and recovery-guarantee bookkeeping."""
from dataclasses import dataclass, field, replace
from math import isqrt

import numpy as np

from .geometry import Coprime, Uniform, SchemeSpec, generate_index_set, \
    difference_profile

C = 3e8  # Propagation speed used throughout (m/s).


class ValidationError(ValueError):
    """Raised when a configuration or scene violates the model assumptions."""
    pass


@dataclass(frozen=True)
class RadarConfig:
    """Physical constants plus one index scheme per dimension.

    Attributes:
        f_b (float): Carrier frequency (Hz).
        delta_f (float): Fundamental frequency offset (Hz).
        d (float): Fundamental sensor spacing (m).
        T (float): Fundamental pulse repetition interval (s).
        T_p (float): Pulse width (s).
        L_r (int): Number of fast-time snapshots per pulse.
        sigma_n2 (float): Noise power.
        spatial (SchemeSpec): Sensor scheme along each axis.
        fo (SchemeSpec or None): Frequency-offset scheme. ``None`` means a
            non-FDA array, in which every sensor transmits the carrier.
        pri (SchemeSpec): Pulsing scheme.
    """
    f_b: float
    delta_f: float
    d: float
    T: float
    T_p: float
    L_r: int
    sigma_n2: float
    spatial: SchemeSpec
    fo: SchemeSpec
    pri: SchemeSpec

    def __post_init__(self):
        for name in ('f_b', 'delta_f', 'd', 'T', 'T_p'):
            if not getattr(self, name) > 0:
                raise ValidationError('{0} must be positive.'.format(name))
        if int(self.L_r) != self.L_r or self.L_r < 1:
            raise ValidationError('L_r must be a positive integer.')
        if self.sigma_n2 < 0:
            raise ValidationError('sigma_n2 cannot be negative.')
        if self.fo is not None and len(self.fo_set) != len(self.spatial_set):
            raise ValidationError(
                'Each sensor owns one frequency offset: got {0} sensors and {1} offsets.'
                .format(len(self.spatial_set), len(self.fo_set)))

    @property
    def wavelength(self):
        return C / self.f_b

    @property
    def has_fo(self):
        return self.fo is not None

    @property
    def spatial_set(self):
        return generate_index_set(self.spatial)

    @property
    def fo_set(self):
        """Non-negative FO index set, or ``{0}`` for non-FDA arrays."""
        if self.fo is None:
            return generate_index_set(Uniform(1))
        return generate_index_set(self.fo)

    @property
    def pri_set(self):
        return generate_index_set(self.pri)

    @property
    def n_sensors(self):
        return len(self.spatial_set)

    @property
    def n_pulses(self):
        return len(self.pri_set)

    @property
    def n_fo(self):
        """Number of signed frequency offsets, ``2P - 1`` (1 without FO)."""
        return 2 * len(self.fo_set) - 1

    @property
    def fo_offsets(self):
        """Signed FO multipliers ordered from ``-xi_{P-1}`` to ``+xi_{P-1}``.

        The FO applied at row block ``i`` of the snapshot matrix is
        ``fo_offsets[i] * delta_f``. Together with the ``exp(-j 4 pi f r / c)``
        phase law this orders ``c(r)`` from ``exp(+j4 pi delta_f r xi/c)`` down
        to ``exp(-j4 pi delta_f r xi / c)``.
        """
        xi = np.array(self.fo_set.values, dtype=float)
        return np.concatenate((-xi[:0:-1], xi))

    @property
    def n_rows(self):
        return self.n_fo * self.n_pulses * self.n_sensors

    def with_(self, **kwargs):
        return replace(self, **kwargs)


@dataclass(frozen=True)
class Target:
    """A point target.

    Attributes:
        theta (float): Elevation in radians.
        phi (float): Azimuth in radians.
        r (float): Range in meters.
        v (float): Radial velocity in m/s.
        sigma2 (float): Reflectivity power.
    """
    theta: float
    phi: float
    r: float
    v: float
    sigma2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.theta < np.pi / 2:
            raise ValidationError('Elevation must lie in (0, pi/2). Got {0}.'.format(self.theta))
        if not -np.pi / 2 < self.phi < np.pi / 2:
            raise ValidationError('Azimuth must lie in (-pi/2, pi/2). Got {0}.'.format(self.phi))
        if self.r < 0 or self.v < 0:
            raise ValidationError('Range and velocity must be non-negative.')
        if not self.sigma2 > 0:
            raise ValidationError('Reflectivity power must be positive.')

    @classmethod
    def from_degrees(cls, theta, phi, r, v, sigma2=1.0):
        return cls(np.deg2rad(theta), np.deg2rad(phi), r, v, sigma2)


@dataclass(frozen=True)
class TargetScene:
    """An ordered collection of targets."""
    targets: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'targets', tuple(self.targets))

    def __len__(self):
        return len(self.targets)

    def __iter__(self):
        return iter(self.targets)

    def _col(self, name):
        return np.array([getattr(t, name) for t in self.targets], dtype=float)

    @property
    def theta(self):
        return self._col('theta')

    @property
    def phi(self):
        return self._col('phi')

    @property
    def r(self):
        return self._col('r')

    @property
    def v(self):
        return self._col('v')

    @property
    def sigma2(self):
        return self._col('sigma2')

    @property
    def u(self):
        """Direction cosines ``sin(theta) sin(phi)`` seen by the x-axis."""
        return np.sin(self.theta) * np.sin(self.phi)

    @property
    def w(self):
        """Direction cosines ``sin(theta) cos(phi)`` seen by the z-axis."""
        return np.sin(self.theta) * np.cos(self.phi)

    def params(self):
        """Returns a Q x 4 array of ``(theta, phi, r, v)``."""
        return np.column_stack((self.theta, self.phi, self.r, self.v)) \
            if len(self) > 0 else np.zeros((0, 4))

    def permuted(self, order):
        return TargetScene(tuple(self.targets[i] for i in order))

    def with_powers(self, powers):
        powers = np.asarray(powers, dtype=float)
        if powers.shape != (len(self),):
            raise ValueError('Expected {0} powers.'.format(len(self)))
        return TargetScene(tuple(replace(t, sigma2=float(p))
                                 for t, p in zip(self.targets, powers)))

    @classmethod
    def from_array(cls, params, sigma2=None):
        params = np.atleast_2d(np.asarray(params, dtype=float))
        if sigma2 is None:
            sigma2 = np.ones(params.shape[0])
        return cls(tuple(Target(*p, s) for p, s in zip(params, sigma2)))


def unambiguous_limits(config):
    """Returns ``(R_max, v_max)`` with ``R_max = cT/2`` and
    ``v_max = c / (2 f_b T)``."""
    return C * config.T / 2, C / (2 * config.f_b * config.T)


# Configuration tags, mapped to (array, FO, PRI) letters. '-' marks a
# non-FDA array.
CONFIG_TAGS = {
    'U-U': 'U-U', 'C-U': 'C-U', 'U-C': 'U-C', 'C-C': 'C-C',
    'U-Cube': 'UUU', 'UUU': 'UUU', 'UUC': 'UUC', 'UCU': 'UCU', 'UCC': 'UCC',
    'CUU': 'CUU', 'CUC': 'CUC', 'CCU': 'CCU', 'C-Cube': 'CCC', 'CCC': 'CCC',
}


def canonical_tag(tag):
    """Maps a configuration tag to its three-letter form.

    Raises:
        ValueError: If the tag is not one of the twelve configuration rows.
    """
    try:
        return CONFIG_TAGS[tag]
    except KeyError:
        raise ValueError('Unknown configuration tag "{0}".'.format(tag))


def display_tag(tag):
    t = canonical_tag(tag)
    return {'UUU': 'U-Cube', 'CCC': 'C-Cube'}.get(t, t)


def _sparse_bound(Q):
    # Smallest integer n with n > 2 sqrt(Q+1) - 2, i.e. (n + 2)^2 > 4(Q + 1).
    n = 2 * isqrt(Q + 1) - 2
    while (n + 2) ** 2 <= 4 * (Q + 1):
        n += 1
    return n


def min_resources(tag, Q):
    """Minimum number of sensors per axis and pulses for a configuration row.

    A uniform array or a uniform FO forces ``P_s > Q``; otherwise the sensor
    count only needs ``P_s > 2 sqrt(Q+1) - 2``. The pulse count follows the
    same rule with the PRI scheme alone.

    Args:
        tag (str): configuration tag, e.g. ``'C-Cube'`` or ``'CCU'``.
        Q (int): Number of targets (at least 1).

    Returns:
        tuple: ``(min_sensors, min_pulses)``.
    """
    t = canonical_tag(tag)
    if int(Q) != Q or Q < 1:
        raise ValueError('Q must be a positive integer.')
    array, fo, pri = t
    sensors = Q + 1 if 'U' in (array, fo) else _sparse_bound(Q)
    pulses = Q + 1 if pri == 'U' else _sparse_bound(Q)
    return sensors, pulses


def table_config(tag, m=2, n=3, m_t=None, n_t=None, **kwargs):
    """Builds the radar configuration of a tagged row.

    Co-prime dimensions use ``Coprime(m, n)`` (``Coprime(m_t, n_t)`` for the
    pulses). Uniform dimensions use as many elements as the co-prime ones,
    ``n + 2m - 1``. Remaining keyword arguments override the default
    physical constants.
    """
    t = canonical_tag(tag)
    m_t = m if m_t is None else m_t
    n_t = n if n_t is None else n_t
    p_s = n + 2 * m - 1
    k = n_t + 2 * m_t - 1

    def pick(letter, mm, nn, count):
        return Uniform(count) if letter == 'U' else Coprime(mm, nn)

    params = dict(DEFAULT_PHYSICS)
    params.update(kwargs)
    return RadarConfig(
        spatial=pick(t[0], m, n, p_s),
        fo=None if t[1] == '-' else pick(t[1], m, n, p_s),
        pri=pick(t[2], m_t, n_t, k),
        **params
    )


DEFAULT_PHYSICS = dict(
    f_b=1e9,
    delta_f=20e3,
    d=C / (2 * 1e9),
    T=0.05e-3,
    T_p=0.5e-6,
    L_r=100,
    sigma_n2=0.0,
)

# Two-target scene of the statistical experiments.
def two_target_scene():
    return TargetScene((
        Target.from_degrees(10, 5, 1000, 100),
        Target.from_degrees(45, 45, 3000, 250),
    ))


SCENE_BOX = dict(theta=(0.0, np.pi / 2), phi=(-np.deg2rad(70), np.deg2rad(70)),
                 r=(100.0, 5000.0), v=(10.0, 400.0))


def dimension_windows(config, full=False):
    """Lag windows used by the coarray estimator.

    Sparse dimensions use their contiguous coarray ``[-L, L]``. Uniform
    dimensions keep the physical manifold, i.e. the one-sided window
    ``[0, P - 1]``, unless ``full`` is set. Non-FDA arrays have the single
    frequency lag 0.

    Returns:
        tuple: Three integer arrays of lags for space, frequency and time.
    """
    def window(spec, index_set):
        if spec is None:
            return np.zeros(1, dtype=np.int64)
        if isinstance(spec, Uniform):
            p = len(index_set)
            return np.arange(-(p - 1) if full else 0, p, dtype=np.int64)
        L = difference_profile(index_set).contiguous_halfwidth
        return np.arange(-L, L + 1, dtype=np.int64)

    return (window(config.spatial, config.spatial_set),
            window(config.fo, config.fo_set),
            window(config.pri, config.pri_set))


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the recovery-condition checks.

    Conditions that do not apply to a configuration are ``None``.
    """
    C1: bool
    C2: bool
    C3: bool
    C4: object
    C5: object
    C6: object
    C7: object
    A3: bool
    L_s: int
    L_t: int
    R_max: float
    v_max: float
    max_targets: int
    min_sensors: object
    min_pulses: object
    binding: tuple = ()

    @property
    def feasible(self):
        return all(c is not False for c in
                   (self.C1, self.C2, self.C3, self.C4, self.C5, self.C6, self.C7, self.A3))

    @property
    def violations(self):
        return tuple(k for k in ('C1', 'C2', 'C3', 'C4', 'C5', 'C6', 'C7', 'A3')
                     if getattr(self, k) is False)


def config_tag(config):
    """Infers the configuration tag of a configuration (``None`` if the schemes are
    neither uniform nor co-prime)."""
    def letter(spec):
        if spec is None:
            return '-'
        if isinstance(spec, Uniform):
            return 'U'
        if isinstance(spec, Coprime):
            return 'C'
        return None
    letters = [letter(config.spatial), letter(config.fo), letter(config.pri)]
    if None in letters:
        return None
    return ''.join(letters)


def _distinct(values, tol=1e-12):
    v = np.sort(np.asarray(values))
    return bool(np.all(np.diff(v) > tol))


def check_feasibility(config, scene):
    """Evaluates the recovery conditions for a configuration and scene.

    C1 to C3 cover the spacing, Doppler and range ambiguity limits. C4 and C5
    require the contiguous spatial/FO and time coarrays to be wide enough for
    the scene, and C6 and C7 are their physical-manifold counterparts for
    uniform dimensions. A3 requires distinct direction cosines.

    Returns:
        FeasibilityReport: The report. Never raises on violations.
    """
    Q = len(scene)
    R_max, v_max = unambiguous_limits(config)
    c1 = config.d <= C / (2 * config.f_b) * (1 + 1e-12)
    c2 = bool(np.all(scene.v <= v_max)) if Q else True
    if config.has_fo:
        c3 = config.delta_f <= C / (2 * R_max) * (1 + 1e-12) and \
            (bool(np.all(scene.r < R_max)) if Q else True)
    else:
        c3 = True

    L_s = difference_profile(config.spatial_set).contiguous_halfwidth
    L_t = difference_profile(config.pri_set).contiguous_halfwidth
    c4 = c5 = c6 = c7 = None
    sparse_sf = [s for s in (config.spatial, config.fo)
                 if s is not None and not s.is_uniform]
    if sparse_sf:
        c4 = all(difference_profile(generate_index_set(s)).contiguous_halfwidth > (Q - 1) / 2
                 for s in sparse_sf)
    if config.spatial.is_uniform or (config.fo is not None and config.fo.is_uniform):
        c6 = config.n_sensors > Q
    if config.pri.is_uniform:
        c7 = config.n_pulses > Q
    else:
        c5 = L_t > (Q - 1) / 2
    a3 = Q < 2 or (_distinct(scene.u) and _distinct(scene.w))

    tag = config_tag(config)
    if tag is not None and Q >= 1:
        min_s, min_p = min_resources(tag, Q)
    else:
        min_s = min_p = None
    binding = tuple(k for k, v in (('C4', c4), ('C5', c5), ('C6', c6), ('C7', c7))
                    if v is not None)
    return FeasibilityReport(
        C1=bool(c1), C2=bool(c2), C3=bool(c3), C4=c4, C5=c5, C6=c6, C7=c7, A3=bool(a3),
        L_s=L_s, L_t=L_t, R_max=R_max, v_max=v_max,
        max_targets=max_targets(config, True),
        min_sensors=min_s, min_pulses=min_p, binding=binding
    )


def check_assumptions(config, scene, dv_dt=None, dtheta_dt=None, dphi_dt=None,
                      margin=0.1, C0=1.0):
    """Evaluates the constant-delay, constant-Doppler and slow-tangential
    approximations.

    Each ``a << b`` is tested as ``a <= margin * b``. Drift rates default to
    zero, so static scenes always pass.

    Returns:
        dict: ``{'A5': bool, 'A6': bool, 'A7': bool}``.
    """
    Q = len(scene)
    zeros = np.zeros(Q)
    dv_dt = zeros if dv_dt is None else np.abs(np.asarray(dv_dt, dtype=float))
    dtheta_dt = zeros if dtheta_dt is None else np.abs(np.asarray(dtheta_dt, dtype=float))
    dphi_dt = zeros if dphi_dt is None else np.abs(np.asarray(dphi_dt, dtype=float))
    cpi = config.pri_set.aperture * config.T
    B = 1.0 / config.T_p
    a5 = True if cpi == 0 else bool(np.all(scene.v <= margin * C / (2 * B * cpi)))
    a6 = True if cpi == 0 else bool(np.all(dv_dt <= margin * C / (2 * config.f_b * cpi ** 2)))
    span = config.spatial_set.aperture
    if cpi == 0 or span == 0:
        a7 = True
    else:
        bound = margin * 2 * C0 / (span * cpi)
        a7 = bool(np.all(dtheta_dt <= bound) and np.all(dphi_dt <= bound))
    return {'A5': a5, 'A6': a6, 'A7': a7}


def max_targets(config, all_distinct=True):
    """Degrees of freedom of a configuration.

    With distinct parameters the capacity is the smallest per-dimension
    capacity, ``2L`` for a sparse dimension and the element count ``P`` for a
    uniform one. Otherwise the per-dimension capacities multiply (space
    counts twice, once per axis), which gives ``16 L_s^3 L_t`` for C-Cube.
    """
    def cap(spec, index_set):
        if spec.is_uniform:
            return len(index_set)
        return 2 * difference_profile(index_set).contiguous_halfwidth

    caps_s = cap(config.spatial, config.spatial_set)
    caps_t = cap(config.pri, config.pri_set)
    caps_f = cap(config.fo, config.fo_set) if config.fo is not None else None
    if all_distinct:
        return min(c for c in (caps_s, caps_f, caps_t) if c is not None)
    total = caps_s * caps_s * caps_t
    if caps_f is not None:
        total *= caps_f
    return total


def validate_scene(config, scene):
    """Raises :class:`ValidationError` when a scene cannot be synthesized
    unambiguously (C1 to C3 or A3 violated)."""
    rep = check_feasibility(config, scene)
    bad = [k for k in ('C1', 'C2', 'C3', 'A3') if getattr(rep, k) is False]
    if bad:
        raise ValidationError('Scene violates {0}.'.format(', '.join(bad)))
    return rep


def resolution_bins(config):
    """One coarray-resolution bin per dimension.

    Returns:
        dict: ``theta`` and ``phi`` in radians, ``r`` in meters and ``v`` in
        m/s. The range bin is ``None`` for non-FDA arrays.
    """
    s_lags, f_lags, t_lags = dimension_windows(config, full=True)
    L_s = int(s_lags.max())
    L_t = int(t_lags.max())
    ang = config.wavelength / (2 * L_s * config.d)
    out = {'theta': ang, 'phi': ang,
           'v': config.wavelength / (2 * (2 * L_t + 1) * config.T)}
    if config.has_fo:
        L_f = int(f_lags.max())
        out['r'] = C / (2 * (2 * L_f + 1) * config.delta_f)
    else:
        out['r'] = None
    return out


def random_scene(rng, Q, box=None, min_sep=None, sigma2=1.0, max_tries=10000):
    """Draws a random scene uniformly inside a parameter box.

    Pairs of targets are kept at least ``min_sep[k]`` apart in every
    dimension ``k``. A separation that cannot fit ``Q`` targets in the box is
    reduced to ``span / Q``. Direction cosines are also kept distinct.

    Args:
        rng (~numpy.random.Generator): Random generator.
        Q (int): Number of targets.
        box (dict): ``{'theta': (lo, hi), 'phi': ..., 'r': ..., 'v': ...}``.
            Defaults to :data:`SCENE_BOX`.
        min_sep (dict): Minimum separation per dimension. Defaults to zero.
        sigma2 (float): Common reflectivity power.

    Returns:
        TargetScene: The scene.
    """
    box = dict(SCENE_BOX if box is None else box)
    keys = ('theta', 'phi', 'r', 'v')
    sep = np.zeros(4)
    if min_sep:
        for i, k in enumerate(keys):
            span = box[k][1] - box[k][0]
            sep[i] = min(min_sep.get(k) or 0.0, span / max(Q, 1))
    lo = np.array([box[k][0] for k in keys])
    hi = np.array([box[k][1] for k in keys])
    # Open box: keep strictly inside the elevation limits.
    eps = 1e-6
    lo[0] = max(lo[0], eps)
    hi[0] = min(hi[0], np.pi / 2 - eps)
    for _ in range(max_tries):
        chosen = []
        for _ in range(200 * max(Q, 1)):
            cand = lo + (hi - lo) * rng.random(4)
            ok = True
            for p in chosen:
                if np.any(np.abs(cand - p) < sep):
                    ok = False
                    break
                uc = np.sin(cand[0]) * np.sin(cand[1]), np.sin(cand[0]) * np.cos(cand[1])
                up = np.sin(p[0]) * np.sin(p[1]), np.sin(p[0]) * np.cos(p[1])
                if abs(uc[0] - up[0]) < 1e-3 or abs(uc[1] - up[1]) < 1e-3:
                    ok = False
                    break
            if ok:
                chosen.append(cand)
                if len(chosen) == Q:
                    break
        if len(chosen) == Q:
            return TargetScene.from_array(np.array(chosen).reshape(Q, 4),
                                          np.full(Q, float(sigma2)))
    raise ValidationError('Could not place {0} separated targets in the box.'.format(Q))
