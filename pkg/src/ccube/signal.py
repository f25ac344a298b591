"""Received-signal synthesis and coarray extraction for the L-shaped FDA.

Snapshot rows are ordered as ``((fo_idx * K) + k) * P + n``: FO block major,
then pulse, then receive sensor. FO block ``i`` carries the signed offset
multiplier ``config.fo_offsets[i]``.
"""
from dataclasses import dataclass

import numpy as np

from .scene import C, dimension_windows, validate_scene


class CoarrayError(RuntimeError):
    """Raised when a requested lag cannot be realized by the physical sets."""
    pass


@dataclass(frozen=True)
class SteeringVectors:
    a_x: np.ndarray
    a_z: np.ndarray
    c: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class SnapshotSet:
    """Snapshots of both axes.

    Attributes:
        x (~numpy.ndarray): ``n_rows x L_r`` x-axis data.
        z (~numpy.ndarray): ``n_rows x L_r`` z-axis data.
        sigma_n2 (float): Noise power the data were generated with.
    """
    x: np.ndarray
    z: np.ndarray
    sigma_n2: float = 0.0

    @property
    def n_rows(self):
        return self.x.shape[0]

    @property
    def L_r(self):
        return self.x.shape[1]


@dataclass(frozen=True)
class CoarrayVectors:
    """Contiguous space-frequency-time coarray observations.

    Entry ``(f, t, s)`` sits at ``(f * n_t + t) * n_s + s`` where the three
    indices address ``f_lags``, ``t_lags`` and ``s_lags``.

    Attributes:
        rx (~numpy.ndarray): Coarray vector of the x-axis.
        rz (~numpy.ndarray): Coarray vector of the z-axis.
        s_lags (~numpy.ndarray): Spatial lags (units of d).
        f_lags (~numpy.ndarray): Frequency lags (units of delta_f).
        t_lags (~numpy.ndarray): Time lags (units of T).
    """
    rx: np.ndarray
    rz: np.ndarray
    s_lags: np.ndarray
    f_lags: np.ndarray
    t_lags: np.ndarray

    def __post_init__(self):
        n = self.s_lags.size * self.f_lags.size * self.t_lags.size
        if self.rx.shape != (n,) or self.rz.shape != (n,):
            raise ValueError('Coarray vectors must have length {0}.'.format(n))

    @property
    def shape(self):
        return self.f_lags.size, self.t_lags.size, self.s_lags.size

    @property
    def L_s(self):
        return int(self.s_lags.max())

    @property
    def L_f(self):
        return int(self.f_lags.max())

    @property
    def L_t(self):
        return int(self.t_lags.max())


def _kappa(config):
    # Spatial phase per unit index and unit direction cosine; pi when d = lambda/2.
    return 2 * np.pi * config.d / config.wavelength


def steering(config, target):
    """Steering vectors of one target.

    Args:
        config (~ccube.scene.RadarConfig): Radar configuration.
        target (~ccube.scene.Target): The target.

    Returns:
        SteeringVectors: ``a_x``, ``a_z`` (length P), ``c`` (length 2P-1) and
        ``b`` (length K).
    """
    xi = config.spatial_set.as_array()
    eta = config.pri_set.as_array()
    k = _kappa(config)
    st = np.sin(target.theta)
    a_x = np.exp(-1j * k * xi * st * np.sin(target.phi))
    a_z = np.exp(-1j * k * xi * st * np.cos(target.phi))
    c = np.exp(-4j * np.pi * config.delta_f * target.r * config.fo_offsets / C)
    b = np.exp(-4j * np.pi * target.v * config.T * eta / config.wavelength)
    return SteeringVectors(a_x, a_z, c, b)


def manifold(config, scene):
    """Physical manifold matrices ``(M_x, M_z)``, each ``n_rows x Q``, whose
    columns are ``kron(c, b, a)``."""
    n = config.n_rows
    mx = np.empty((n, len(scene)), dtype=complex)
    mz = np.empty((n, len(scene)), dtype=complex)
    for q, t in enumerate(scene):
        sv = steering(config, t)
        cb = np.kron(sv.c, sv.b)
        mx[:, q] = np.kron(cb, sv.a_x)
        mz[:, q] = np.kron(cb, sv.a_z)
    return mx, mz


def _crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def synthesize(config, scene, seed, sigma_n2=None):
    """Synthesizes snapshots of both axes.

    Scattering coefficients are shared by both axes and drawn independently
    for every snapshot. The two axes receive independent noise.

    Args:
        config (~ccube.scene.RadarConfig): Radar configuration.
        scene (~ccube.scene.TargetScene): Targets.
        seed: Anything accepted by :class:`numpy.random.SeedSequence`.
        sigma_n2 (float): Overrides ``config.sigma_n2``.

    Returns:
        SnapshotSet: The snapshots.
    """
    validate_scene(config, scene)
    sigma_n2 = config.sigma_n2 if sigma_n2 is None else float(sigma_n2)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rho_ss, nx_ss, nz_ss = ss.spawn(3)
    L_r = config.L_r
    n = config.n_rows
    if len(scene) > 0:
        rho = _crandn(np.random.default_rng(rho_ss), (len(scene), L_r))
        rho *= np.sqrt(scene.sigma2)[:, None]
        mx, mz = manifold(config, scene)
        x = mx @ rho
        z = mz @ rho
    else:
        x = np.zeros((n, L_r), dtype=complex)
        z = np.zeros((n, L_r), dtype=complex)
    if sigma_n2 > 0:
        s = np.sqrt(sigma_n2)
        x = x + s * _crandn(np.random.default_rng(nx_ss), (n, L_r))
        z = z + s * _crandn(np.random.default_rng(nz_ss), (n, L_r))
    return SnapshotSet(x, z, sigma_n2)


def analytic_covariance(config, scene, sigma_n2=None):
    """Model covariances ``(R_x, R_z)`` of both axes."""
    sigma_n2 = config.sigma_n2 if sigma_n2 is None else float(sigma_n2)
    n = config.n_rows
    noise = sigma_n2 * np.eye(n)
    if len(scene) == 0:
        return noise.astype(complex), noise.astype(complex)
    mx, mz = manifold(config, scene)
    p = scene.sigma2
    return (mx * p) @ mx.conj().T + noise, (mz * p) @ mz.conj().T + noise


def sample_covariance(snap):
    """Sample covariances ``(1/L_r) Y Y^H`` of both axes."""
    L_r = snap.L_r
    rx = snap.x @ snap.x.conj().T / L_r
    rz = snap.z @ snap.z.conj().T / L_r
    # Remove round-off asymmetry.
    return (rx + rx.conj().T) / 2, (rz + rz.conj().T) / 2


def _selection(positions, lags, name):
    # S[w, i, j] = 1 / count(w) when positions[j] - positions[i] == lags[w].
    diff = positions[None, :] - positions[:, None]
    S = (diff[None, :, :] == lags[:, None, None]).astype(float)
    counts = S.sum(axis=(1, 2))
    if np.any(counts == 0):
        missing = lags[counts == 0]
        raise CoarrayError('{0} lags {1} are not realized by the physical set.'
                           .format(name, missing.tolist()))
    return S / counts[:, None, None]


def extract_coarray(R_x, R_z, config, sigma_n2_known=0.0, windows=None, full=False):
    """Averages covariance entries into contiguous coarray vectors.

    Each lag triple collects every covariance entry ``R[i, j]`` whose column
    index minus row index realizes it in all three dimensions. Frequency lags
    only use the non-negative FO blocks. The known noise power is removed from
    the all-zero lag.

    Args:
        R_x, R_z (~numpy.ndarray): Covariance matrices of both axes.
        config (~ccube.scene.RadarConfig): Radar configuration.
        sigma_n2_known (float): Noise power to subtract.
        windows (tuple): Optional ``(s_lags, f_lags, t_lags)``. Defaults to
            :func:`~ccube.scene.dimension_windows`.
        full (bool): Use two-sided windows for uniform dimensions.

    Returns:
        CoarrayVectors: The coarray observations.
    """
    n = config.n_rows
    if R_x.shape != (n, n) or R_z.shape != (n, n):
        raise ValueError('Covariance matrices must be {0} x {0}.'.format(n))
    if windows is None:
        windows = dimension_windows(config, full=full)
    s_lags, f_lags, t_lags = (np.asarray(w, dtype=np.int64) for w in windows)
    xi = config.spatial_set.as_array()
    eta = config.pri_set.as_array()
    fo = config.fo_set.as_array()
    n_s, n_t, P_f = xi.size, eta.size, fo.size
    S_s = _selection(xi, s_lags, 'Spatial')
    S_t = _selection(eta, t_lags, 'Time')
    S_f = _selection(fo, f_lags, 'Frequency')
    # Non-negative FO blocks are the last P_f blocks of the signed ordering.
    start = (P_f - 1) * n_t * n_s
    shape6 = (P_f, n_t, n_s, P_f, n_t, n_s)
    zero = (int(np.flatnonzero(f_lags == 0)[0]) if np.any(f_lags == 0) else None,
            int(np.flatnonzero(t_lags == 0)[0]) if np.any(t_lags == 0) else None,
            int(np.flatnonzero(s_lags == 0)[0]) if np.any(s_lags == 0) else None)
    out = []
    for R in (R_x, R_z):
        Rn = R[start:, start:].reshape(shape6)
        r = np.einsum('fab,tce,sgh,acgbeh->fts', S_f, S_t, S_s, Rn, optimize=True)
        if sigma_n2_known and None not in zero:
            r[zero] -= sigma_n2_known
        out.append(r.reshape(-1))
    return CoarrayVectors(out[0], out[1], s_lags, f_lags, t_lags)


def coarray_from_snapshots(snap, config, full=False):
    """Sample covariance followed by coarray extraction with the snapshot's
    noise power."""
    R_x, R_z = sample_covariance(snap)
    return extract_coarray(R_x, R_z, config, snap.sigma_n2, full=full)


def virtual_steering(config, scene, windows):
    """Virtual manifold factors ``(A_x, A_z, Cv, Bv)`` on the given lag
    windows, with entries ``exp(+j kappa u s)``, ``exp(+j 4 pi delta_f r f / c)``
    and ``exp(+j 4 pi v T t / lambda)``."""
    s_lags, f_lags, t_lags = windows
    k = _kappa(config)
    A_x = np.exp(1j * k * np.outer(s_lags, scene.u))
    A_z = np.exp(1j * k * np.outer(s_lags, scene.w))
    Cv = np.exp(4j * np.pi * config.delta_f * np.outer(f_lags, scene.r) / C)
    Bv = np.exp(4j * np.pi * config.T * np.outer(t_lags, scene.v) / config.wavelength)
    return A_x, A_z, Cv, Bv
