"""Auto-pairing estimator for elevation, azimuth, range and Doppler.

The coarray matrix ``R_XZ`` factors as ``[A_x; A_z] R_rho (C o B)^T``. Its
left singular vectors give the direction cosines through two shift
invariances that share one similarity transform ``T_L``; the same ``T_L``,
together with the singular values, pairs the range and Doppler rotations
extracted from the right singular vectors.
"""
from dataclasses import dataclass, field

import numpy as np

from .scene import C


class CCingError(RuntimeError):
    """Base class of estimator failures. ``stage`` names the failing step."""

    def __init__(self, message, stage=None):
        super().__init__(message if stage is None else '[{0}] {1}'.format(stage, message))
        self.stage = stage


class RankDeficiencyError(CCingError):
    pass


class DegenerateSceneError(CCingError):
    pass


class InconsistentSubspaceError(CCingError):
    pass


RCOND_NOISELESS = 1e-10
RCOND_NOISY = 1e-6


@dataclass(frozen=True)
class SubspacePack:
    """Top-Q singular triplets of ``R_XZ`` plus the coarray grid shape."""
    U1: np.ndarray
    Lambda: np.ndarray
    V1: np.ndarray
    n_s: int
    n_f: int
    n_t: int


@dataclass
class EstimateSet:
    """Auto-paired estimates.

    Attributes:
        theta, phi (~numpy.ndarray): Elevation and azimuth (radians).
        r (~numpy.ndarray): Range (m). NaN for non-FDA configurations.
        v (~numpy.ndarray): Velocity (m/s).
        diagnostics (dict): Conditioning and leakage figures.
    """
    theta: np.ndarray
    phi: np.ndarray
    r: np.ndarray
    v: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return self.theta.size

    def params(self):
        return np.column_stack((self.theta, self.phi, self.r, self.v))


def _offdiag_leakage(M):
    nrm = np.linalg.norm(M)
    if nrm == 0:
        return 0.0
    return float(np.linalg.norm(M - np.diag(np.diag(M))) / nrm)


def build_rxz(coarray):
    """Stacks the two axes into ``R_XZ``.

    ``X`` satisfies ``vec(X) = rx`` in column-major order: rows follow the
    spatial lags and columns follow the ``(f, t)`` pairs, frequency major.

    Returns:
        ~numpy.ndarray: ``2 n_s x (n_f n_t)`` matrix.
    """
    n_f, n_t, n_s = coarray.shape
    if coarray.rx.size != n_f * n_t * n_s or coarray.rz.size != coarray.rx.size:
        raise ValueError('Coarray vector lengths do not match the lag grid.')
    X = coarray.rx.reshape(n_f * n_t, n_s).T
    Z = coarray.rz.reshape(n_f * n_t, n_s).T
    return np.vstack((X, Z))


def truncated_svd(R_XZ, Q, shape, tol=1e-8):
    """Top-Q SVD of ``R_XZ``.

    Args:
        R_XZ (~numpy.ndarray): Concatenated coarray matrix.
        Q (int): Model order.
        shape (tuple): ``(n_f, n_t, n_s)`` of the coarray grid.
        tol (float): Relative singular-value threshold.

    Raises:
        RankDeficiencyError: If ``sigma_Q <= tol * sigma_1`` or ``Q`` exceeds
            the matrix dimensions.
    """
    n_f, n_t, n_s = shape
    if Q < 1 or Q > min(R_XZ.shape):
        raise RankDeficiencyError('Q={0} exceeds the size of R_XZ {1}.'.format(Q, R_XZ.shape),
                                  'svd')
    U, s, Vh = np.linalg.svd(R_XZ, full_matrices=False)
    if s[0] == 0 or s[Q - 1] <= tol * s[0]:
        raise RankDeficiencyError(
            'R_XZ has fewer than {0} significant singular values.'.format(Q), 'svd')
    return SubspacePack(U[:, :Q], s[:Q], Vh[:Q].conj().T, n_s, n_f, n_t)


def _left_inverse(A, rcond, stage, what):
    s = np.linalg.svd(A, compute_uv=False)
    if A.shape[0] < A.shape[1] or s[-1] <= rcond * s[0]:
        raise RankDeficiencyError('{0} is not left-invertible.'.format(what), stage)
    return np.linalg.pinv(A, rcond=rcond)


def estimate_doa(pack, rcond=RCOND_NOISELESS, kappa=np.pi, max_cond=1e8):
    """Elevation and azimuth from the left singular subspace.

    Returns:
        tuple: ``(theta, phi, T_L, Phi, Psi, info)`` where ``Phi`` and ``Psi``
        are the diagonal rotations and ``info`` holds diagnostics.
    """
    n_s = pack.n_s
    U11 = pack.U1[:n_s]
    U12 = pack.U1[n_s:]
    M = _left_inverse(U11[:-1], rcond, 'doa', 'U_111') @ U11[1:]
    phi_eig, E = np.linalg.eig(M)
    cond = np.linalg.cond(E)
    if not np.isfinite(cond) or cond > max_cond:
        raise DegenerateSceneError(
            'Eigenbasis condition number {0:.3g} exceeds {1:.0e}.'.format(cond, max_cond), 'doa')
    T_L = np.linalg.inv(E)
    Psi_full = T_L @ _left_inverse(U12[:-1], rcond, 'doa', 'U_121') @ U12[1:] @ E
    psi_eig = np.diag(Psi_full)
    a_u = np.angle(phi_eig)
    a_w = np.angle(psi_eig)
    phi = np.arctan2(a_u, a_w)
    theta = np.arcsin(np.clip(np.hypot(a_u, a_w) / kappa, 0.0, 1.0))
    info = {
        'eig_cond': float(cond),
        'psi_leakage': _offdiag_leakage(Psi_full),
        'phi_modulus_error': float(np.max(np.abs(np.abs(phi_eig) - 1))),
    }
    return theta, phi, T_L, phi_eig, psi_eig, info


def _rotation(V1h_1, V1h_2, T_L, Lambda, rcond, what):
    s = np.linalg.svd(V1h_1, compute_uv=False)
    Q = V1h_1.shape[0]
    if V1h_1.shape[1] < Q or s[-1] <= rcond * s[0]:
        raise InconsistentSubspaceError('{0} is not right-invertible.'.format(what),
                                        'range_doppler')
    pinv = np.linalg.pinv(V1h_1, rcond=rcond)
    resid = np.linalg.norm(V1h_1 @ pinv - np.eye(Q))
    if resid > 1e-6:
        raise InconsistentSubspaceError(
            'Pseudo-inverse residual of {0} is {1:.3g}.'.format(what, resid), 'range_doppler')
    G = (T_L * Lambda) @ (V1h_2 @ pinv) @ np.linalg.inv(T_L * Lambda)
    return G


def _phase_2pi(z):
    # Range and Doppler rotations live on [0, 2 pi): a target at R_max or
    # v_max wraps to 0.
    return np.mod(np.angle(z), 2 * np.pi)


def estimate_range_doppler(pack, T_L, Lambda, config=None, rcond=RCOND_NOISELESS,
                           wavelength=None, T=None, delta_f=None):
    """Range and velocity, paired through ``T_L`` and ``Lambda``.

    Either pass ``config`` or the three physical constants.

    Returns:
        tuple: ``(r, v, info)``. ``r`` is NaN when the coarray has a single
        frequency lag.
    """
    if config is not None:
        wavelength, T, delta_f = config.wavelength, config.T, config.delta_f
    Q = pack.Lambda.size
    Vh = pack.V1.conj().T.reshape(Q, pack.n_f, pack.n_t)
    info = {}
    if pack.n_t < 2:
        raise InconsistentSubspaceError('At least two time lags are required.',
                                        'range_doppler')
    Gamma = _rotation(Vh[:, :, :-1].reshape(Q, -1), Vh[:, :, 1:].reshape(Q, -1),
                      T_L, Lambda, rcond, 'V_B1^H')
    v = _phase_2pi(np.diag(Gamma)) * wavelength / (4 * np.pi * T)
    info['gamma_leakage'] = _offdiag_leakage(Gamma)
    if pack.n_f >= 2:
        Omega = _rotation(Vh[:, :-1, :].reshape(Q, -1), Vh[:, 1:, :].reshape(Q, -1),
                          T_L, Lambda, rcond, 'V_C1^H')
        r = _phase_2pi(np.diag(Omega)) * C / (4 * np.pi * delta_f)
        info['omega_leakage'] = _offdiag_leakage(Omega)
    else:
        r = np.full(Q, np.nan)
    return r, v, info


def ccing(coarray, Q, config, noisy=False, rcond=None, svd_tol=1e-8):
    """Runs the full estimator on coarray observations.

    Args:
        coarray (~ccube.signal.CoarrayVectors): Coarray observations.
        Q (int): Number of targets.
        config (~ccube.scene.RadarConfig): Radar configuration.
        noisy (bool): Selects the looser pseudo-inverse tolerance for noisy
            data.
        rcond (float): Overrides the pseudo-inverse tolerance.
        svd_tol (float): Relative threshold of the Q-th singular value.

    Returns:
        EstimateSet: Q tuples sharing the eigen-order induced by ``T_L``.

    Raises:
        CCingError: Subclasses carry the failing stage in ``stage``.
    """
    if rcond is None:
        rcond = RCOND_NOISY if noisy else RCOND_NOISELESS
    R_XZ = build_rxz(coarray)
    pack = truncated_svd(R_XZ, Q, coarray.shape, tol=svd_tol)
    kappa = 2 * np.pi * config.d / config.wavelength
    theta, phi, T_L, _, _, info = estimate_doa(pack, rcond=rcond, kappa=kappa)
    r, v, info_rd = estimate_range_doppler(pack, T_L, pack.Lambda, config, rcond=rcond)
    info.update(info_rd)
    info['singular_values'] = pack.Lambda.tolist()
    return EstimateSet(theta, phi, r, v, info)
