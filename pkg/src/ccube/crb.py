"""Fisher information and Cramer-Rao bounds for the stacked L-shaped model.

The stacked observation is ``y = [x; z]`` with covariance
``R = M diag(sigma2) M^H + sigma_n2 I`` where ``M = [C o B o A_x; C o B o A_z]``.
Parameters are ordered ``[theta_1..Q, phi_1..Q, r_1..Q, v_1..Q]``.

The FIM ``J_mn = L_r tr(R^-1 dR_m R^-1 dR_n)`` is evaluated from rank-two
derivative structure ``dR = sigma_q^2 (dm m^H + m dm^H)`` without ever forming
``W = R^-T kron R^-1``. Small reference routines that do form ``W`` are kept
for verification.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import sqrtm

from .scene import C
from .signal import steering

PARAM_NAMES = ('theta', 'phi', 'r', 'v')


class SingularCovarianceError(ValueError):
    pass


@dataclass(frozen=True)
class ManifoldDerivatives:
    """Stacked manifold columns and their parameter derivatives.

    Attributes:
        m (~numpy.ndarray): ``2N x Q`` stacked manifold.
        dm (dict): Maps each parameter name to its ``2N x Q`` derivative of
            ``m``.
        sigma2 (~numpy.ndarray): Target powers.
    """
    m: np.ndarray
    dm: dict
    sigma2: np.ndarray

    def V(self, name):
        """Dense ``(2N)^2 x Q`` matrix of ``d vec(R) / d gamma``, column-major
        ``vec``. Only sensible for small instances."""
        d = self.dm[name]
        cols = []
        for q in range(self.m.shape[1]):
            mq, dq = self.m[:, q], d[:, q]
            cols.append(self.sigma2[q] * (np.kron(mq.conj(), dq) + np.kron(dq.conj(), mq)))
        return np.column_stack(cols)

    @property
    def V_theta(self):
        return self.V('theta')

    @property
    def V_phi(self):
        return self.V('phi')

    @property
    def V_r(self):
        return self.V('r')

    @property
    def V_v(self):
        return self.V('v')

    @property
    def D_L(self):
        return np.hstack((self.V_theta, self.V_phi))

    @property
    def D_R(self):
        return np.hstack((self.V_r, self.V_v))

    def stacked(self, names=PARAM_NAMES):
        """Returns ``(D, S)``: all derivative columns of ``m`` in parameter
        order and the matching power scalings."""
        D = np.hstack([self.dm[n] for n in names])
        S = np.tile(self.sigma2, len(names))
        return D, S


@dataclass
class CrbReport:
    """Per-parameter CRB matrices (Q x Q). ``crb_r`` is NaN for non-FDA
    configurations, whose range is unobservable."""
    crb_theta: np.ndarray
    crb_phi: np.ndarray
    crb_r: np.ndarray
    crb_v: np.ndarray
    fim_rank: int
    exists: bool
    n_params: int

    def rcrb(self):
        """Per-target root CRBs as a dict of arrays."""
        out = {}
        for n in PARAM_NAMES:
            M = getattr(self, 'crb_' + n)
            out[n] = np.sqrt(np.clip(np.real(np.diag(M)), 0, None))
        return out


def _params_for(config):
    return PARAM_NAMES if config.has_fo else ('theta', 'phi', 'v')


def stacked_manifold(config, scene):
    """``2N x Q`` stacked manifold ``[C o B o A_x; C o B o A_z]``."""
    cols = []
    for t in scene:
        sv = steering(config, t)
        cb = np.kron(sv.c, sv.b)
        cols.append(np.concatenate((np.kron(cb, sv.a_x), np.kron(cb, sv.a_z))))
    n = 2 * config.n_rows
    return np.column_stack(cols) if cols else np.zeros((n, 0), dtype=complex)


def stacked_covariance(config, scene, sigma_n2=None):
    """Covariance of the stacked observation ``[x; z]``."""
    sigma_n2 = config.sigma_n2 if sigma_n2 is None else float(sigma_n2)
    M = stacked_manifold(config, scene)
    R = (M * scene.sigma2) @ M.conj().T if len(scene) else \
        np.zeros((M.shape[0], M.shape[0]), dtype=complex)
    return R + sigma_n2 * np.eye(M.shape[0])


def manifold_derivatives(config, scene):
    """Analytic product-rule derivatives of the stacked manifold.

    Returns:
        ManifoldDerivatives: Manifold, derivatives and powers.
    """
    xi = config.spatial_set.as_array().astype(float)
    eta = config.pri_set.as_array().astype(float)
    o = config.fo_offsets
    k = 2 * np.pi * config.d / config.wavelength
    n = config.n_rows
    Q = len(scene)
    m = np.empty((2 * n, Q), dtype=complex)
    dm = {p: np.empty((2 * n, Q), dtype=complex) for p in PARAM_NAMES}
    for q, t in enumerate(scene):
        sv = steering(config, t)
        st, ct = np.sin(t.theta), np.cos(t.theta)
        sp, cp = np.sin(t.phi), np.cos(t.phi)
        cb = np.kron(sv.c, sv.b)

        def stack(cb_, ax, az):
            return np.concatenate((np.kron(cb_, ax), np.kron(cb_, az)))

        m[:, q] = stack(cb, sv.a_x, sv.a_z)
        dm['theta'][:, q] = stack(cb, sv.a_x * (-1j * k * xi * ct * sp),
                                  sv.a_z * (-1j * k * xi * ct * cp))
        dm['phi'][:, q] = stack(cb, sv.a_x * (-1j * k * xi * st * cp),
                                sv.a_z * (1j * k * xi * st * sp))
        dc = sv.c * (-4j * np.pi * config.delta_f * o / C)
        dm['r'][:, q] = stack(np.kron(dc, sv.b), sv.a_x, sv.a_z)
        db = sv.b * (-4j * np.pi * config.T * eta / config.wavelength)
        dm['v'][:, q] = stack(np.kron(sv.c, db), sv.a_x, sv.a_z)
    return ManifoldDerivatives(m, dm, scene.sigma2)


def _inverse_covariance(config, scene, sigma_n2):
    R = stacked_covariance(config, scene, sigma_n2)
    try:
        cho = np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise SingularCovarianceError('R is singular; the FIM needs sigma_n2 > 0.')
    inv_c = np.linalg.inv(cho)
    return inv_c.conj().T @ inv_c


def fim(config, scene, sigma_n2=None, names=None):
    """Fisher information matrix of the geometric parameters.

    Args:
        config (~ccube.scene.RadarConfig): Radar configuration.
        scene (~ccube.scene.TargetScene): Targets with known powers.
        sigma_n2 (float): Overrides ``config.sigma_n2``.
        names (tuple): Parameter families to include. Defaults to all four
            (three without FO).

    Returns:
        ~numpy.ndarray: Real symmetric ``(len(names) Q) x (len(names) Q)``
        matrix.
    """
    sigma_n2 = config.sigma_n2 if sigma_n2 is None else float(sigma_n2)
    names = _params_for(config) if names is None else names
    G = _inverse_covariance(config, scene, sigma_n2)
    md = manifold_derivatives(config, scene)
    Q = len(scene)
    D, S = md.stacked(names)
    Mi = np.tile(md.m, len(names))
    GM = G @ Mi
    GD = G @ D
    mGm = Mi.conj().T @ GM      # m_i^H G m_j
    mGd = Mi.conj().T @ GD      # m_i^H G d_j
    dGd = D.conj().T @ GD       # d_i^H G d_j
    dGm = mGd.conj().T          # d_i^H G m_j
    J = mGd * mGd.T + mGm * dGd.T + dGd * mGm.T + dGm * dGm.T
    J = config.L_r * np.real(J) * np.outer(S, S)
    assert J.shape == (len(names) * Q,) * 2
    return (J + J.T) / 2


def _schur_blocks(J, Q, n_groups):
    # Equilibrate, then take Schur complements: left pair vs right pair, then
    # within each pair.
    d = np.sqrt(np.abs(np.diag(J)))
    d[d == 0] = 1.0
    Je = J / np.outer(d, d)
    blocks = []
    if n_groups == 4:
        L = slice(0, 2 * Q)
        R = slice(2 * Q, 4 * Q)
        S_L = Je[L, L] - Je[L, R] @ np.linalg.solve(Je[R, R], Je[R, L])
        S_R = Je[R, R] - Je[R, L] @ np.linalg.solve(Je[L, L], Je[L, R])
        pairs = [(S_L, d[:2 * Q]), (S_R, d[2 * Q:])]
    else:
        # No range: the left pair is (theta, phi) and v stands alone.
        L = slice(0, 2 * Q)
        R = slice(2 * Q, 3 * Q)
        S_L = Je[L, L] - Je[L, R] @ np.linalg.solve(Je[R, R], Je[R, L])
        S_R = Je[R, R] - Je[R, L] @ np.linalg.solve(Je[L, L], Je[L, R])
        pairs = [(S_L, d[:2 * Q])]
    for S, dd in pairs:
        a, b = slice(0, Q), slice(Q, 2 * Q)
        for first, second in ((a, b), (b, a)):
            inner = S[first, first] - S[first, second] @ np.linalg.solve(S[second, second],
                                                                         S[second, first])
            blk = np.linalg.inv(inner)
            blocks.append(blk / np.outer(dd[first], dd[first]))
    if n_groups == 3:
        blocks.append(np.linalg.inv(S_R) / np.outer(d[2 * Q:], d[2 * Q:]))
    return blocks


def crb_exists(config, scene, sigma_n2=None, tol=1e-8, chunk_cols=64):
    """Rank test of ``[D_L D_R]``.

    The derivative matrix has ``(2N)^2`` rows. Its R factor is accumulated by
    a tall-skinny QR over blocks of covariance columns, after scaling every
    column to unit norm.

    Returns:
        tuple: ``(exists, rank)``.
    """
    names = _params_for(config)
    Q = len(scene)
    n_par = len(names) * Q
    if Q == 0:
        return True, 0
    md = manifold_derivatives(config, scene)
    D, S = md.stacked(names)
    Mi = np.tile(md.m, len(names))
    n = Mi.shape[0]
    if n * n < n_par:
        return False, int(min(n * n, n_par))
    # Column norms of vec(dR) from the Gram diagonal.
    Rf = np.zeros((0, n_par), dtype=complex)
    for start in range(0, n, chunk_cols):
        cols = slice(start, min(n, start + chunk_cols))
        # dR[:, cols] = s (d m[cols]^H + m d[cols]^H), vectorized column-major.
        blk = (D[:, None, :] * Mi[cols].conj()[None, :, :] +
               Mi[:, None, :] * D[cols].conj()[None, :, :]) * S
        blk = blk.transpose(1, 0, 2).reshape(-1, n_par)
        Rf = np.linalg.qr(np.vstack((Rf, blk)), mode='r')
    norms = np.linalg.norm(Rf, axis=0)
    norms[norms == 0] = 1.0
    s = np.linalg.svd(Rf / norms, compute_uv=False)
    rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return rank == n_par, rank


def crb(config, scene, sigma_n2=None, rank_tol=1e-8):
    """Cramer-Rao bounds of all four parameter families.

    Returns:
        CrbReport: Bounds are NaN-filled when the derivative matrix is rank
        deficient.
    """
    names = _params_for(config)
    Q = len(scene)
    exists, rank = crb_exists(config, scene, sigma_n2, tol=rank_tol)
    nan = np.full((Q, Q), np.nan)
    if not exists:
        return CrbReport(nan, nan.copy(), nan.copy(), nan.copy(), rank, False, len(names) * Q)
    J = fim(config, scene, sigma_n2, names)
    blocks = _schur_blocks(J, Q, len(names))
    if len(names) == 4:
        th, ph, rr, vv = blocks
    else:
        th, ph, vv = blocks
        rr = nan
    sym = lambda M: (M + M.T) / 2
    return CrbReport(sym(th), sym(ph), rr if rr is nan else sym(rr), sym(vv),
                     rank, True, len(names) * Q)


def noise_for_snr(scene, snr_db):
    """Noise power matching a per-element SNR for the model covariance."""
    return float(np.sum(scene.sigma2)) / 10 ** (snr_db / 10)


# Reference implementations that materialize W. Only for tiny instances.

def fim_wform(config, scene, sigma_n2=None):
    """FIM as ``L_r Re(D^H W D)`` with ``W = R^-T kron R^-1``."""
    sigma_n2 = config.sigma_n2 if sigma_n2 is None else float(sigma_n2)
    G = np.linalg.inv(stacked_covariance(config, scene, sigma_n2))
    W = np.kron(G.T, G)
    md = manifold_derivatives(config, scene)
    D = np.hstack([md.V(n) for n in _params_for(config)])
    return config.L_r * np.real(D.conj().T @ W @ D)


def crb_projector(config, scene, sigma_n2=None):
    """CRBs through orthogonal projectors on ``W^{1/2} D``.

    Returns:
        dict: Q x Q CRB matrices keyed by parameter name.
    """
    sigma_n2 = config.sigma_n2 if sigma_n2 is None else float(sigma_n2)
    G = np.linalg.inv(stacked_covariance(config, scene, sigma_n2))
    Gh = sqrtm(G)
    Gh = (Gh + Gh.conj().T) / 2
    Wh = np.kron(Gh.T, Gh)
    md = manifold_derivatives(config, scene)
    V = {n: Wh @ md.V(n) for n in PARAM_NAMES}

    def perp(A):
        return np.eye(A.shape[0]) - A @ np.linalg.pinv(A)

    def bound(main, other, nuisance):
        P = perp(np.hstack([V[n] for n in nuisance]))
        a = P @ V[main]
        b = P @ V[other]
        F = a.conj().T @ perp(b) @ a
        return np.linalg.inv(np.real(F)) / config.L_r

    return {
        'theta': bound('theta', 'phi', ('r', 'v')),
        'phi': bound('phi', 'theta', ('r', 'v')),
        'r': bound('r', 'v', ('theta', 'phi')),
        'v': bound('v', 'r', ('theta', 'phi')),
    }
