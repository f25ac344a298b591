"""Design-space comparisons: mutual coupling, spectrum and dwell occupancy."""
from dataclasses import dataclass
from math import floor, gcd, sqrt

import numpy as np

from .geometry import Cadis, Coprime, Cna, Gna, IndexSet, MultiCoset, Nested, \
    SuperNested, Uniform, generate_index_set


@dataclass(frozen=True)
class CouplingModel:
    """Distance-decaying coupling ``h(s) = (h1 / s) exp(-j (s - 1) pi / 8)``
    with ``h(0) = 1``. ``s`` is measured in units of ``d`` and may be
    non-integer."""
    h1: complex = 0.3 * np.exp(1j * np.pi / 3)

    def __post_init__(self):
        if not abs(self.h1) < 1:
            raise ValueError('|h1| must be below 1.')

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        safe = np.where(s == 0, 1.0, s)
        return np.where(s == 0, 1.0 + 0j, self.h1 / safe * np.exp(-1j * (safe - 1) * np.pi / 8))


def coupling_matrix(xz_positions, model=None):
    """Mutual coupling matrix of an L-shaped array.

    The x-axis holds every position of ``xz_positions`` (including the shared
    origin) and the z-axis holds the non-zero ones, so ``2P - 1`` sensors in
    total. Same-axis entries use ``h(|xi_i - xi_j|)`` and cross-axis entries
    use ``h(sqrt(xi_i^2 + zeta_j^2))``. The matrix is complex symmetric.

    Args:
        xz_positions (IndexSet): Sensor indices along each axis.
        model (CouplingModel): Coupling law. Defaults to ``CouplingModel()``.

    Returns:
        ~numpy.ndarray: ``(2P - 1) x (2P - 1)`` coupling matrix ordered
        ``[x sensors, z sensors]``.
    """
    model = CouplingModel() if model is None else model
    pos = np.asarray(xz_positions.values if isinstance(xz_positions, IndexSet)
                     else xz_positions, dtype=float)
    nz = pos[pos > 0]
    H_x = model(np.abs(pos[:, None] - pos[None, :]))
    H_z = model(np.abs(nz[:, None] - nz[None, :]))
    H_xz = model(np.hypot(pos[:, None], nz[None, :]))
    return np.block([[H_x, H_xz], [H_xz.T, H_z]])


def coupling_leakage(H):
    """``||H - diag(H)||_F / ||H||_F``."""
    H = np.asarray(H)
    off = H - np.diag(np.diag(H))
    return float(np.linalg.norm(off) / np.linalg.norm(H))


# Alternative L-shaped geometries of the coupling comparison, with their
# reference leakage values.
COUPLING_DESIGNS = (
    ('CADiS', Cadis(3, 5, 3), 0.4302),
    ('super-nested', SuperNested(5, 5), 0.5342),
    ('C-Cube', Coprime(3, 7), 0.5340),
    ('CNA', Cna(3, 3), 0.5859),
    ('GNA', Gna(5, 5, 2, 3), 0.5969),
    ('multi-coset', MultiCoset((0, 1, 2, 5), 7, 5), 0.5985),
    ('nested', Nested(5, 5), 0.6303),
    ('U-Cube', Uniform(36), 0.76),
)


def coupling_table(model=None):
    """Leakage of every design in :data:`COUPLING_DESIGNS`.

    Returns:
        list: ``(name, n_sensors_per_axis, aperture, leakage, reference)``
        tuples in table order.
    """
    rows = []
    for name, spec, ref in COUPLING_DESIGNS:
        s = generate_index_set(spec)
        rows.append((name, len(s), s.aperture,
                     coupling_leakage(coupling_matrix(s, model)), ref))
    return rows


OCCUPANCY_SCHEMES = ('logarithmic', 'tdfo', 'cnfo', 'gnfo', 'coprime')


@dataclass(frozen=True)
class OccupancySpec:
    """Inputs of a spectrum occupancy evaluation.

    Attributes:
        scheme (str): One of :data:`OCCUPANCY_SCHEMES`.
        B (float): Per-offset transmit bandwidth (Hz).
        delta_f (float): Fundamental frequency offset (Hz).
        L_f (int): FO half-aperture, so that the cumulative bandwidth is
            ``2 (L_f - 1) delta_f``.
        alpha, beta (int): GNFO spacings.
        max_tdfo (float): Largest time-dependent offset (Hz), TDFO only.
    """
    scheme: str
    B: float
    delta_f: float
    L_f: int
    alpha: int = 2
    beta: int = 3
    max_tdfo: float = None


def cnfo_order(L_f):
    return int(floor((-1 + sqrt(1 + 2 * (1 + L_f))) / 2))


def gnfo_order(L_f, alpha=2, beta=3):
    return (L_f + beta - 1) // (alpha + beta)


def coprime_fo_pair(L_f):
    """Co-prime FO pair used at half-aperture ``L_f``.

    Picks the pair whose physical aperture ``n (2m - 1)`` is the largest not
    exceeding ``L_f - 1``, the same fitting rule that fixes the nested
    orders. Ties go to the pair with fewer offsets.

    Returns:
        tuple: ``(m, n)`` or ``None`` if no pair fits.
    """
    best = None
    for n in range(2, L_f + 1):
        for m in range(1, n):
            if gcd(m, n) != 1:
                continue
            ap = n * (2 * m - 1)
            if ap > L_f - 1:
                continue
            key = (ap, -(n + 2 * m - 1))
            if best is None or key > best[0]:
                best = (key, (m, n))
    return None if best is None else best[1]


def occupancy_rate(spec):
    """Spectrum occupancy ``eta = B_a / B_c`` of an FO scheme.

    Raises:
        ValueError: On unknown schemes, ``L_f <= 1`` or missing inputs.
    """
    if spec.scheme not in OCCUPANCY_SCHEMES:
        raise ValueError('Unknown FO scheme "{0}".'.format(spec.scheme))
    if spec.L_f <= 1:
        raise ValueError('L_f must exceed 1.')
    if not (spec.B > 0 and spec.delta_f > 0):
        raise ValueError('B and delta_f must be positive.')
    B, df, L = spec.B, spec.delta_f, spec.L_f
    if spec.scheme == 'logarithmic':
        return B / df
    if spec.scheme == 'tdfo':
        if spec.max_tdfo is None or not spec.max_tdfo > 0:
            raise ValueError('TDFO occupancy needs a positive max_tdfo.')
        return B / spec.max_tdfo
    if spec.scheme == 'cnfo':
        N = cnfo_order(L)
        return (4 * N - 2) * B / ((L - 1) * df)
    if spec.scheme == 'gnfo':
        if gcd(spec.alpha, spec.beta) != 1:
            raise ValueError('alpha and beta must be co-prime.')
        N = gnfo_order(L, spec.alpha, spec.beta)
        return (2 * N - 1) * B / ((L - 1) * df)
    pair = coprime_fo_pair(L)
    if pair is None:
        raise ValueError('No co-prime FO set fits L_f={0}.'.format(L))
    m, n = pair
    P = n + 2 * m - 1
    return (2 * P - 1) * B / (2 * (L - 1) * df)


def occupancy_sweep(L_values, B=0.1, delta_f=1.0, alpha=2, beta=3):
    """Occupancy of the four closed-form schemes over ``L_values``.

    Returns:
        list: ``(scheme, L_f, eta)`` rows.
    """
    rows = []
    for L in L_values:
        for scheme in ('coprime', 'logarithmic', 'cnfo', 'gnfo'):
            spec = OccupancySpec(scheme, B, delta_f, int(L), alpha, beta)
            try:
                eta = occupancy_rate(spec)
            except ValueError:
                eta = float('nan')
            rows.append((scheme, int(L), eta))
    return rows


def dwell_occupancy(pulses, T, T_p):
    """Dwell-time occupancy ``kappa = count T_p / (max index T)``.

    Args:
        pulses (IndexSet): Pulse indices (at least two).
        T (float): Fundamental PRI (s).
        T_p (float): Pulse width (s).
    """
    if len(pulses) < 2:
        raise ValueError('At least two pulses are required.')
    return len(pulses) * T_p / (pulses.aperture * T)
