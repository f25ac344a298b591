"""Index-set generators and difference-coarray bookkeeping.

All index sets are unitless: multiply by ``d`` for sensor positions, by
``delta_f`` for frequency offsets and by ``T`` for pulse instants.
"""
from dataclasses import dataclass, field
from math import gcd

import numpy as np


class SchemeSpec:
    """Base class of the index-pattern tagged union.

    Subclasses carry their own parameters. ``kind`` is the tag used when the
    scheme is serialized.
    """

    kind = None

    def validate(self):
        raise NotImplementedError()

    def to_dict(self):
        d = {'kind': self.kind}
        for k, v in self.__dict__.items():
            d[k] = list(v) if isinstance(v, tuple) else v
        return d

    @property
    def is_uniform(self):
        return False


def _require_positive(**kwargs):
    for name, value in kwargs.items():
        if int(value) != value or value < 1:
            raise ValueError('{0} must be a positive integer. Got {1}.'.format(name, value))


@dataclass(frozen=True)
class CoprimePair:
    """A co-prime integer pair with ``m < n``."""
    m: int
    n: int

    def __post_init__(self):
        _require_positive(m=self.m, n=self.n)
        if self.m >= self.n:
            raise ValueError('Expected m < n. Got ({0}, {1}).'.format(self.m, self.n))
        if gcd(self.m, self.n) != 1:
            raise ValueError('{0} and {1} are not co-prime.'.format(self.m, self.n))


@dataclass(frozen=True)
class Uniform(SchemeSpec):
    count: int
    kind = 'uniform'

    def validate(self):
        _require_positive(count=self.count)

    @property
    def is_uniform(self):
        return True


@dataclass(frozen=True)
class Coprime(SchemeSpec):
    m: int
    n: int
    kind = 'coprime'

    def validate(self):
        CoprimePair(self.m, self.n)

    @property
    def pair(self):
        return CoprimePair(self.m, self.n)


@dataclass(frozen=True)
class Cadis(SchemeSpec):
    """Co-prime array with displaced subarrays.

    The first subarray holds ``n`` sensors with spacing ``m`` and the second
    holds ``2m - 1`` sensors with spacing ``n``, shifted so that it starts
    ``l`` units after the end of the first one.
    """
    m: int
    n: int
    l: int
    kind = 'cadis'

    def validate(self):
        CoprimePair(self.m, self.n)
        _require_positive(l=self.l)


@dataclass(frozen=True)
class Nested(SchemeSpec):
    n1: int
    n2: int
    kind = 'nested'

    def validate(self):
        _require_positive(n1=self.n1, n2=self.n2)


@dataclass(frozen=True)
class SuperNested(SchemeSpec):
    """Second-order super nested array."""
    n1: int
    n2: int
    kind = 'super_nested'

    def validate(self):
        _require_positive(n1=self.n1, n2=self.n2)
        if self.n1 < 4 or self.n2 < 3:
            raise ValueError('Super nested arrays require n1 >= 4 and n2 >= 3.')


@dataclass(frozen=True)
class Cna(SchemeSpec):
    """Symmetric (mirrored) nested array."""
    n1: int
    n2: int
    kind = 'cna'

    def validate(self):
        _require_positive(n1=self.n1, n2=self.n2)


@dataclass(frozen=True)
class Gna(SchemeSpec):
    """Generalized nested array with co-prime spacings ``alpha`` and ``beta``."""
    n1: int
    n2: int
    alpha: int
    beta: int
    kind = 'gna'

    def validate(self):
        _require_positive(n1=self.n1, n2=self.n2, alpha=self.alpha, beta=self.beta)
        if gcd(self.alpha, self.beta) != 1:
            raise ValueError('alpha and beta must be co-prime.')


@dataclass(frozen=True)
class MultiCoset(SchemeSpec):
    pattern: tuple
    block: int
    periods: int
    kind = 'multi_coset'

    def __post_init__(self):
        object.__setattr__(self, 'pattern', tuple(sorted(set(int(p) for p in self.pattern))))

    def validate(self):
        _require_positive(block=self.block, periods=self.periods)
        if len(self.pattern) == 0:
            raise ValueError('Pattern cannot be empty.')
        if self.pattern[0] < 0 or self.pattern[-1] >= self.block:
            raise ValueError('Pattern must be a subset of [0, block).')


SCHEME_KINDS = {
    cls.kind: cls for cls in
    (Uniform, Coprime, Cadis, Nested, SuperNested, Cna, Gna, MultiCoset)
}


def scheme_from_dict(d):
    """Builds a :class:`SchemeSpec` from its serialized form."""
    d = dict(d)
    kind = d.pop('kind', None)
    if kind not in SCHEME_KINDS:
        raise ValueError('Unknown scheme kind "{0}".'.format(kind))
    if kind == 'multi_coset':
        d['pattern'] = tuple(d['pattern'])
    try:
        spec = SCHEME_KINDS[kind](**d)
    except TypeError as e:
        raise ValueError('Invalid parameters for scheme "{0}": {1}'.format(kind, e))
    spec.validate()
    return spec


@dataclass(frozen=True)
class IndexSet:
    """A strictly increasing set of non-negative integers starting at 0."""
    values: tuple

    def __post_init__(self):
        v = tuple(int(x) for x in self.values)
        if len(v) == 0:
            raise ValueError('An index set cannot be empty.')
        if v[0] != 0:
            raise ValueError('The first index must be 0.')
        if any(b <= a for a, b in zip(v[:-1], v[1:])):
            raise ValueError('Indices must be strictly increasing.')
        object.__setattr__(self, 'values', v)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def as_array(self):
        return np.array(self.values, dtype=np.int64)

    @property
    def aperture(self):
        return self.values[-1]


@dataclass(frozen=True)
class LagProfile:
    """Difference-set summary of an index set.

    Attributes:
        lags: Sorted distinct signed differences.
        contiguous_halfwidth: Largest ``L`` such that every lag in ``[-L, L]``
            is present.
        holes: Positive integers missing from the difference set within
            ``[1, max lag]``.
        nonneg_count: Number of distinct non-negative lags.
    """
    lags: tuple
    contiguous_halfwidth: int
    holes: tuple
    nonneg_count: int = field(default=0)

    @property
    def nonneg_lags(self):
        return tuple(l for l in self.lags if l >= 0)


def _superposition(*parts):
    s = set()
    for p in parts:
        s.update(int(x) for x in p)
    return IndexSet(tuple(sorted(s)))


def _super_nested_positions(n1, n2):
    # Second-order super nested array in 1-based positions, converted to
    # 0-based on return.
    r, rem = divmod(n1, 4)
    if rem == 0:
        a1, b1, a2, b2 = r, r - 1, r - 1, r - 2
    elif rem == 1:
        a1, b1, a2, b2 = r, r - 1, r - 1, r - 1
    elif rem == 2:
        a1, b1, a2, b2 = r + 1, r - 1, r, r - 2
    else:
        a1, b1, a2, b2 = r, r, r, r - 1
    p = n1 + 1
    x1 = [1 + 2 * l for l in range(a1 + 1)]
    y1 = [p - (1 + 2 * l) for l in range(b1 + 1)]
    x2 = [p + (2 + 2 * l) for l in range(a2 + 1)]
    y2 = [2 * p - (2 + 2 * l) for l in range(b2 + 1)]
    z1 = [l * p for l in range(2, n2 + 1)]
    z2 = [n2 * p - 1]
    pos = sorted(set(x1 + y1 + x2 + y2 + z1 + z2))
    return [x - 1 for x in pos]


def generate_index_set(spec):
    """Generates the index set of a scheme.

    Args:
        spec (~ccube.geometry.SchemeSpec): Scheme specification.

    Returns:
        IndexSet: The sorted union of the scheme's defining subsets.

    Raises:
        ValueError: If the scheme parameters are invalid.
    """
    spec.validate()
    if isinstance(spec, Uniform):
        return IndexSet(tuple(range(spec.count)))
    if isinstance(spec, Coprime):
        m, n = spec.m, spec.n
        return _superposition((m * i for i in range(n)), (n * j for j in range(1, 2 * m)))
    if isinstance(spec, Cadis):
        m, n, l = spec.m, spec.n, spec.l
        offset = (n - 1) * m + l
        return _superposition((m * i for i in range(n)),
                              (offset + n * j for j in range(2 * m - 1)))
    if isinstance(spec, Nested):
        n1, n2 = spec.n1, spec.n2
        return _superposition(range(n1), ((n1 + 1) * j - 1 for j in range(1, n2 + 1)))
    if isinstance(spec, SuperNested):
        return IndexSet(tuple(_super_nested_positions(spec.n1, spec.n2)))
    if isinstance(spec, Cna):
        n1, n2 = spec.n1, spec.n2
        half = list(range(n1)) + [n1 - 1 + n1 * j for j in range(1, n2 + 1)]
        top = max(half)
        return _superposition(half, (2 * top - x for x in half))
    if isinstance(spec, Gna):
        n1, n2, a, b = spec.n1, spec.n2, spec.alpha, spec.beta
        return _superposition((a * i for i in range(n1)),
                              (n1 * a + b * j for j in range(n2)))
    if isinstance(spec, MultiCoset):
        return _superposition(b * spec.block + p for b in range(spec.periods)
                              for p in spec.pattern)
    raise ValueError('Unsupported scheme {0!r}.'.format(spec))


def difference_profile(index_set):
    """Computes the difference set of an index set.

    Args:
        index_set (IndexSet): Physical index set.

    Returns:
        LagProfile: Signed lags, contiguous halfwidth, holes and the number of
        distinct non-negative lags.
    """
    x = np.asarray(index_set.values if isinstance(index_set, IndexSet) else index_set,
                   dtype=np.int64)
    diffs = np.unique((x[:, None] - x[None, :]).ravel())
    nonneg = diffs[diffs >= 0]
    max_lag = int(nonneg[-1])
    present = np.zeros(max_lag + 2, dtype=bool)
    present[nonneg] = True
    L = int(np.argmin(present)) - 1
    holes = tuple(int(h) for h in np.flatnonzero(~present[:max_lag + 1]))
    return LagProfile(
        lags=tuple(int(l) for l in diffs),
        contiguous_halfwidth=L,
        holes=holes,
        nonneg_count=int(nonneg.size)
    )


def contiguous_bound(pair):
    """Returns the contiguous coarray halfwidth ``m*n + m - 1`` of a co-prime
    pair."""
    if not isinstance(pair, CoprimePair):
        pair = CoprimePair(*pair)
    return pair.m * pair.n + pair.m - 1


def lag_counts(spatial, fo, pri):
    """Counts physical and coarray lags over the non-negative region.

    The frequency dimension uses the non-negative FO index subset only, for
    both counts.

    Args:
        spatial (IndexSet): Sensor index set.
        fo (IndexSet): Non-negative FO index set.
        pri (IndexSet): Pulse index set.

    Returns:
        tuple: ``(physical_nonneg, coarray_nonneg)``.
    """
    physical = len(spatial) * len(fo) * len(pri)
    coarray = 1
    for s in (spatial, fo, pri):
        coarray *= difference_profile(s).nonneg_count
    return physical, coarray
