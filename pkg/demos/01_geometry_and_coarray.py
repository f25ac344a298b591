"""Sparse index sets and their difference coarrays.

Builds the co-prime pair used along every dimension of the default radar,
compares it with a uniform set of the same size and with a few nested
alternatives, then synthesizes snapshots and checks that the sample coarray
approaches the noiseless virtual manifold.
"""
import numpy as np

from ccube import (Coprime, Nested, SuperNested, Uniform, analytic_covariance,
                   coarray_from_snapshots, difference_profile, extract_coarray,
                   generate_index_set, lag_counts, synthesize, table_config,
                   two_target_scene)

## Index sets
# (m, n) = (2, 3): P = n + 2m - 1 = 6 sensors, offsets or pulses.
schemes = {'coprime(2,3)': Coprime(2, 3), 'uniform(6)': Uniform(6),
           'nested(3,3)': Nested(3, 3), 'super-nested(4,3)': SuperNested(4, 3)}
for name, spec in schemes.items():
    s = generate_index_set(spec)
    prof = difference_profile(s)
    print('{0:<18} values={1}'.format(name, list(s.values)))
    print('{0:<18} contiguous lags [-{1}, {1}], holes={2}'.format(
        '', prof.contiguous_halfwidth, list(prof.holes)))

## Virtual aperture of a three-dimensional cube
# Space and frequency use (3, 7), time uses (2, 3).
s37 = generate_index_set(Coprime(3, 7))
print('\nnon-negative physical / coarray lags:',
      lag_counts(s37, s37, generate_index_set(Coprime(2, 3))))

## Sample coarray converging to the noiseless one
cfg = table_config('C-Cube')
scene = two_target_scene()
Rx, Rz = analytic_covariance(cfg, scene, 0.0)
ideal = extract_coarray(Rx, Rz, cfg)
for L_r in (25, 100, 400, 1600):
    c = cfg.with_(L_r=L_r)
    cv = coarray_from_snapshots(synthesize(c, scene, seed=0, sigma_n2=0.01), c)
    err = np.linalg.norm(cv.rx - ideal.rx) / np.linalg.norm(ideal.rx)
    print('L_r = {0:5d}: relative coarray error {1:.3f}'.format(L_r, err))
