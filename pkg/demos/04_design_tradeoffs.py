"""Mutual coupling and spectrum occupancy of alternative designs.

Sparse sensor placement reduces coupling leakage, and sparse frequency
offsets reduce the fraction of the swept band that is actually occupied.
Both trade-offs are printed for the built-in design lists.
"""
from ccube import coupling_table, occupancy_sweep

## Coupling leakage per L-shaped design
print('{0:<14} {1:>8} {2:>9} {3:>9}'.format('design', 'sensors', 'aperture', 'leakage'))
for name, n, ap, lk, ref in sorted(coupling_table(), key=lambda r: r[3]):
    print('{0:<14} {1:8d} {2:9d} {3:9.4f}'.format(name, n, ap, lk))

## Occupancy against FO half-aperture
rows = occupancy_sweep([6, 10, 20, 40])
schemes = sorted({r[0] for r in rows})
print('\n{0:>4} '.format('L_f') + ' '.join('{0:>12}'.format(s) for s in schemes))
for L in (6, 10, 20, 40):
    eta = {s: e for s, l, e in rows if l == L}
    print('{0:4d} '.format(L) + ' '.join('{0:12.4f}'.format(eta[s]) for s in schemes))
