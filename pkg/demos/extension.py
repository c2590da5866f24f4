"""From dyadic samples to all times.

A table of dephasing channels at times 2^-j is extended to t = 1/3 and
t = pi/10 and compared with the closed form. The trace-norm bound is then
checked on a sequence of states concentrating under a projection.
"""

import math

import numpy as np

from cpdil.channel import apply
from cpdil.extend import SampledSemigroup, arveson_bound, extend_to
from cpdil.semigroup import dephasing

rate = 0.6
table = SampledSemigroup.binary(dephasing(rate), depth=20)
a = np.array([[0.3, 1 - 2j], [0.5j, -1.0]])
for t in (1 / 3, math.pi / 10):
    ch, rep = extend_to(table, t)
    exact = a.copy()
    exact[0, 1] *= math.exp(-2 * rate * t)
    exact[1, 0] *= math.exp(-2 * rate * t)
    bare, _ = extend_to(table, t, correction=False)
    print(f"t = {t:.6f}: error {np.linalg.norm(apply(ch, a) - exact):.1e}"
          f" (dyadic approximant alone {np.linalg.norm(apply(bare, a) - exact):.1e}),"
          f" last Cauchy gap {rep.residual:.1e}")

p = np.diag([1.0, 1.0, 0.0])
omega = np.diag([0.6, 0.4, 0.0])
sigma = np.full((3, 3), 1 / 3)
print("\neps        true dist   certified   6 sqrt(eps) + eps")
for j in (2, 4, 6, 8):
    eps = 10.0 ** -j
    rho = (1 - 3 * eps) * omega + 3 * eps * sigma
    res = arveson_bound([rho], omega, p, eps)
    print(f"{eps:.0e}   {res.true_distance[0]:.3e}   {res.certified_bound[0]:.3e}   {6 * math.sqrt(eps) + eps:.3e}")
