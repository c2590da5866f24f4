"""Dilating a commuting pair and what goes wrong without positivity.

Dephasing and scalar decay on M_2 commute strongly and doubly. Their
Toeplitz kernel at level 1 and radius 3 is positive, the Kolmogorov
space K carries translation operators, and conjugating by them gives
endomorphisms of B(K) that compress to the original semigroups.

The pair of conjugations by the nilpotent E_12 commutes, yet its kernel
is indefinite: the defect operator at the unit corner is diag(-1, 1).
"""

import numpy as np

from cpdil.channel import from_kraus
from cpdil.dilate import (
    brehmer_forms,
    build_kernel,
    check_pd,
    kolmogorov,
    verify_dilation_eq,
    verify_dilation_theorem,
    verify_endomorphism,
    verify_minimality,
)
from cpdil.errors import NotPD
from cpdil.prodsys import build_system, build_system_from_steps
from cpdil.semigroup import decay, dephasing

system = build_system(dephasing(0.8), decay(0.5), level=1, horizon=3)
kernel = build_kernel(system)
print(f"Gram form {kernel.gram.shape[0]}x{kernel.gram.shape[0]}, min eig {check_pd(kernel).details['min_eig']:.1e}")

ds = kolmogorov(kernel)
print(f"dim K = {ds.dim}, nested domain ranks {ds.ranks}")
for check in (verify_dilation_theorem, verify_endomorphism, verify_dilation_eq, verify_minimality):
    rep = check(ds)
    print(f"  {rep.name:<20} {'PASS' if rep.passed else 'FAIL'}  residual {rep.residual:.1e}")

# compressing alpha_s(b) for b supported on H recovers the channel
rng = np.random.default_rng(0)
a = rng.normal(size=(2, 2))
w0 = ds.embedding
lifted = ds.alpha((1, 1), w0 @ a @ w0.conj().T)
print("||W0* alpha_(1,1)(W0 a W0*) W0 - R S(a)|| =",
      f"{np.linalg.norm(w0.conj().T @ lifted @ w0 - system.channel((1, 1))(a)):.1e}")

t = from_kraus([np.array([[0, 1], [0, 0]], dtype=complex)])
bad = build_kernel(build_system_from_steps(t, t, horizon=2))
print("\nnilpotent pair: min eig", f"{check_pd(bad).details['min_eig']:.4f}")
print("defect I - T T* - T T* + T^2 T^2* =", brehmer_forms(bad)["cp_side"].real.tolist())
try:
    kolmogorov(bad)
except NotPD as exc:
    print("kolmogorov refused:", exc)
