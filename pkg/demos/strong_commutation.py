"""Strong commutation at the Kraus level.

Two conjugations by anticommuting Paulis commute as channels, and the
unitary witness records the sign. A pair of Weyl channels commutes
although no choice of Kraus operators commutes elementwise; the witness
is a genuine unitary mixing. Generic random channels are rejected.
"""

import numpy as np

from cpdil.channel import from_kraus
from cpdil.errors import NotCommuting
from cpdil.fixtures import noncommuting_pairs, weyl_pair
from cpdil.strongcomm import witness_residual, witness_unitary

x = np.array([[0, 1], [1, 0]], dtype=complex)
z = np.diag([1.0, -1.0]).astype(complex)

fu = witness_unitary(from_kraus([x]), from_kraus([z]))
print("Pauli X, Z conjugations: u =", np.round(fu.u.real, 12).tolist())

rng = np.random.default_rng(7)
th, ph = weyl_pair(rng, 2)
fu = witness_unitary(th, ph)
print(f"Weyl pair: Kraus ranks {fu.m} and {fu.k}, witness residual {witness_residual(fu):.1e}")
print("  |u| =")
print(np.round(np.abs(fu.u), 3))

for label, a, b in noncommuting_pairs(rng, 3):
    try:
        witness_unitary(a, b)
    except NotCommuting as exc:
        print(f"{label}: rejected, ||[Theta, Phi]|| = {exc.defect:.2e}")
