"""Minimal dilations of strongly commuting CP semigroups on matrix algebras.

Modules
-------
numerics    Hermitian eigensolver, polar unitaries, matrix functions.
channel     Choi/Kraus representations of CP maps.
semigroup   Lindblad generators and sampled one-parameter semigroups.
strongcomm  Unitary witnesses of strong commutation.
gns         Hilbert-module side of strong commutation.
prodsys     Dyadic product systems and their representations.
dilate      Regular kernel, Kolmogorov space, induced endomorphisms.
extend      Norm bounds and extension of dyadic samples to real times.
cli         The ``cpdil`` command.
"""

from .channel import Channel, KrausFamily, compose, dual, from_kraus, from_superop, minimal_kraus
from .config import Config, load_config
from .dilate import (
    DilationSpace,
    ToeplitzKernel,
    build_kernel,
    check_pd,
    cross_level_check,
    induce_endos,
    kolmogorov,
    verify_dilation_eq,
    verify_dilation_theorem,
    verify_endomorphism,
    verify_minimality,
)
from .errors import CpdilError
from .extend import SampledSemigroup, arveson_bound, extend_to, two_param_assemble
from .prodsys import GridSystem, build_system, build_system_from_steps, make_system
from .report import Report
from .semigroup import CpSemigroup, Generator
from .strongcomm import FlipUnitary, sc_semigroup_check, witness_unitary

__version__ = "0.1.0"
