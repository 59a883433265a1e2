"""Numerical laboratory for C*-algebra-linear Dirac operators in families."""

from .algebra import (
    AlgebraDescriptor, AlgebraElement, CliffordSignature, clifford_algebra,
    group_algebra, matrix_algebra, mul, norm, is_positive,
)
from .hilmod import HilbertModule, ModuleElement, ModuleOperator, free_module
from .calculus import (
    ScalarFunction, apply_function, bounded_transform, inv_sqrt_matrix,
    inv_sqrt_quadrature, resolvent, spectrum,
)
from .fields import (
    BaseComplex, HilbertField, OperatorFamily, circle, compactness_certificate,
    extend_by_zero, fredholm_certificate, interval, make_field, point,
)
from .dirac import (
    DiracFamilySpec, FiberGrid, LatticeDirac, LatticeDiracSpec, build_dirac,
    bunke_certificates, family_sweep, index, invertibility_at_infinity, rellich_probe,
)
from .ktheory import (
    KCycle, bott, direct_sum, inverse_concordance, morita, negate, point_cycle,
    point_index, thom, validate_cycle,
)

__version__ = "0.1.0"
