"""Exact symbolic engine and verification harness for mapping-cone Thom
forms on a trivialized chart.

The coefficient ring is exact (rationals, with a formal sqrt(2*pi) unit),
so every asserted identity is checked as a polynomial identity: the
skew-adjoint Bianchi identity, commutation of the Berezin integral with
the cone structure, closedness of the Gaussian representative, its fiber
integral (1, 0), and the transgression formula for polynomial families.
"""

from .classical import classical_degeneration_residual, classical_thom_form
from .cone import (
    ConePair,
    ConnectionMatrix,
    EndomorphismField,
    cone_covariant,
    cone_d,
    validate_twist_form,
)
from .forms import ChartSpec, Form, FormTerm, tautological_section
from .instances import (
    GenConfig,
    InstanceFile,
    fingerprint,
    generate,
    load_instance,
    save_instance,
    seed_sequence,
)
from .report import SUITES, VerificationReport, run_check, run_suite
from .scalars import Monomial, Scalar, VarTable, var_table
from .thom import (
    ConnectionData,
    ThomForm,
    bianchi_residual,
    closedness_residual,
    conjugation_residual,
    exponent_contraction_residual,
    exponent_variation_residual,
    fiber_integral,
    fiber_integral_residual,
    gaussian_exponential,
    mechanism_residuals,
    structure_cross_residual,
    structure_forms,
    structure_forms_from_matrices,
    thom_exponent,
    thom_form,
    transgression_primitive,
    transgression_residual,
    variation_derivative_residual,
    variation_forms,
)

__version__ = "0.1.0"
