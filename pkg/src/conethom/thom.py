"""Gaussian Thom representative of the twisted two-term complex.

Builds, on one trivialized chart with an oriented orthonormal frame, the
pair-valued Gaussian form whose cone differential vanishes and whose
fiber integral is exactly (1, 0), together with the transgression
primitive for polynomial t-families. Every theorem-level identity is
exposed as a residual function returning the exact difference of the two
sides, so a verification layer can report the first offending term.

Orientation convention, pinned once: the canonical generator order puts
the dx block before the dy block, and fiber integration of the word
(dx part)^(dy1^..^dyn) carries sign +1. This is the unique choice making
the fiber integral of the representative equal (1, 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .cone import (
    ConePair,
    ConnectionMatrix,
    EndomorphismField,
    cone_covariant,
    cone_d,
    validate_twist_form,
)
from .forms import ChartSpec, Form, FormTerm, tautological_section
from .scalars import Monomial, Scalar


class ConnectionData:
    """One verification instance: chart, skew connection and endomorphism
    matrices, and a closed base 2-form twist.

    The twist may not depend on t (families move only the connection and
    the endomorphism). ``check=False`` bypasses validation; it exists for
    negative-control tests only.
    """

    __slots__ = ("chart", "eta", "phi", "omega", "t_dependent")

    def __init__(
        self,
        chart: ChartSpec,
        eta: ConnectionMatrix,
        phi: EndomorphismField,
        omega: Form,
        *,
        check: bool = True,
    ):
        self.chart = chart
        self.eta = eta
        self.phi = phi
        self.omega = omega
        if check:
            if eta.chart != chart or phi.chart != chart or omega.chart != chart:
                raise ValueError("instance components live on different charts")
            validate_twist_form(omega)
            for coeff in omega.terms.values():
                if coeff.depends_on("t"):
                    raise ValueError("twist form may not depend on the family parameter t")
        self.t_dependent = any(
            e.depends_on("t") for row in phi.entries for e in row
        ) or any(
            c.depends_on("t") for row in eta.entries for f in row for c in f.terms.values()
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConnectionData):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.eta.entries == other.eta.entries
            and self.phi.entries == other.phi.entries
            and self.omega == other.omega
        )


def curvature_matrix(eta: ConnectionMatrix) -> list[list[Form]]:
    """Entrywise d(eta) + eta ^ eta."""
    n = eta.chart.n
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = eta.entry(i, j).d()
            for k in range(n):
                acc = acc + eta.entry(i, k).wedge(eta.entry(k, j))
            row.append(acc)
        out.append(row)
    return out


def _fiber_pairing(form: Form, chart: ChartSpec, j: int) -> Form:
    """Frame pairing of a fiber-degree-1 form against e_(j+1): keep the
    terms carrying exactly that generator and strip it."""
    bit = chart.fiber_bit(j + 1)
    res = {
        FormTerm(g, o, 0): coeff
        for (g, o, f), coeff in form.terms.items()
        if f == bit
    }
    return Form._raw(chart, res)


def _pair_word(chart: ChartSpec, i: int, j: int) -> Form:
    """The fiber word e_(i+1) ^ e_(j+1) for i < j."""
    mask = chart.fiber_bit(i + 1) | chart.fiber_bit(j + 1)
    return Form._raw(chart, {FormTerm(0, 0, mask): Scalar.one(chart.table)})


def structure_forms(data: ConnectionData) -> tuple[Form, Form]:
    """Curvature-type and endomorphism-type invariants of an instance.

    Built operationally: the first collects the frame pairings of the
    squared covariant derivative plus the twist wedged with the
    endomorphism image, the second the pairings of the commutator of the
    endomorphism with the covariant derivative, each antisymmetrized into
    degree-2 fiber words.
    """
    chart = data.chart
    n = chart.n
    q_total = Form.zero(chart)
    s_total = Form.zero(chart)
    for i in range(n):
        e_i = Form.fiber(chart, i + 1)
        nabla_e = data.eta.covariant_d(e_i)
        q_i = data.eta.covariant_d(nabla_e) + data.omega.wedge(data.phi.derivation(e_i))
        s_i = data.phi.derivation(nabla_e) - data.eta.covariant_d(data.phi.derivation(e_i))
        for j in range(i + 1, n):
            word = _pair_word(chart, i, j)
            qc = _fiber_pairing(q_i, chart, j)
            if not qc.is_zero:
                q_total = q_total + qc.wedge(word)
            sc = _fiber_pairing(s_i, chart, j)
            if not sc.is_zero:
                s_total = s_total + sc.wedge(word)
    return q_total, s_total


def structure_forms_from_matrices(data: ConnectionData) -> tuple[Form, Form]:
    """Independent route to the structure forms through the matrix
    identities: curvature entries from d(eta) + eta^eta, and the explicit
    commutator expansion for the endomorphism part."""
    chart = data.chart
    n = chart.n
    eta, phi = data.eta, data.phi
    R = curvature_matrix(eta)
    q_total = Form.zero(chart)
    s_total = Form.zero(chart)
    for i in range(n):
        for j in range(i + 1, n):
            word = _pair_word(chart, i, j)
            qc = R[j][i] + data.omega.scale(phi.entry(j, i))
            sc = Form.zero(chart) - Form.from_scalar(chart, phi.entry(j, i)).d()
            for k in range(n):
                sc = sc + eta.entry(k, i).scale(phi.entry(j, k))
                sc = sc - eta.entry(j, k).scale(phi.entry(k, i))
            if not qc.is_zero:
                q_total = q_total + qc.wedge(word)
            if not sc.is_zero:
                s_total = s_total + sc.wedge(word)
    return q_total, s_total


def thom_exponent(data: ConnectionData) -> ConePair:
    """The pair whose Gaussian exponential yields the Thom representative:
    (half the squared fiber norm, 0) + covariant derivative of the
    tautological pair - the structure forms."""
    chart = data.chart
    table = chart.table
    v = tautological_section(chart)
    half_norm = Scalar.zero(table)
    for k in range(1, chart.n + 1):
        half_norm = half_norm + Scalar.term(table, Fraction(1, 2), {f"y{k}": 2})
    q_form, s_form = structure_forms(data)
    first = Form.from_scalar(chart, half_norm) + data.eta.covariant_d(v) - q_form
    second = data.phi.derivation(v) - s_form
    return ConePair(first, second)


def gaussian_exponential(exponent: ConePair, *, stats: dict | None = None) -> ConePair:
    """exp(-exponent) with the quadratic scalar part folded into the
    Gaussian weight.

    The scalar part must be exactly half the squared fiber norm; the
    remainder raises the fiber degree in every term, so its wedge powers
    vanish in finitely many steps. The series is iterated until the power
    is exactly zero, and the fiber-degree bound (rank + 1) is asserted.
    """
    chart = exponent.chart
    table = chart.table
    half_norm = Scalar.zero(table)
    for k in range(1, chart.n + 1):
        half_norm = half_norm + Scalar.term(table, Fraction(1, 2), {f"y{k}": 2})
    scalar_part = Scalar.zero(table)
    for (g, o, f), coeff in exponent.first.terms.items():
        if g:
            raise ValueError("malformed exponent: terms may not carry Gaussian weight")
        if not o and not f:
            scalar_part = scalar_part + coeff
    for (g, o, f), coeff in exponent.second.terms.items():
        if g:
            raise ValueError("malformed exponent: terms may not carry Gaussian weight")
    if scalar_part != half_norm:
        raise ValueError("malformed exponent: scalar part is not half the squared fiber norm")
    remainder = exponent - ConePair(Form.from_scalar(chart, scalar_part), Form.zero(chart))
    for component in (remainder.first, remainder.second):
        for term in component.terms:
            if not term.fiber_gens:
                raise ValueError("malformed exponent: remainder must raise the fiber degree")
    neg = -remainder
    total = ConePair.unit(chart)
    power = ConePair.unit(chart)
    k = 0
    max_terms = 0
    while True:
        k += 1
        power = power.wedge(neg).scale(Fraction(1, k))
        max_terms = max(max_terms, len(power.first.terms) + len(power.second.terms))
        if power.is_zero:
            break
        if k > chart.n + 1:
            raise ArithmeticError("exponential series failed to stop within the fiber-degree bound")
        total = total + power
    if stats is not None:
        stats["max_intermediate_terms"] = max(stats.get("max_intermediate_terms", 0), max_terms)
        stats["series_length"] = k
    return total.times_gaussian(1)


@dataclass(frozen=True)
class ThomForm:
    """Normalized Berezin integral of the Gaussian exponential.

    The first component is homogeneous of degree rank, the second of
    degree rank - 1, and every term carries Gaussian weight exactly 1.
    """

    pair: ConePair
    normalization: Scalar

    def __post_init__(self):
        n = self.pair.chart.n
        for component, degree in ((self.pair.first, n), (self.pair.second, n - 1)):
            for term in component.terms:
                if term.gauss != 1:
                    raise ValueError("Thom representative term without unit Gaussian weight")
                if term.one_forms.bit_count() != degree:
                    raise ValueError("Thom representative has a term of unexpected degree")

    @property
    def chart(self) -> ChartSpec:
        return self.pair.chart


def thom_normalization(chart: ChartSpec) -> Scalar:
    """(-1)^(n(n+1)/2) s^(-n), with s the sqrt(2*pi) unit."""
    n = chart.n
    sign = -1 if (n * (n + 1) // 2) & 1 else 1
    return Scalar.s_power(chart.table, -n).scaled(sign)


def thom_form(data: ConnectionData, *, stats: dict | None = None) -> ThomForm:
    norm = thom_normalization(data.chart)
    expo = gaussian_exponential(thom_exponent(data), stats=stats)
    return ThomForm(pair=expo.berezin().scale(norm), normalization=norm)


_DOUBLE_FACTORIAL_CACHE: dict[int, int] = {-1: 1, 1: 1}


def double_factorial(k: int) -> int:
    """k!! for odd k >= -1."""
    if k < -1 or not k & 1:
        raise ValueError("double factorial is used for odd arguments only")
    if k not in _DOUBLE_FACTORIAL_CACHE:
        _DOUBLE_FACTORIAL_CACHE[k] = k * double_factorial(k - 2)
    return _DOUBLE_FACTORIAL_CACHE[k]


def _fiber_integral_form(form: Form) -> Form:
    """Push a total-space form down the fiber.

    Only terms carrying every dy generator survive; the canonical storage
    order already places the dx block before the dy block, so the
    reordering sign is +1. Each fiber variable then integrates against the
    unit-variance Gaussian: y^(2k) contributes (2k-1)!! s and odd powers
    vanish, with one factor of s per fiber direction.
    """
    chart = form.chart
    table = chart.table
    dy_mask = chart.dy_mask
    m, n = chart.m, chart.n
    buckets: dict[FormTerm, dict[Monomial, Fraction]] = {}
    for (g, o, f), coeff in form.terms.items():
        if o & dy_mask != dy_mask:
            continue
        if f:
            raise ValueError("cannot integrate a term still carrying fiber generators")
        if g == 0:
            raise ValueError("divergent fiber integral: full dy word with no Gaussian weight")
        if g != 1:
            raise ValueError(f"unsupported Gaussian weight {g}: the moment table is fixed at weight 1")
        key = FormTerm(0, o & ~dy_mask, 0)
        bucket = buckets.get(key)
        if bucket is None:
            bucket = buckets[key] = {}
        for mono, q in coeff.terms.items():
            moment = 1
            for j in range(n):
                e = mono.exps[m + j]
                if e & 1:
                    moment = 0
                    break
                if e:
                    moment *= double_factorial(e - 1)
            if not moment:
                continue
            exps = list(mono.exps)
            for j in range(n):
                exps[m + j] = 0
            new_mono = Monomial(tuple(exps), mono.s + n)
            q = q * moment
            cur = bucket.get(new_mono)
            bucket[new_mono] = q if cur is None else cur + q
    out = {}
    for key, bucket in buckets.items():
        clean = {mo: c for mo, c in bucket.items() if c}
        if clean:
            out[key] = Scalar._raw(table, clean)
    return Form._raw(chart, out)


def fiber_integral(pair: ConePair) -> ConePair:
    return ConePair(_fiber_integral_form(pair.first), _fiber_integral_form(pair.second))


def variation_forms(data: ConnectionData) -> tuple[Form, Form]:
    """Antisymmetrized t-derivatives of the connection and endomorphism
    matrices, as degree-2 fiber words."""
    chart = data.chart
    n = chart.n
    y_total = Form.zero(chart)
    z_total = Form.zero(chart)
    for i in range(n):
        for j in range(i + 1, n):
            word = _pair_word(chart, i, j)
            yc = data.eta.entry(j, i).t_derivative()
            if not yc.is_zero:
                y_total = y_total + yc.wedge(word)
            zc = data.phi.entry(j, i).partial("t")
            if zc.terms:
                z_total = z_total + Form.from_scalar(chart, zc).wedge(word)
    return y_total, z_total


def transgression_primitive(data: ConnectionData) -> ConePair:
    """The pair whose cone differential equals the t-derivative of the
    Thom representative."""
    y_form, z_form = variation_forms(data)
    expo = gaussian_exponential(thom_exponent(data))
    norm = thom_normalization(data.chart)
    return ConePair(y_form, z_form).wedge(expo).berezin().scale(norm)


# ----------------------------------------------------------------------
# identity residuals: each returns the exact difference of the two sides
# of one asserted identity, so zero means the identity holds on the
# instance. Validation is skipped inside so deliberately broken instances
# produce residuals instead of exceptions.


def bianchi_residual(data: ConnectionData) -> ConePair:
    """Covariant derivative of the structure-form pair."""
    q_form, s_form = structure_forms(data)
    return cone_covariant(data.eta, data.phi, data.omega, ConePair(q_form, s_form), check=False)


def structure_cross_residual(data: ConnectionData) -> ConePair:
    """Operational structure forms minus the matrix-formula route."""
    q_op, s_op = structure_forms(data)
    q_mx, s_mx = structure_forms_from_matrices(data)
    return ConePair(q_op - q_mx, s_op - s_mx)


def closedness_residual(data: ConnectionData, *, stats: dict | None = None) -> ConePair:
    """Cone differential of the Thom representative."""
    u = thom_form(data, stats=stats)
    return cone_d(u.pair, data.omega, check=False)


def fiber_integral_residual(data: ConnectionData, *, stats: dict | None = None) -> ConePair:
    """Fiber integral of the Thom representative minus (1, 0)."""
    u = thom_form(data, stats=stats)
    return fiber_integral(u.pair) - ConePair.unit(data.chart)


def exponent_contraction_residual(data: ConnectionData) -> ConePair:
    """(covariant derivative + contraction) of the exponent pair."""
    a = thom_exponent(data)
    return (
        cone_covariant(data.eta, data.phi, data.omega, a, check=False)
        + a.contract_tautological()
    )


def mechanism_residuals(data: ConnectionData) -> dict[str, Form]:
    """The three pointwise identities behind the vanishing of
    (covariant derivative + contraction) on the exponent."""
    chart = data.chart
    v = tautological_section(chart)
    q_form, s_form = structure_forms(data)
    phi_v = data.phi.derivation(v)
    nabla_v = data.eta.covariant_d(v)
    curv_v = data.eta.covariant_d(nabla_v) + data.omega.wedge(phi_v)
    comm_v = data.phi.derivation(nabla_v) - data.eta.covariant_d(phi_v)
    return {
        "skew-pairing": phi_v.contract_tautological(),
        "curvature-contraction": q_form.contract_tautological() - curv_v,
        "commutator-contraction": -s_form.contract_tautological() - comm_v,
    }


def variation_derivative_residual(data: ConnectionData) -> ConePair:
    """Covariant derivative of the variation pair minus the t-derivative
    of the structure-form pair."""
    y_form, z_form = variation_forms(data)
    q_form, s_form = structure_forms(data)
    lhs = cone_covariant(data.eta, data.phi, data.omega, ConePair(y_form, z_form), check=False)
    rhs = ConePair(q_form.t_derivative(), s_form.t_derivative())
    return lhs - rhs


def exponent_variation_residual(data: ConnectionData) -> ConePair:
    """t-derivative of the exponent plus (covariant derivative +
    contraction) of the variation pair."""
    a = thom_exponent(data)
    y_form, z_form = variation_forms(data)
    yz = ConePair(y_form, z_form)
    return a.t_derivative() + (
        cone_covariant(data.eta, data.phi, data.omega, yz, check=False)
        + yz.contract_tautological()
    )


def transgression_residual(data: ConnectionData, *, stats: dict | None = None) -> ConePair:
    """t-derivative of the Thom representative minus the cone differential
    of the transgression primitive, as polynomials in t."""
    u = thom_form(data, stats=stats)
    primitive = transgression_primitive(data)
    return u.pair.t_derivative() - cone_d(primitive, data.omega, check=False)


def conjugation_residual(data: ConnectionData, mu: Form, pair: ConePair) -> ConePair:
    """Twisting by an exact perturbation commutes with the shear map
    (a, b) -> (a + mu^b, b): residual of the conjugation identity for a
    1-form mu on the total space."""
    sheared = ConePair(pair.first + mu.wedge(pair.second), pair.second)
    lhs = cone_d(sheared, data.omega, check=False)
    shifted_twist = data.omega + mu.d()
    inner = cone_d(pair, shifted_twist, check=False)
    rhs = ConePair(inner.first + mu.wedge(inner.second), inner.second)
    return lhs - rhs
