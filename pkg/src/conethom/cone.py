"""Mapping cone pairs over the form algebra.

A ConePair (a, b) models a degree-i element of the two-term complex
Omega^i + Omega^(i-1). The product, differential, covariant derivative,
contraction and Berezin integral act with the sign conventions fixed
below; second components never multiply each other.

Pairs are implemented directly with componentwise rules rather than by
adjoining a formal odd generator; the grading bookkeeping is per term, so
no degree field is stored and components may be inhomogeneous.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .forms import ChartSpec, Form, FormTerm, _collect, merge_sign
from .scalars import Monomial, Scalar, accumulate_product


class ConePair:
    """Ordered pair of forms; immutable by convention."""

    __slots__ = ("first", "second")

    def __init__(self, first: Form, second: Form):
        if first.chart != second.chart:
            raise ValueError("pair components live on different charts")
        self.first = first
        self.second = second

    @property
    def chart(self) -> ChartSpec:
        return self.first.chart

    @classmethod
    def zero(cls, chart: ChartSpec) -> "ConePair":
        z = Form.zero(chart)
        return cls(z, z)

    @classmethod
    def unit(cls, chart: ChartSpec) -> "ConePair":
        return cls(Form.one(chart), Form.zero(chart))

    def __add__(self, other: "ConePair") -> "ConePair":
        return ConePair(self.first + other.first, self.second + other.second)

    def __sub__(self, other: "ConePair") -> "ConePair":
        return ConePair(self.first - other.first, self.second - other.second)

    def __neg__(self) -> "ConePair":
        return ConePair(-self.first, -self.second)

    def scale(self, value) -> "ConePair":
        return ConePair(self.first.scale(value), self.second.scale(value))

    @property
    def is_zero(self) -> bool:
        return self.first.is_zero and self.second.is_zero

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConePair):
            return NotImplemented
        return self.first == other.first and self.second == other.second

    def wedge(self, other: "ConePair") -> "ConePair":
        """Pair product.

        First slot: plain graded product of the first components. Second
        slot: (second * first) plus (first * second) with the left first
        component twisted by its total parity, which accounts for the odd
        degree shift carried by the second slot. Equivalently this is the
        graded algebra with one adjoined odd generator spanning the second
        slot; in particular the product is associative and the covariant
        derivative, the differential and the contraction are odd
        derivations for it. Second components never meet.
        """
        first = self.first.wedge(other.first)
        second = self.second.wedge(other.first) + self.first.parity_involution().wedge(other.second)
        return ConePair(first, second)

    def contract_tautological(self) -> "ConePair":
        """Extended contraction: plain on the first slot, negated on the
        second, keeping the pair product and differential compatible."""
        return ConePair(
            self.first.contract_tautological(),
            -self.second.contract_tautological(),
        )

    def berezin(self) -> "ConePair":
        return ConePair(self.first.berezin(), self.second.berezin())

    def t_derivative(self) -> "ConePair":
        return ConePair(self.first.t_derivative(), self.second.t_derivative())

    def times_gaussian(self, power: int = 1) -> "ConePair":
        return ConePair(self.first.times_gaussian(power), self.second.times_gaussian(power))

    def to_obj(self) -> dict:
        return {"first": self.first.to_obj(), "second": self.second.to_obj()}

    @classmethod
    def from_obj(cls, chart: ChartSpec, obj: dict) -> "ConePair":
        if not isinstance(obj, dict):
            raise ValueError("pair payload must be an object with first and second")
        return cls(
            Form.from_obj(chart, obj.get("first", [])),
            Form.from_obj(chart, obj.get("second", [])),
        )

    def __str__(self) -> str:
        return f"({self.first}, {self.second})"

    def __repr__(self) -> str:
        return f"ConePair{self}"


def validate_twist_form(omega: Form) -> None:
    """The twist must be a closed base 2-form."""
    if not omega.is_base_form(degree=2):
        raise ValueError("twist form must be a base 2-form (dx only, no weight, no fiber word)")
    residual = omega.d()
    if not residual.is_zero:
        term, coeff = residual.sorted_terms()[0]
        names = "^".join(omega.chart.one_form_names(term.one_forms))
        raise ValueError(f"twist form is not closed: d has nonzero term ({coeff}) {names}")


def cone_d(pair: ConePair, omega: Form, *, check: bool = True) -> ConePair:
    """Differential of the twisted two-term complex: (da + omega^b, -db).

    ``check=False`` skips the twist-form validation; that path exists for
    the negative-control harness and for conjugation identities where the
    twist is a general closed 2-form on the total space.
    """
    if check:
        validate_twist_form(omega)
    return ConePair(pair.first.d() + omega.wedge(pair.second), -pair.second.d())


class EndomorphismField:
    """Exactly skew matrix of base functions acting on the fiber frame.

    entries[i][j] is the coefficient of e_i in the image of e_j (0-based).
    Entries may depend on the base variables and on t, never on the fiber
    variables; skewness is validated at construction (``check=False`` is a
    deliberate bypass for negative-control tests).
    """

    __slots__ = ("chart", "entries")

    def __init__(self, chart: ChartSpec, entries: Sequence[Sequence[Scalar]], *, check: bool = True):
        self.chart = chart
        self.entries = tuple(tuple(row) for row in entries)
        if check:
            self._validate()

    def _validate(self) -> None:
        n = self.chart.n
        table = self.chart.table
        if len(self.entries) != n or any(len(row) != n for row in self.entries):
            raise ValueError(f"endomorphism matrix must be {n}x{n}")
        for i, row in enumerate(self.entries):
            for j, entry in enumerate(row):
                if entry.table != table:
                    raise ValueError(f"entry [{i}][{j}] uses a foreign variable table")
                for k in range(1, n + 1):
                    if entry.depends_on(f"y{k}"):
                        raise ValueError(f"entry [{i}][{j}] depends on fiber variable y{k}")
                if entry.depends_on("s"):
                    raise ValueError(f"entry [{i}][{j}] carries the unit s")
        for i in range(n):
            for j in range(i, n):
                if (self.entries[i][j] + self.entries[j][i]).terms:
                    raise ValueError(
                        f"endomorphism not skew: entries [{i}][{j}] and [{j}][{i}] do not cancel"
                    )

    @classmethod
    def zero(cls, chart: ChartSpec) -> "EndomorphismField":
        z = Scalar.zero(chart.table)
        n = chart.n
        return cls(chart, [[z] * n for _ in range(n)])

    def entry(self, i: int, j: int) -> Scalar:
        return self.entries[i][j]

    @property
    def is_zero(self) -> bool:
        return all(not e.terms for row in self.entries for e in row)

    def t_derivative(self) -> "EndomorphismField":
        return EndomorphismField(
            self.chart,
            [[e.partial("t") for e in row] for row in self.entries],
            check=False,
        )

    def derivation(self, form: Form) -> Form:
        """Extend the matrix action as a derivation of the fiber word.

        Each fiber generator in each term is replaced in place by its
        matrix image; the replacement sign is the parity of moving the new
        generator to its sorted slot. Vanishes on fiber-degree-0 terms.
        """
        if form.chart != self.chart:
            raise ValueError("form lives on a different chart")
        n = self.chart.n
        acc: dict[FormTerm, dict[Monomial, Fraction]] = {}
        for term, coeff in form.terms.items():
            g, o, f = term
            rest = f
            while rest:
                v_bit = rest & -rest
                rest ^= v_bit
                v = v_bit.bit_length() - 1
                jm1 = (f & (v_bit - 1)).bit_count()
                f_rest = f ^ v_bit
                for l in range(n):
                    l_bit = 1 << l
                    if l_bit & f_rest:
                        continue
                    phi_lv = self.entries[l][v]
                    if not phi_lv.terms:
                        continue
                    c_l = (f_rest & (l_bit - 1)).bit_count()
                    sign = -1 if (c_l - jm1) & 1 else 1
                    key = FormTerm(g, o, f_rest | l_bit)
                    bucket = acc.get(key)
                    if bucket is None:
                        bucket = acc[key] = {}
                    accumulate_product(bucket, coeff.terms, phi_lv.terms, sign)
        return Form._raw(form.chart, _collect(form.chart.table, acc))


class ConnectionMatrix:
    """Exactly skew matrix of base 1-forms describing a metric connection.

    entries[i][j] pairs e_i with the derivative of e_j (0-based). Each
    entry is a base 1-form: dx generators only, no weight, no fiber word,
    coefficients free of fiber variables.
    """

    __slots__ = ("chart", "entries")

    def __init__(self, chart: ChartSpec, entries: Sequence[Sequence[Form]], *, check: bool = True):
        self.chart = chart
        self.entries = tuple(tuple(row) for row in entries)
        if check:
            self._validate()

    def _validate(self) -> None:
        n = self.chart.n
        if len(self.entries) != n or any(len(row) != n for row in self.entries):
            raise ValueError(f"connection matrix must be {n}x{n}")
        for i, row in enumerate(self.entries):
            for j, entry in enumerate(row):
                if entry.chart != self.chart:
                    raise ValueError(f"entry [{i}][{j}] lives on a foreign chart")
                if not entry.is_base_form(degree=1):
                    raise ValueError(f"entry [{i}][{j}] is not a base 1-form")
                for coeff in entry.terms.values():
                    if coeff.depends_on("s"):
                        raise ValueError(f"entry [{i}][{j}] carries the unit s")
        for i in range(n):
            for j in range(i, n):
                if not (self.entries[i][j] + self.entries[j][i]).is_zero:
                    raise ValueError(
                        f"connection not skew: entries [{i}][{j}] and [{j}][{i}] do not cancel"
                    )

    @classmethod
    def zero(cls, chart: ChartSpec) -> "ConnectionMatrix":
        z = Form.zero(chart)
        n = chart.n
        return cls(chart, [[z] * n for _ in range(n)])

    def entry(self, i: int, j: int) -> Form:
        return self.entries[i][j]

    @property
    def is_zero(self) -> bool:
        return all(e.is_zero for row in self.entries for e in row)

    def t_derivative(self) -> "ConnectionMatrix":
        return ConnectionMatrix(
            self.chart,
            [[e.t_derivative() for e in row] for row in self.entries],
            check=False,
        )

    def covariant_d(self, form: Form) -> Form:
        """Covariant derivative on exterior-bundle valued forms.

        Exterior derivative on the coefficient and one-form part, plus
        (-1)^(form degree) times the wedge with the fiber derivation term,
        where each fiber generator is replaced in place by its connection
        image. The connection 1-form pulls out in front of the fiber word
        with no crossing sign (the derivative is induced from the
        directional one, where the coefficient is a plain function); only
        sorting the replaced generator contributes a sign. This is exactly
        the odd-derivation extension: on products it satisfies the graded
        Leibniz rule, and it reduces to the plain exterior derivative on
        fiber-degree-0 forms.
        """
        if form.chart != self.chart:
            raise ValueError("form lives on a different chart")
        n = self.chart.n
        acc: dict[FormTerm, dict[Monomial, Fraction]] = {}
        for term, coeff in form.terms.items():
            g, o, f = term
            if not f:
                continue
            base_sign = -1 if o.bit_count() & 1 else 1
            rest = f
            while rest:
                v_bit = rest & -rest
                rest ^= v_bit
                v = v_bit.bit_length() - 1
                jm1 = (f & (v_bit - 1)).bit_count()
                f_rest = f ^ v_bit
                for l in range(n):
                    l_bit = 1 << l
                    if l_bit & f_rest:
                        continue
                    ent = self.entries[l][v]
                    if ent.is_zero:
                        continue
                    c_l = (f_rest & (l_bit - 1)).bit_count()
                    sign0 = base_sign
                    if (c_l - jm1) & 1:
                        sign0 = -sign0
                    new_f = f_rest | l_bit
                    for t2, c2 in ent.terms.items():
                        o2 = t2.one_forms
                        if o2 & o:
                            continue
                        sign = sign0 * merge_sign(o, o2)
                        key = FormTerm(g, o | o2, new_f)
                        bucket = acc.get(key)
                        if bucket is None:
                            bucket = acc[key] = {}
                        accumulate_product(bucket, coeff.terms, c2.terms, sign)
        return form.d() + Form._raw(form.chart, _collect(form.chart.table, acc))


def cone_covariant(
    eta: ConnectionMatrix,
    phi: EndomorphismField,
    omega: Form,
    pair: ConePair,
    *,
    check: bool = True,
) -> ConePair:
    """Covariant derivative of the twisted two-term complex:
    (covariant d of a + omega ^ b, derivation of a - covariant d of b)."""
    if check:
        validate_twist_form(omega)
    return ConePair(
        eta.covariant_d(pair.first) + omega.wedge(pair.second),
        phi.derivation(pair.first) - eta.covariant_d(pair.second),
    )
