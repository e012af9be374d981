# Copyright (c) 2026 OPAlchemy developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from opalchemy.exceptions import OPAlchemyValidationError
from opalchemy.precision import Precision, default_precision, infer_precision, max_abs

logger = logging.getLogger(__name__)


def _result_dtype(*arrays: np.ndarray):
    return object if any(a.dtype == object for a in arrays) else np.float64


class Polynomial:
    """Real polynomial stored by ascending-power coefficients.

    Trailing zero coefficients are dropped on construction, so the zero polynomial
    has an empty coefficient array and ``degree`` ``None``.

    Args:
        coeffs: Coefficients ``c_0, c_1, ...`` of ``c_0 + c_1 t + ...``.
        precision: Converts the coefficients to this precision when given.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = (), precision: Optional[Precision] = None):
        if precision is not None:
            values = precision.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs)
        else:
            values = np.asarray(coeffs if isinstance(coeffs, np.ndarray) else list(coeffs))
        if values.dtype != object:
            values = values.astype(np.float64)
        values = values.reshape(-1)
        nonzero = [i for i, c in enumerate(values) if c != 0]
        values = values[: nonzero[-1] + 1].copy() if nonzero else values[:0].copy()
        values.setflags(write=False)
        self.coeffs = values

    @classmethod
    def zero(cls, precision: Optional[Precision] = None) -> "Polynomial":
        return cls([], precision=precision or default_precision())

    @classmethod
    def constant(cls, value, precision: Optional[Precision] = None) -> "Polynomial":
        return cls([value], precision=precision)

    @classmethod
    def monomial(cls, k: int, precision: Optional[Precision] = None) -> "Polynomial":
        return cls([0] * k + [1], precision=precision or default_precision())

    @property
    def degree(self) -> Optional[int]:
        """Degree of the polynomial, ``None`` for the zero polynomial."""
        return len(self.coeffs) - 1 if len(self.coeffs) else None

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    @property
    def leading_coefficient(self):
        return self.coeffs[-1] if len(self.coeffs) else 0

    @property
    def precision(self) -> Precision:
        return infer_precision(self.coeffs)

    def coefficients(self, size: int) -> np.ndarray:
        """Coefficients zero-padded (or cut) to ``size`` entries."""
        out = np.zeros(size, dtype=self.coeffs.dtype)
        count = min(size, len(self.coeffs))
        out[:count] = self.coeffs[:count]
        return out

    def max_abs_coefficient(self) -> float:
        return max_abs(self.coeffs)

    def to_floats(self) -> List[float]:
        return [float(c) for c in self.coeffs]

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        return Polynomial(np.array([other], dtype=object if not isinstance(other, (int, float)) else np.float64))

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        dtype = _result_dtype(self.coeffs, other.coeffs)
        out = np.zeros(max(len(self.coeffs), len(other.coeffs)), dtype=dtype)
        out[: len(self.coeffs)] += self.coeffs
        out[: len(other.coeffs)] += other.coeffs
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(-self.coeffs)

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial(self.coeffs * other)
        if self.is_zero or other.is_zero:
            return Polynomial(self.coeffs[:0])
        dtype = _result_dtype(self.coeffs, other.coeffs)
        if dtype != object:
            return Polynomial(np.convolve(self.coeffs, other.coeffs))
        out = np.zeros(len(self.coeffs) + len(other.coeffs) - 1, dtype=object)
        for i, c in enumerate(self.coeffs):
            out[i : i + len(other.coeffs)] += c * other.coeffs
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "Polynomial":
        if exponent < 0:
            raise OPAlchemyValidationError("negative polynomial power")
        result = Polynomial(np.ones(1, dtype=self.coeffs.dtype))
        for _ in range(exponent):
            result = result * self
        return result

    def __call__(self, t):
        """Evaluates the polynomial at ``t`` by Horner's scheme."""
        result = t * 0
        for c in self.coeffs[::-1]:
            result = result * t + c
        return result

    def derivative(self, order: int = 1) -> "Polynomial":
        if order < 0:
            raise OPAlchemyValidationError("derivative order must be nonnegative")
        if order == 0:
            return self
        if len(self.coeffs) <= order:
            return Polynomial(self.coeffs[:0])
        factors = np.array(
            [math.perm(j, order) for j in range(order, len(self.coeffs))],
            dtype=object if self.coeffs.dtype == object else np.float64,
        )
        return Polynomial(self.coeffs[order:] * factors)

    def divmod(self, divisor: "Polynomial") -> Tuple["Polynomial", "Polynomial"]:
        """Long division, returning ``(quotient, remainder)``."""
        if divisor.is_zero:
            raise OPAlchemyValidationError("division by the zero polynomial")
        dtype = _result_dtype(self.coeffs, divisor.coeffs)
        remainder = self.coeffs.astype(dtype)
        d = divisor.coeffs.astype(dtype)
        shift = len(d) - 1
        if len(remainder) <= shift:
            return Polynomial(remainder[:0]), self
        quotient = np.zeros(len(remainder) - shift, dtype=dtype)
        for k in range(len(remainder) - 1 - shift, -1, -1):
            coefficient = remainder[k + shift] / d[-1]
            quotient[k] = coefficient
            remainder[k : k + shift + 1] -= coefficient * d
        return Polynomial(quotient), Polynomial(remainder[:shift])

    def compose(self, inner: "Polynomial") -> "Polynomial":
        """Returns ``self(inner(t))``."""
        result = Polynomial(self.coeffs[:0])
        for c in self.coeffs[::-1]:
            result = result * inner + Polynomial(np.array([c], dtype=self.coeffs.dtype))
        return result

    def __repr__(self) -> str:
        return f"Polynomial({self.to_floats()})"


@dataclass(frozen=True)
class FactoredNodes:
    """The polynomial h given by its distinct real roots and their multiplicities.

    Attributes:
        nodes: Pairs ``(root, multiplicity)``.
    """

    nodes: Tuple[Tuple[float, int], ...]

    def __post_init__(self):
        nodes = []
        for pair in self.nodes:
            root, multiplicity = pair
            if int(multiplicity) != multiplicity or multiplicity < 1:
                raise OPAlchemyValidationError(f"multiplicity of root {root} must be a positive integer")
            nodes.append((float(root), int(multiplicity)))
        if not nodes:
            raise OPAlchemyValidationError("h must have at least one root (N >= 1)")
        roots = [root for root, _ in nodes]
        if len(set(roots)) != len(roots):
            raise OPAlchemyValidationError(f"roots of h must be pairwise distinct, got {roots}")
        object.__setattr__(self, "nodes", tuple(nodes))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence]) -> "FactoredNodes":
        return cls(tuple(tuple(pair) for pair in pairs))

    @property
    def N(self) -> int:
        return sum(multiplicity for _, multiplicity in self.nodes)

    @property
    def roots(self) -> Tuple[float, ...]:
        return tuple(root for root, _ in self.nodes)

    @property
    def multiplicities(self) -> Tuple[int, ...]:
        return tuple(multiplicity for _, multiplicity in self.nodes)

    def jet_index(self) -> List[Tuple[int, int]]:
        """``(node, derivative order)`` for every jet entry, node-major."""
        return [(node, order) for node, (_, multiplicity) in enumerate(self.nodes) for order in range(multiplicity)]

    def expand(self, precision: Optional[Precision] = None) -> Polynomial:
        return _expand(self, precision or default_precision())


@lru_cache(maxsize=256)
def _expand(nodes: FactoredNodes, precision: Precision) -> Polynomial:
    result = Polynomial([1], precision=precision)
    for root, multiplicity in nodes.nodes:
        factor = Polynomial([-precision.scalar(root), 1], precision=precision)
        for _ in range(multiplicity):
            result = result * factor
    return result


def evaluate(p: Polynomial, t):
    return p(t)


def derivative(p: Polynomial, order: int) -> Polynomial:
    return p.derivative(order)


def expand_factored(h: FactoredNodes, precision: Optional[Precision] = None) -> Polynomial:
    return h.expand(precision)


def h_basis_decompose(f: Polynomial, h: FactoredNodes, precision: Optional[Precision] = None) -> np.ndarray:
    """Coefficients ``a[k, m]`` with ``f = sum a[k, m] t^m h^k`` and ``0 <= m < N``.

    The table has ``deg(f) // N + 1`` rows; the zero polynomial gives one row of zeros.
    """
    precision = precision or infer_precision(f.coeffs)
    divisor = h.expand(precision)
    rows = 1 if f.is_zero else f.degree // h.N + 1
    table = precision.zeros((rows, h.N))
    quotient = f
    for k in range(rows):
        quotient, remainder = quotient.divmod(divisor)
        table[k] = remainder.coefficients(h.N)
    return table


def s_slice(f: Polynomial, h: FactoredNodes, k: int, precision: Optional[Precision] = None) -> Polynomial:
    """The part ``sum_m a[k, m] t^m h^k`` of f."""
    precision = precision or infer_precision(f.coeffs)
    table = h_basis_decompose(f, h, precision)
    if k < 0 or k >= table.shape[0]:
        return Polynomial.zero(precision)
    return Polynomial(table[k]) * h.expand(precision) ** k


def r_unfold(f: Polynomial, h: FactoredNodes, k: int, precision: Optional[Precision] = None) -> Polynomial:
    """``R_k(f)(y) = sum_j a[j, k] y^j``, so that ``f(t) = sum_k t^k R_k(f)(h(t))``."""
    if k < 0 or k >= h.N:
        raise OPAlchemyValidationError(f"unfold index {k} outside [0, {h.N - 1}]")
    table = h_basis_decompose(f, h, precision)
    return Polynomial(table[:, k])


def r_fold(parts: Sequence[Polynomial], h: FactoredNodes, precision: Optional[Precision] = None) -> Polynomial:
    """Inverse of :func:`r_unfold`: ``sum_k t^k parts[k](h(t))``."""
    precision = precision or default_precision()
    expanded = h.expand(precision)
    result = Polynomial.zero(precision)
    for k, part in enumerate(parts):
        result = result + Polynomial.monomial(k, precision) * part.compose(expanded)
    return result


def monomial_jets(h: FactoredNodes, size: int, precision: Optional[Precision] = None) -> np.ndarray:
    """N x size matrix whose column m is the jet of t^m at the roots of h."""
    precision = precision or default_precision()
    matrix = precision.zeros((h.N, size))
    for row, (node, order) in enumerate(h.jet_index()):
        root = precision.scalar(h.roots[node])
        for m in range(order, size):
            matrix[row, m] = math.perm(m, order) * root ** (m - order)
    return matrix


def confluent_matrix(h: FactoredNodes, precision: Optional[Precision] = None) -> np.ndarray:
    """The confluent Vandermonde matrix mapping remainder coefficients to jets."""
    precision = precision or default_precision()
    matrix = monomial_jets(h, h.N, precision)
    precision.warn_if_ill_conditioned(matrix, "confluent Vandermonde matrix")
    return matrix


def jet(f: Polynomial, h: FactoredNodes, precision: Optional[Precision] = None) -> np.ndarray:
    """Stacked values ``f^(i)(alpha_l)`` for ``i < beta_l``, node-major."""
    precision = precision or infer_precision(f.coeffs)
    values = precision.zeros(h.N)
    for row, (node, order) in enumerate(h.jet_index()):
        values[row] = f.derivative(order)(precision.scalar(h.roots[node]))
    return values
