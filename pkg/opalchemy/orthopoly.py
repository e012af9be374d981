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
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from opalchemy.constants import OPA_PIVOT_TOLERANCE
from opalchemy.exceptions import (
    OPAlchemyNonHankelFormError,
    OPAlchemyPositivityError,
    OPAlchemyQuasiDefinitenessError,
    OPAlchemyValidationError,
)
from opalchemy.forms import BilinearForm
from opalchemy.poly import FactoredNodes, Polynomial, jet
from opalchemy.precision import Precision, infer_precision, max_abs

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MonicOPS:
    """Monic orthogonal polynomials ``P_0..P_n`` of a quasi-definite form.

    Attributes:
        polys: ``P_k`` monic of exact degree k.
        norms2: ``h_k^2 = inner(P_k, P_k)``, possibly negative for indefinite forms.
        form: The form the sequence is orthogonal for.
    """

    polys: Tuple[Polynomial, ...]
    norms2: np.ndarray
    form: BilinearForm

    def __len__(self) -> int:
        return len(self.polys)

    def __getitem__(self, k: int) -> Polynomial:
        return self.polys[k]

    def __iter__(self) -> Iterator[Polynomial]:
        return iter(self.polys)

    @property
    def degree(self) -> int:
        return len(self.polys) - 1

    @property
    def precision(self) -> Precision:
        return self.form.precision

    @property
    def is_positive(self) -> bool:
        return all(value > 0 for value in self.norms2)

    def truncated(self, n: int) -> "MonicOPS":
        if n > self.degree:
            raise OPAlchemyValidationError(f"sequence only reaches degree {self.degree}, asked for {n}")
        return MonicOPS(self.polys[: n + 1], self.norms2[: n + 1], self.form)

    def coefficient_matrix(self, size: Optional[int] = None) -> np.ndarray:
        """Row k holds the coefficients of ``P_k``, padded to ``size`` columns."""
        size = size or len(self.polys)
        rows = [p.coefficients(size) for p in self.polys]
        return self.precision.array(rows).reshape(len(rows), size)

    def norms(self) -> np.ndarray:
        """Positive square roots ``h_k``.

        Raises:
            OPAlchemyPositivityError: Some ``h_k^2`` is not positive.
        """
        values = self.precision.zeros(len(self.polys))
        for k, value in enumerate(self.norms2):
            if not value > 0:
                raise OPAlchemyPositivityError(k, reason=f"h_{k}^2 = {float(value):.6e} is not positive")
            values[k] = self.precision.sqrt(value)
        return values

    def orthonormal(self, k: int) -> Polynomial:
        return self.polys[k] * (1 / self.norms()[k])

    def inner_products(self) -> np.ndarray:
        return self.form.inner_matrix(self.polys, self.polys)

    def orthogonality_defect(self) -> float:
        """``max |inner(P_i, P_j)| / (h_i h_j)`` over ``i != j``."""
        products = self.precision.to_float(self.inner_products())
        scale = np.sqrt(np.abs(np.diag(products)))
        normalized = np.abs(products) / np.outer(scale, scale)
        np.fill_diagonal(normalized, 0.0)
        return float(normalized.max()) if normalized.size else 0.0


def _pivot_is_negligible(pivot, scale: float, precision: Precision, tolerance: float) -> bool:
    return scale == 0 or abs(float(pivot)) <= precision.scaled_tolerance(tolerance) * scale


def monic_ops_from_form(form: BilinearForm, n: int, pivot_tolerance: float = OPA_PIVOT_TOLERANCE) -> MonicOPS:
    """Monic orthogonal polynomials up to degree n from the LDL^T factorization of the Gram matrix.

    Row k of ``L^{-1}`` holds the coefficients of ``P_k`` and ``D[k] = h_k^2``.

    Raises:
        OPAlchemyQuasiDefinitenessError: Pivot k vanishes in the working precision.
    """
    precision = form.precision
    gram = form.gram(n)
    precision.warn_if_ill_conditioned(gram, f"Gram matrix of the {form.kind} form")
    size = n + 1
    lower = precision.eye(size)
    pivots = precision.zeros(size)
    for k in range(size):
        pivot = gram[k, k] - np.dot(lower[k, :k] * lower[k, :k], pivots[:k]) if k else gram[k, k]
        if _pivot_is_negligible(pivot, max_abs(gram[k, : k + 1]), precision, pivot_tolerance):
            raise OPAlchemyQuasiDefinitenessError(k, reason=f"LDL^T pivot {float(pivot):.3e} is numerically zero")
        pivots[k] = pivot
        for i in range(k + 1, size):
            correction = np.dot(lower[i, :k] * lower[k, :k], pivots[:k]) if k else 0
            lower[i, k] = (gram[i, k] - correction) / pivot

    inverse = precision.eye(size)
    for i in range(1, size):
        for j in range(i):
            inverse[i, j] = -np.dot(lower[i, j:i], inverse[j:i, j])
    polys = tuple(Polynomial(inverse[k, : k + 1]) for k in range(size))
    logger.debug("LDL^T of the %s Gram matrix succeeded up to degree %d", form.kind, n)
    return MonicOPS(polys, pivots, form)


def gs_oracle(form: BilinearForm, n: int, pivot_tolerance: float = OPA_PIVOT_TOLERANCE) -> MonicOPS:
    """Classical Gram-Schmidt on ``1, t, t^2, ...`` using only ``form.inner``."""
    precision = form.precision
    polys: List[Polynomial] = []
    norms2 = precision.zeros(n + 1)
    for k in range(n + 1):
        monomial = Polynomial.monomial(k, precision)
        p = monomial
        for j, previous in enumerate(polys):
            p = p - previous * (form.inner(monomial, previous) / norms2[j])
        norm2 = form.inner(p, p)
        if _pivot_is_negligible(norm2, abs(float(form.inner(monomial, monomial))), precision, pivot_tolerance):
            raise OPAlchemyQuasiDefinitenessError(k, reason="Gram-Schmidt produced a null vector")
        polys.append(p)
        norms2[k] = norm2
    return MonicOPS(tuple(polys), norms2, form)


@dataclass(frozen=True, eq=False)
class JacobiMatrix:
    """Three-term recurrence ``t P_n = P_{n+1} + D_n P_n + C_n P_{n-1}``.

    Attributes:
        diag: ``D_0..D_{M-1}``.
        subdiag: ``C_1..C_{M-1}``.
    """

    diag: np.ndarray
    subdiag: np.ndarray

    def __post_init__(self):
        if len(self.subdiag) != max(len(self.diag) - 1, 0):
            raise OPAlchemyValidationError("a Jacobi matrix of order M needs M-1 subdiagonal entries")

    @property
    def M(self) -> int:
        return len(self.diag)

    @property
    def precision(self) -> Precision:
        return infer_precision(self.diag)

    def truncated(self, M: int) -> "JacobiMatrix":
        if M > self.M:
            raise OPAlchemyValidationError(f"Jacobi matrix has order {self.M}, can't truncate to {M}")
        return JacobiMatrix(self.diag[:M], self.subdiag[: max(M - 1, 0)])

    def monic(self) -> np.ndarray:
        """Dense ``J_mon``: ``D_n`` on the diagonal, 1 above it and ``C_n`` at ``(n, n-1)``."""
        matrix = self.precision.zeros((self.M, self.M))
        for n in range(self.M):
            matrix[n, n] = self.diag[n]
            if n + 1 < self.M:
                matrix[n, n + 1] = 1
                matrix[n + 1, n] = self.subdiag[n]
        return matrix

    def orthonormal(self) -> np.ndarray:
        """Dense symmetric Jacobi matrix with off-diagonal ``sqrt(C_n)``.

        Raises:
            OPAlchemyPositivityError: Some ``C_n`` is negative.
        """
        precision = self.precision
        matrix = precision.zeros((self.M, self.M))
        for n in range(self.M):
            matrix[n, n] = self.diag[n]
            if n + 1 < self.M:
                c = self.subdiag[n]
                if c < 0:
                    raise OPAlchemyPositivityError(n + 1, reason=f"recurrence coefficient C_{n + 1} is negative")
                matrix[n, n + 1] = matrix[n + 1, n] = precision.sqrt(c)
        return matrix

    def polynomials(self, count: Optional[int] = None) -> List[Polynomial]:
        """``P_0..P_count`` rebuilt from the recurrence."""
        precision = self.precision
        count = self.M if count is None else count
        if count > self.M:
            raise OPAlchemyValidationError(f"recurrence of order {self.M} yields at most P_{self.M}")
        t = Polynomial.monomial(1, precision)
        polys = [Polynomial([1], precision=precision)]
        previous = Polynomial.zero(precision)
        for n in range(count):
            following = (t - self.diag[n]) * polys[n]
            if n:
                following = following - previous * self.subdiag[n - 1]
            previous = polys[n]
            polys.append(following)
        return polys

    def to_dict(self):
        return {
            "M": self.M,
            "D": [float(d) for d in self.diag],
            "C": [float(c) for c in self.subdiag],
        }


def jacobi(ops: MonicOPS) -> JacobiMatrix:
    """Recurrence coefficients ``D_n = inner(t P_n, P_n) / h_n^2`` and ``C_n = h_n^2 / h_{n-1}^2``.

    Raises:
        OPAlchemyNonHankelFormError: The source form does not commute with multiplication by t.
    """
    if not ops.form.is_hankel:
        raise OPAlchemyNonHankelFormError(f"{ops.form.kind} form")
    precision = ops.precision
    t = Polynomial.monomial(1, precision)
    diag = precision.zeros(len(ops))
    for n, p in enumerate(ops):
        diag[n] = ops.form.inner(t * p, p) / ops.norms2[n]
    subdiag = precision.array([ops.norms2[n] / ops.norms2[n - 1] for n in range(1, len(ops))])
    return JacobiMatrix(diag, subdiag.reshape(-1))


def reconstruction_residual(ops: MonicOPS, matrix: JacobiMatrix) -> float:
    rebuilt = matrix.polynomials(min(matrix.M, len(ops) - 1))
    worst = 0.0
    for p, q in zip(ops, rebuilt):
        worst = max(worst, (p - q).max_abs_coefficient() / max(1.0, p.max_abs_coefficient()))
    return worst


def _check_degree(ops: MonicOPS, n: int):
    if n < 0 or n >= len(ops):
        raise OPAlchemyValidationError(f"kernel degree {n} outside the sequence (length {len(ops)})")


def kernel(ops: MonicOPS, n: int, x, y):
    """``K_n(x, y) = sum_{k <= n} P_k(x) P_k(y) / h_k^2``."""
    return kernel_deriv(ops, n, 0, 0, x, y)


def kernel_deriv(ops: MonicOPS, n: int, i: int, j: int, x, y):
    """``d^i/dx^i d^j/dy^j K_n(x, y)``, differentiated termwise."""
    _check_degree(ops, n)
    x, y = ops.precision.scalar(x), ops.precision.scalar(y)
    return sum(ops[k].derivative(i)(x) * ops[k].derivative(j)(y) / ops.norms2[k] for k in range(n + 1))


def kernel_polynomial(ops: MonicOPS, n: int, y, j: int = 0) -> Polynomial:
    """``x -> K_n^{(0, j)}(x, y)`` as a polynomial."""
    _check_degree(ops, n)
    y = ops.precision.scalar(y)
    result = Polynomial.zero(ops.precision)
    for k in range(n + 1):
        result = result + ops[k] * (ops[k].derivative(j)(y) / ops.norms2[k])
    return result


def christoffel_darboux(ops: MonicOPS, n: int, x, y):
    """Christoffel-Darboux quotient ``(P_{n+1}(x) P_n(y) - P_n(x) P_{n+1}(y)) / ((x - y) h_n^2)``."""
    _check_degree(ops, n + 1)
    if x == y:
        raise OPAlchemyValidationError("the Christoffel-Darboux quotient needs x != y")
    x, y = ops.precision.scalar(x), ops.precision.scalar(y)
    numerator = ops[n + 1](x) * ops[n](y) - ops[n](x) * ops[n + 1](y)
    return numerator / ((x - y) * ops.norms2[n])


def kernel_jet_matrix(ops: MonicOPS, n: int, nodes: FactoredNodes) -> np.ndarray:
    """N x N matrix ``sum_{r <= n} jet(P_r) jet(P_r)^T / h_r^2`` of kernel derivatives at the roots of h.

    Entry ``(a, b)`` is ``K_n^{(i, j)}(alpha_l, alpha_w)`` for jet positions ``a = (l, i)``, ``b = (w, j)``.
    """
    precision = ops.precision
    matrix = precision.zeros((nodes.N, nodes.N))
    for r in range(n + 1):
        values = jet(ops[r], nodes, precision)
        matrix = matrix + np.outer(values, values) / ops.norms2[r]
    return matrix
