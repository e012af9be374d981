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

"""Multiple Geronimus transformation of a monic orthogonal sequence.

``base`` is always the monic sequence ``P_n`` of ``mu_0 = h mu`` and ``form`` the
:class:`~opalchemy.forms.GeronimusForm` ``[., .]_h``. ``R_ops`` is the monic sequence of
``mu`` itself.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from opalchemy.constants import OPA_TOLERANCE
from opalchemy.exceptions import OPAlchemyPositivityError, OPAlchemyQuasiDefinitenessError, OPAlchemyValidationError
from opalchemy.forms import GeronimusForm, SobolevMass
from opalchemy.orthopoly import MonicOPS, kernel_polynomial
from opalchemy.poly import FactoredNodes, Polynomial, jet
from opalchemy.precision import Precision, max_abs

logger = logging.getLogger(__name__)


def _is_negligible(determinant, scale_rows: np.ndarray, precision: Precision, tolerance: float) -> bool:
    """``|det| <= tol * prod_i ||scale_rows[i]||``, the Hadamard bound of the magnitudes involved."""
    if scale_rows.size == 0:
        return False
    bound = float(np.prod(np.linalg.norm(scale_rows, axis=1)))
    return bound == 0 or abs(float(determinant)) <= precision.scaled_tolerance(tolerance) * bound


@dataclass(frozen=True, eq=False)
class HMomentTable:
    """Entries ``[P_j, t^q]_h`` for ``j <= upto``, ``q < N``, with the magnitudes they were summed from."""

    values: np.ndarray
    scales: np.ndarray

    @property
    def upto(self) -> int:
        return self.values.shape[0] - 1

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def system(self, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Matrix ``[P_{n-1-i}, t^m]_h``, right-hand side ``-[P_n, t^m]_h`` and magnitudes, ``k = min(n, N)``."""
        if n > self.upto:
            raise OPAlchemyValidationError(f"moment table reaches degree {self.upto}, asked for {n}")
        k = min(n, self.N)
        rows = [n - 1 - i for i in range(k)]
        matrix = self.values[rows, :k].T if k else self.values[:0, :0]
        rhs = -self.values[n, :k]
        scales = self.scales[rows, :k].T if k else self.scales[:0, :0]
        return matrix, rhs, scales


def h_moment_table(base: MonicOPS, form: GeronimusForm, upto: int) -> HMomentTable:
    if upto > base.degree:
        raise OPAlchemyValidationError(f"base sequence reaches degree {base.degree}, asked for {upto}")
    precision = form.precision
    size = max(upto, form.N - 1) + 1
    gram = form.gram(size - 1)[:, : form.N]
    coefficients = base.truncated(upto).coefficient_matrix(size)
    values = coefficients @ gram
    scales = np.abs(precision.to_float(coefficients)) @ np.abs(precision.to_float(gram))
    return HMomentTable(values, scales)


@dataclass(frozen=True, eq=False)
class ConnectionCoeffs:
    """Coefficients of ``P*_n = P_n + sum_{k=1}^{min(n, N)} A^{[n]}_{n-k} P_{n-k}``.

    Attributes:
        N: Degree of h.
        rows: ``rows[n][k - 1] = A^{[n]}_{n-k}``; row n has ``min(n, N)`` entries.
        dstar: Determinants ``d*_0..d*_{len(rows)-1}``, with ``d*_0 = 1``.
    """

    N: int
    rows: Tuple[np.ndarray, ...]
    dstar: np.ndarray

    def __len__(self) -> int:
        return len(self.rows)

    def coefficient(self, n: int, m: int):
        """``A^{[n]}_m`` with ``A^{[n]}_n = 1`` and zero outside the band."""
        if m == n:
            return 1
        k = n - m
        if m < 0 or k < 1 or k > min(n, self.N):
            return 0
        return self.rows[n][k - 1]

    def matrix(self, M: int) -> np.ndarray:
        """Dense M x M unit lower triangular matrix of ``A^{[n]}_m``."""
        if M > len(self.rows):
            raise OPAlchemyValidationError(f"connection rows computed up to {len(self.rows) - 1}, asked for {M - 1}")
        matrix = np.zeros((M, M), dtype=self.dstar.dtype)
        for n in range(M):
            for m in range(max(0, n - self.N), n + 1):
                matrix[n, m] = self.coefficient(n, m)
        return matrix

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "rows": [[float(a) for a in row] for row in self.rows],
            "dstar": [float(d) for d in self.dstar],
        }


def connection_row(base: MonicOPS, form: GeronimusForm, n: int, table: Optional[HMomentTable] = None) -> np.ndarray:
    """Solves ``sum_i A^{[n]}_{n-1-i} [P_{n-1-i}, t^m]_h = -[P_n, t^m]_h`` for ``m < min(n, N)``.

    Raises:
        OPAlchemyQuasiDefinitenessError: ``d*_n`` vanishes.
    """
    precision = form.precision
    table = table or h_moment_table(base, form, n)
    matrix, rhs, scales = table.system(n)
    if matrix.shape[0] == 0:
        return precision.zeros(0)
    if _is_negligible(precision.det(matrix), scales, precision, OPA_TOLERANCE):
        raise OPAlchemyQuasiDefinitenessError(n, reason=f"d*_{n} = 0")
    return precision.solve(matrix, rhs, what=f"connection system of degree {n}")


def dstar(base: MonicOPS, form: GeronimusForm, n: int, table: Optional[HMomentTable] = None):
    """Determinant of the connection system of degree n; 1 for n = 0."""
    table = table or h_moment_table(base, form, n)
    matrix, _, _ = table.system(n)
    return form.precision.det(matrix)


def dstar_is_zero(form: GeronimusForm, n: int, table: HMomentTable) -> bool:
    matrix, _, scales = table.system(n)
    return _is_negligible(form.precision.det(matrix), scales, form.precision, OPA_TOLERANCE)


def connection_coefficients(base: MonicOPS, form: GeronimusForm, upto: int) -> ConnectionCoeffs:
    """Connection rows for ``n = 0..upto``.

    Raises:
        OPAlchemyQuasiDefinitenessError: Some ``d*_n`` vanishes; the error carries n.
    """
    table = h_moment_table(base, form, upto)
    rows = []
    determinants = form.precision.zeros(upto + 1)
    for n in range(upto + 1):
        determinants[n] = dstar(base, form, n, table)
        rows.append(connection_row(base, form, n, table))
    logger.debug("Connection coefficients computed up to degree %d", upto)
    return ConnectionCoeffs(form.N, tuple(rows), determinants)


def pstar(base: MonicOPS, conn: ConnectionCoeffs, n: int) -> Polynomial:
    return _combine(base, n, conn.rows[n])


def _combine(base: MonicOPS, n: int, row: np.ndarray) -> Polynomial:
    result = base[n]
    for k, a in enumerate(row, start=1):
        result = result + base[n - k] * a
    return result


def pstar_sequence(
    base: MonicOPS, form: GeronimusForm, upto: int, conn: Optional[ConnectionCoeffs] = None
) -> MonicOPS:
    """``P*_0..P*_upto`` with their norms ``[P*_n, P*_n]_h``."""
    conn = conn or connection_coefficients(base, form, upto)
    polys = tuple(pstar(base, conn, n) for n in range(upto + 1))
    norms2 = np.diag(form.inner_matrix(polys, polys)).copy()
    return MonicOPS(polys, norms2, form)


def pstar_determinant(base: MonicOPS, form: GeronimusForm, n: int, table: Optional[HMomentTable] = None) -> Polynomial:
    """``P*_n`` from the bordered determinant, expanded along its polynomial column.

    Raises:
        OPAlchemyQuasiDefinitenessError: ``d*_n`` vanishes.
    """
    precision = form.precision
    table = table or h_moment_table(base, form, n)
    k = min(n, form.N)
    if k == 0:
        return base[0]
    bordered = table.values[[n - i for i in range(k + 1)], :k]
    scales = table.scales[[n - i for i in range(1, k + 1)], :k]
    determinant = precision.det(bordered[1:])
    if _is_negligible(determinant, scales, precision, OPA_TOLERANCE):
        raise OPAlchemyQuasiDefinitenessError(n, reason=f"d*_{n} = 0")
    result = Polynomial.zero(precision)
    for i in range(k + 1):
        minor = np.delete(bordered, i, axis=0)
        result = result + base[n - i] * ((-1) ** i * precision.det(minor) / determinant)
    return result


def small_degree_norm(base: MonicOPS, form: GeronimusForm, conn: ConnectionCoeffs, m: int):
    """``(h*_m)^2 = sum_{k, j} A^{[m]}_k A^{[m]}_j [P_k, P_j]_h`` for ``m < N``."""
    if m >= form.N:
        raise OPAlchemyValidationError(f"degree {m} is not below N={form.N}")
    precision = form.precision
    coefficients = precision.array([conn.coefficient(m, k) for k in range(m + 1)])
    products = form.inner_matrix(base.polys[: m + 1], base.polys[: m + 1])
    return coefficients @ products @ coefficients


def pstar_mu0_gram(base: MonicOPS, conn: ConnectionCoeffs, M: int) -> np.ndarray:
    """``(P*_n, P*_m)_0 = sum_k A^{[n]}_k A^{[m]}_k h_k^2`` for ``n, m < M``."""
    precision = base.precision
    lower = precision.array(conn.matrix(M))
    return lower @ np.diag(base.norms2[:M]) @ lower.T


def gram_is_positive_definite(form, n: int) -> bool:
    try:
        form.precision.cholesky(form.gram(n))
    except OPAlchemyPositivityError:
        return False
    return True


class Definiteness(Enum):
    POSITIVE = "positive"
    INDEFINITE = "indefinite"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class DegreeVerdict:
    """Definiteness data for one degree.

    Attributes:
        n: Degree.
        dstar: ``d*_n``.
        ratio: ``d*_{n+1} / d*_n``, ``None`` when ``d*_n`` vanishes.
        regime: ``"n>=N"``, ``"n<N even"`` or ``"n<N odd"``.
        passed: Sign condition for positivity in that regime, ``None`` when undecidable.
        norm2: ``[P*_n, P*_n]_h``.
        identity_lhs: ``[P*_n, t^m h^k]_h`` (``[P*_n, t^n]_h`` for ``n < N``).
        identity_rhs: The same value predicted from ``d*``.
    """

    n: int
    dstar: float
    ratio: Optional[float]
    regime: str
    passed: Optional[bool]
    norm2: Optional[float] = None
    identity_lhs: Optional[float] = None
    identity_rhs: Optional[float] = None

    @property
    def identity_discrepancy(self) -> Optional[float]:
        if self.identity_lhs is None or self.identity_rhs is None:
            return None
        return abs(self.identity_lhs - self.identity_rhs) / max(1e-300, abs(self.identity_rhs))


@dataclass(frozen=True)
class DefinitenessReport:
    N: int
    degrees: Tuple[DegreeVerdict, ...]
    classification: Definiteness
    base_positive: bool
    first_degenerate: Optional[int] = None

    @property
    def sign_pattern_positive(self) -> bool:
        return all(verdict.passed for verdict in self.degrees)

    def max_identity_discrepancy(self) -> float:
        values = [v.identity_discrepancy for v in self.degrees if v.identity_discrepancy is not None]
        return max(values) if values else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "classification": self.classification.value,
            "base_positive": self.base_positive,
            "first_degenerate": self.first_degenerate,
            "degrees": [
                {
                    "n": v.n,
                    "dstar": v.dstar,
                    "ratio": v.ratio,
                    "regime": v.regime,
                    "passed": v.passed,
                    "norm2": v.norm2,
                    "identity_lhs": v.identity_lhs,
                    "identity_rhs": v.identity_rhs,
                }
                for v in self.degrees
            ],
        }


def definiteness(base: MonicOPS, form: GeronimusForm, upto: int) -> DefinitenessReport:
    """Sign tests on ``d*_{n+1} / d*_n`` for ``n <= upto`` together with the norm identities.

    For ``n >= N`` the form is positive at degree n iff ``(-1)^N d*_{n+1} / d*_n > 0``; for
    ``n < N`` iff ``(-1)^n d*_{n+1} / d*_n > 0``. Both are checked against ``[P*_n, P*_n]_h``
    computed from the connection rows.
    """
    precision = form.precision
    N = form.N
    table = h_moment_table(base, form, upto + 1)
    determinants = [dstar(base, form, n, table) for n in range(upto + 2)]
    zero = [dstar_is_zero(form, n, table) for n in range(upto + 2)]
    first_degenerate = next((n for n, flag in enumerate(zero) if flag), None)
    base_positive = all(value > 0 for value in base.norms2[: upto + 2])

    verdicts: List[DegreeVerdict] = []
    for n in range(upto + 1):
        if n >= N:
            regime, sign = "n>=N", (-1) ** N
        else:
            regime, sign = ("n<N even" if n % 2 == 0 else "n<N odd"), (-1) ** n
        if zero[n] or zero[n + 1]:
            ratio = None if zero[n] else float(determinants[n + 1] / determinants[n])
            verdicts.append(DegreeVerdict(n, float(determinants[n]), ratio, regime, None))
            continue
        ratio_value = determinants[n + 1] / determinants[n]
        star = _combine(base, n, connection_row(base, form, n, table))
        norm2 = form.inner(star, star)
        if n >= N:
            m, k = n % N, n // N
            test = Polynomial.monomial(m, precision) * form.params.h.expand(precision) ** k
            lhs = form.inner(star, test)
            rhs = sign * ratio_value * base.norms2[n - N]
        else:
            lhs = form.inner(star, Polynomial.monomial(n, precision))
            rhs = sign * ratio_value
        verdicts.append(
            DegreeVerdict(
                n=n,
                dstar=float(determinants[n]),
                ratio=float(ratio_value),
                regime=regime,
                passed=bool(sign * ratio_value > 0),
                norm2=float(norm2),
                identity_lhs=float(lhs),
                identity_rhs=float(rhs),
            )
        )

    if first_degenerate is not None:
        classification = Definiteness.DEGENERATE
    elif base_positive:
        classification = Definiteness.POSITIVE if all(v.passed for v in verdicts) else Definiteness.INDEFINITE
    else:
        classification = Definiteness.POSITIVE if all(v.norm2 > 0 for v in verdicts) else Definiteness.INDEFINITE
    logger.debug("Definiteness up to degree %d: %s", upto, classification.value)
    return DefinitenessReport(N, tuple(verdicts), classification, base_positive, first_degenerate)


@dataclass(frozen=True, eq=False)
class ExistenceResult:
    """The jet system ``R = V P*`` of degree n.

    Attributes:
        n: Degree.
        solvable: Whether V is nonsingular, i.e. whether ``P*_n`` exists.
        determinant: ``det V``.
        matrix: V, identity plus the jets of the correction polynomials.
        rhs: Jet of ``R_n``.
        jets: Jet of ``P*_n`` when solvable.
        kernels: Correction polynomials ``D_a`` in jet ordering.
    """

    n: int
    solvable: bool
    determinant: Any
    matrix: np.ndarray
    rhs: np.ndarray
    jets: Optional[np.ndarray] = None
    kernels: Tuple[Polynomial, ...] = field(default=())


def existence_kernels(R_ops: MonicOPS, masses: SobolevMass, n: int) -> Tuple[Polynomial, ...]:
    """``D_{(l, i)}(t) = sum_{(w, j)} lambda_{i, j, l, w} K_{n-1}^{(j, 0)}(alpha_w, t)`` in jet ordering."""
    precision = R_ops.precision
    nodes = masses.nodes
    if n == 0:
        return tuple(Polynomial.zero(precision) for _ in range(nodes.N))
    columns = [kernel_polynomial(R_ops, n - 1, nodes.roots[w], j) for w, j in nodes.jet_index()]
    lam = precision.array(masses.matrix)
    kernels = []
    for a in range(nodes.N):
        total = Polynomial.zero(precision)
        for b, column in enumerate(columns):
            if lam[a, b] != 0:
                total = total + column * lam[a, b]
        kernels.append(total)
    return tuple(kernels)


def existence_system(R_ops: MonicOPS, masses: SobolevMass, n: int) -> ExistenceResult:
    """Assembles and solves the jet system for ``P*_n``; a singular system is reported, not raised."""
    if n > R_ops.degree:
        raise OPAlchemyValidationError(f"R sequence reaches degree {R_ops.degree}, asked for {n}")
    precision = R_ops.precision
    nodes = masses.nodes
    kernels = existence_kernels(R_ops, masses, n)
    corrections = precision.array([jet(d, nodes, precision) for d in kernels]).reshape(nodes.N, nodes.N).T
    matrix = precision.eye(nodes.N) + corrections
    rhs = jet(R_ops[n], nodes, precision)
    scales = np.eye(nodes.N) + np.abs(precision.to_float(corrections))
    determinant = precision.det(matrix)
    if _is_negligible(determinant, scales, precision, OPA_TOLERANCE):
        logger.debug("Jet system of degree %d is singular", n)
        return ExistenceResult(n, False, determinant, matrix, rhs, None, kernels)
    jets = precision.solve(matrix, rhs, what=f"jet system of degree {n}")
    return ExistenceResult(n, True, determinant, matrix, rhs, jets, kernels)


def pstar_from_existence(
    R_ops: MonicOPS, masses: SobolevMass, n: int, result: Optional[ExistenceResult] = None
) -> Polynomial:
    """``P*_n = R_n - sum_a P*^{(a)} D_a``.

    Raises:
        OPAlchemyQuasiDefinitenessError: The jet system of degree n is singular.
    """
    result = result or existence_system(R_ops, masses, n)
    if not result.solvable:
        raise OPAlchemyQuasiDefinitenessError(n, reason="the jet system is singular")
    polynomial = R_ops[n]
    for value, kernel_term in zip(result.jets, result.kernels):
        polynomial = polynomial - kernel_term * value
    return polynomial


@dataclass(frozen=True, eq=False)
class RConnection:
    """Expansion ``h P*_n = sum_k c_k R_k``.

    Attributes:
        n: Degree of ``P*_n``.
        N: Degree of h.
        coefficients: ``c_0..c_{n+N}``.
        leading: ``c_{n+N}``, which is 1.
        below_band: ``max_{k < n-N} |c_k|`` relative to ``max(1, max |c|)``.
        pivot: ``c_{n-N}`` (``None`` when ``n < N``).
        orthogonality_defect: ``max_{k < n} |(P*_{n+N}, R_k)_0|``, normalized by the norms.
    """

    n: int
    N: int
    coefficients: np.ndarray
    leading: float
    below_band: float
    pivot: Optional[float]
    orthogonality_defect: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "coefficients": [float(c) for c in self.coefficients],
            "leading": self.leading,
            "below_band": self.below_band,
            "pivot": self.pivot,
            "orthogonality_defect": self.orthogonality_defect,
        }


def connect_to_R(R_ops: MonicOPS, pstar_seq: MonicOPS, h: FactoredNodes, n: int) -> RConnection:
    if not R_ops.form.is_hankel:
        raise OPAlchemyValidationError("R sequence must come from a measure form")
    N = h.N
    if n + N > R_ops.degree or n + N > pstar_seq.degree:
        raise OPAlchemyValidationError(f"sequences must reach degree {n + N}")
    precision = R_ops.precision
    form = R_ops.form
    expanded = h.expand(precision)
    target = expanded * pstar_seq[n]
    coefficients = precision.array([form.inner(target, R_ops[k]) / R_ops.norms2[k] for k in range(n + N + 1)])
    scale = max(1.0, max_abs(coefficients))
    below = max_abs(coefficients[: max(n - N, 0)]) / scale

    upper = pstar_seq[n + N]
    upper_norm = abs(float(form.inner(upper, expanded * upper)))
    defects = []
    for k in range(n):
        r_norm = abs(float(form.inner(R_ops[k], expanded * R_ops[k])))
        denominator = np.sqrt(upper_norm * r_norm) or 1.0
        defects.append(abs(float(form.inner(upper, expanded * R_ops[k]))) / denominator)
    return RConnection(
        n=n,
        N=N,
        coefficients=coefficients,
        leading=float(coefficients[-1]),
        below_band=below,
        pivot=float(coefficients[n - N]) if n >= N else None,
        orthogonality_defect=max(defects) if defects else 0.0,
    )


def connection_to_r_closed_form(
    base: MonicOPS, R_ops: MonicOPS, conn: ConnectionCoeffs, h: FactoredNodes, n: int
) -> np.ndarray:
    """``c_r = sum_k A^{[n]}_{n-k} b^{[n-k]}_r`` with ``b^{[j]}_r = (P_j, R_r)_0 / ||R_r||^2``.

    Only ``j <= r <= j + N`` contribute to ``b^{[j]}``, which gives the banded sum.
    """
    precision = R_ops.precision
    N = h.N
    expanded = h.expand(precision)
    form = R_ops.form
    coefficients = precision.zeros(n + N + 1)
    for k in range(min(n, N) + 1):
        j = n - k
        a = conn.coefficient(n, j)
        lifted = expanded * base[j]
        for r in range(j, j + N + 1):
            coefficients[r] = coefficients[r] + a * form.inner(lifted, R_ops[r]) / R_ops.norms2[r]
    return coefficients
