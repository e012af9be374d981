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
from typing import Any, Dict, Optional, Union

import numpy as np

from opalchemy.constants import OPA_TOLERANCE
from opalchemy.exceptions import OPAlchemyPositivityError, OPAlchemyQuasiDefinitenessError, OPAlchemyValidationError
from opalchemy.forms import GeronimusForm
from opalchemy.geronimus import ConnectionCoeffs
from opalchemy.orthopoly import JacobiMatrix, MonicOPS
from opalchemy.poly import FactoredNodes, Polynomial
from opalchemy.precision import Precision, infer_precision, max_abs

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BandMatrix:
    """M x M matrix stored by diagonals.

    ``data[upper + i - j, j]`` holds entry ``(i, j)``, the layout of ``scipy.linalg.solve_banded``.
    Entries outside the band are zero by construction.

    Attributes:
        M: Truncation order.
        lower: Lower bandwidth.
        upper: Upper bandwidth.
        data: Array of shape ``(lower + upper + 1, M)``.
    """

    M: int
    lower: int
    upper: int
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != (self.lower + self.upper + 1, self.M):
            raise OPAlchemyValidationError(
                f"band storage must have shape {(self.lower + self.upper + 1, self.M)}, got {self.data.shape}"
            )

    @classmethod
    def from_dense(cls, dense: np.ndarray, lower: int, upper: int) -> "BandMatrix":
        M = dense.shape[0]
        lower, upper = min(lower, max(M - 1, 0)), min(upper, max(M - 1, 0))
        data = np.zeros((lower + upper + 1, M), dtype=dense.dtype)
        for i in range(M):
            for j in range(max(0, i - lower), min(M, i + upper + 1)):
                data[upper + i - j, j] = dense[i, j]
        return cls(M, lower, upper, data)

    @staticmethod
    def outside_band_max(dense: np.ndarray, lower: int, upper: int) -> float:
        """Largest absolute entry of ``dense`` outside the given band."""
        rows, columns = np.indices(dense.shape)
        mask = (rows - columns > lower) | (columns - rows > upper)
        return max_abs(dense[mask])

    @property
    def precision(self) -> Precision:
        return infer_precision(self.data)

    def __getitem__(self, index):
        i, j = index
        if not (0 <= i < self.M and 0 <= j < self.M):
            raise IndexError(f"entry {index} outside a {self.M} x {self.M} matrix")
        if i - j > self.lower or j - i > self.upper:
            return 0
        return self.data[self.upper + i - j, j]

    def diagonal(self, offset: int = 0) -> np.ndarray:
        """Entries ``(i, i + offset)``."""
        if offset > self.upper or -offset > self.lower:
            return np.zeros(max(self.M - abs(offset), 0), dtype=self.data.dtype)
        row = self.upper - offset
        if offset >= 0:
            return self.data[row, offset:]
        return self.data[row, : self.M + offset]

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.M, self.M), dtype=self.data.dtype)
        for i in range(self.M):
            for j in range(max(0, i - self.lower), min(self.M, i + self.upper + 1)):
                dense[i, j] = self.data[self.upper + i - j, j]
        return dense

    def crop(self, M: int) -> "BandMatrix":
        if M > self.M:
            raise OPAlchemyValidationError(f"can't crop a matrix of order {self.M} to {M}")
        return BandMatrix.from_dense(self.to_dense()[:M, :M], self.lower, self.upper)

    def __matmul__(self, other: "BandMatrix") -> "BandMatrix":
        if other.M != self.M:
            raise OPAlchemyValidationError("band matrices of different orders")
        return BandMatrix.from_dense(
            self.to_dense() @ other.to_dense(), self.lower + other.lower, self.upper + other.upper
        )

    def max_abs(self) -> float:
        return max_abs(self.data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "M": self.M,
            "lower": self.lower,
            "upper": self.upper,
            "diagonals": [[float(x) for x in self.diagonal(offset)] for offset in range(-self.lower, self.upper + 1)],
        }


@dataclass(frozen=True)
class TruncationWindow:
    """Finite section of order M whose leading ``M_valid`` block is exact after ``products`` matrix products."""

    M: int
    N: int
    products: int = 1

    @property
    def M_valid(self) -> int:
        return max(self.M - self.N * self.products, 0)

    def crop(self, matrix: Union[np.ndarray, BandMatrix]) -> np.ndarray:
        dense = matrix.to_dense() if isinstance(matrix, BandMatrix) else matrix
        return dense[: self.M_valid, : self.M_valid]

    def to_dict(self) -> Dict[str, int]:
        return {"M": self.M, "N": self.N, "products": self.products, "M_valid": self.M_valid}


@dataclass(frozen=True)
class ResidualReport:
    """Largest entrywise difference on a truncation window.

    Attributes:
        name: What was compared.
        window: The window the residual was measured on.
        absolute: ``max |A - B|``.
        relative: ``absolute / max(1, max |A|, max |B|)``.
    """

    name: str
    window: TruncationWindow
    absolute: float
    relative: float

    def within(self, tolerance: float) -> bool:
        return self.relative <= tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "window": self.window.to_dict(),
            "absolute": self.absolute,
            "relative": self.relative,
        }


def residual(name: str, left, right, window: TruncationWindow) -> ResidualReport:
    a, b = window.crop(left), window.crop(right)
    absolute = max_abs(a - b)
    return ResidualReport(name, window, absolute, absolute / max(1.0, max_abs(a), max_abs(b)))


def build_Lmon(conn: ConnectionCoeffs, M: int) -> BandMatrix:
    """Unit lower triangular ``L_mon`` with ``P* = L_mon P``."""
    return BandMatrix.from_dense(conn.matrix(M), conn.N, 0)


def build_Umon(base: MonicOPS, pstar_seq: MonicOPS, form: GeronimusForm, M: int) -> BandMatrix:
    """Upper triangular ``U_mon`` with ``h P = U_mon P*``, from ``[h P_n, P*_i]_h / (h*_i)^2``.

    Raises:
        OPAlchemyQuasiDefinitenessError: A diagonal entry vanishes.
    """
    precision = form.precision
    h = form.params.h
    expanded = h.expand(precision)
    products = form.inner_matrix([expanded * base[n] for n in range(M)], pstar_seq.polys[:M])
    dense = products / pstar_seq.norms2[:M][np.newaxis, :]
    tolerance = precision.scaled_tolerance(OPA_TOLERANCE)
    for n in range(M):
        dense[n, :n] = 0
        row_scale = max_abs(dense[n, n : n + h.N + 1])
        if row_scale == 0 or abs(float(dense[n, n])) <= tolerance * row_scale:
            raise OPAlchemyQuasiDefinitenessError(n, reason=f"U_mon diagonal entry {n} vanishes")
    return BandMatrix.from_dense(dense, 0, h.N)


def umon_expansion_residual(base: MonicOPS, pstar_seq: MonicOPS, U: BandMatrix, h: FactoredNodes) -> float:
    """``max_n ||h P_n - sum_i U[n, i] P*_i||`` relative to the coefficients of ``h P_n``."""
    precision = U.precision
    expanded = h.expand(precision)
    worst = 0.0
    for n in range(U.M - h.N):
        target = expanded * base[n]
        combination = Polynomial.zero(precision)
        for i in range(n, min(n + h.N, U.M - 1) + 1):
            combination = combination + pstar_seq[i] * U[n, i]
        worst = max(worst, (target - combination).max_abs_coefficient() / max(1.0, target.max_abs_coefficient()))
    return worst


def h_of_jacobi(J: JacobiMatrix, h: FactoredNodes, M: int) -> BandMatrix:
    """``h(J_mon)`` evaluated on a section of order ``M + N`` and cropped to M.

    Raises:
        OPAlchemyValidationError: J is shorter than ``M + N``.
    """
    if J.M < M + h.N:
        raise OPAlchemyValidationError(f"h(J) of order {M} needs a Jacobi matrix of order {M + h.N}, got {J.M}")
    precision = J.precision
    dense = J.truncated(M + h.N).monic()
    coefficients = h.expand(precision).coeffs
    identity = precision.eye(M + h.N)
    result = identity * coefficients[-1]
    for b in coefficients[-2::-1]:
        result = result @ dense + identity * b
    return BandMatrix.from_dense(result[:M, :M], h.N, h.N)


def jstar_dense(pstar_seq: MonicOPS, form: GeronimusForm, M: int) -> np.ndarray:
    """Full matrix of ``c^{[n]}_k = [h P*_n, P*_k]_h / (h*_k)^2`` for ``n, k < M``."""
    if pstar_seq.degree < M - 1:
        raise OPAlchemyValidationError(f"P* sequence must reach degree {M - 1}")
    expanded = form.params.h.expand(form.precision)
    products = form.inner_matrix([expanded * p for p in pstar_seq.polys[:M]], pstar_seq.polys[:M])
    return products / pstar_seq.norms2[:M][np.newaxis, :]


def jstar_band(pstar_seq: MonicOPS, form: GeronimusForm, M: int) -> BandMatrix:
    """``J*_mon``: the recurrence ``h P*_n = sum_{|k - n| <= N} c^{[n]}_k P*_k``."""
    return BandMatrix.from_dense(jstar_dense(pstar_seq, form, M), form.N, form.N)


def jstar_band_defect(pstar_seq: MonicOPS, form: GeronimusForm, M: int) -> float:
    """Largest ``|c^{[n]}_k|`` with ``|k - n| > N``, relative to the largest entry."""
    dense = jstar_dense(pstar_seq, form, M)
    return BandMatrix.outside_band_max(dense, form.N, form.N) / max(1.0, max_abs(dense))


def jstar_subdiagonal_defect(J: BandMatrix, pstar_norms2) -> float:
    """Relative gap between ``c^{[n]}_{n-N}`` and ``(h*_n)^2 / (h*_{n-N})^2`` for ``N <= n < M``.

    Infinite when one of these entries is not positive.
    """
    N = J.lower
    worst = 0.0
    for n, entry in enumerate(J.diagonal(-N), start=N):
        if not entry > 0:
            return float("inf")
        expected = pstar_norms2[n] / pstar_norms2[n - N]
        worst = max(worst, abs(float((entry - expected) / expected)))
    return worst


def jstar_orthonormal(pstar_seq: MonicOPS, form: GeronimusForm, M: int) -> np.ndarray:
    """``([h P^*_n, P^*_m]_h)`` for the orthonormal ``P^*_n = P*_n / h*_n``.

    Raises:
        OPAlchemyPositivityError: Some ``(h*_n)^2`` is not positive.
    """
    precision = form.precision
    norms = pstar_seq.truncated(M - 1).norms()
    expanded = form.params.h.expand(precision)
    products = form.inner_matrix([expanded * p for p in pstar_seq.polys[:M]], pstar_seq.polys[:M])
    products = (products + products.T) / 2
    return products / np.outer(norms, norms)


def cholesky_C(conn: ConnectionCoeffs, base_norms2: np.ndarray, pstar_norms2: np.ndarray, M: int) -> BandMatrix:
    """Lower triangular C with ``C[n, m] = A^{[n]}_m h_m / h*_n``.

    Raises:
        OPAlchemyPositivityError: A norm is not positive.
    """
    precision = infer_precision(np.asarray(pstar_norms2))
    base_norms = precision.zeros(M)
    star_norms = precision.zeros(M)
    for n in range(M):
        if not base_norms2[n] > 0:
            raise OPAlchemyPositivityError(n, reason=f"h_{n}^2 is not positive")
        if not pstar_norms2[n] > 0:
            raise OPAlchemyPositivityError(n, reason=f"(h*_{n})^2 is not positive")
        base_norms[n] = precision.sqrt(base_norms2[n])
        star_norms[n] = precision.sqrt(pstar_norms2[n])
    lower = precision.array(conn.matrix(M))
    dense = lower * base_norms[np.newaxis, :] / star_norms[:, np.newaxis]
    return BandMatrix.from_dense(dense, conn.N, 0)


def verify_UL(
    J: JacobiMatrix, h: FactoredNodes, L: BandMatrix, U: BandMatrix, window: Optional[TruncationWindow] = None
) -> ResidualReport:
    """Residual of ``h(J_mon) - U_mon L_mon``."""
    window = window or TruncationWindow(L.M, h.N)
    return residual("h(J) - U L", h_of_jacobi(J, h, window.M), U.crop(window.M) @ L.crop(window.M), window)


def verify_LU(
    Jstar: BandMatrix, L: BandMatrix, U: BandMatrix, window: Optional[TruncationWindow] = None
) -> ResidualReport:
    """Residual of ``J*_mon - L_mon U_mon``."""
    window = window or TruncationWindow(L.M, L.lower)
    return residual("J* - L U", Jstar.crop(window.M), L.crop(window.M) @ U.crop(window.M), window)


def verify_cholesky(Jstar_orthonormal, C: BandMatrix, window: Optional[TruncationWindow] = None) -> ResidualReport:
    """Residual of ``J* - C C^T``."""
    window = window or TruncationWindow(C.M, C.lower)
    dense = C.to_dense()[: window.M, : window.M]
    jstar = Jstar_orthonormal.to_dense() if isinstance(Jstar_orthonormal, BandMatrix) else Jstar_orthonormal
    return residual("J* - C C^T", jstar[: window.M, : window.M], dense @ dense.T, window)


def cholesky_oracle(Jstar_orthonormal, C: BandMatrix, window: Optional[TruncationWindow] = None) -> ResidualReport:
    """Compares C with the numerical Cholesky factor of the truncated ``J*``."""
    window = window or TruncationWindow(C.M, C.lower)
    jstar = Jstar_orthonormal.to_dense() if isinstance(Jstar_orthonormal, BandMatrix) else Jstar_orthonormal
    factor = C.precision.cholesky(jstar[: window.M, : window.M])
    return residual("chol(J*) - C", factor, C.to_dense()[: window.M, : window.M], window)
