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

"""Matrix reading of the transformation.

Unfolding a scalar sequence by the operators ``R_k`` turns blocks of N consecutive
polynomials into N x N matrix polynomials in ``y = h(t)``; the scalar forms become
matrix moments ``M_s[i][j] = int h^s t^{i+j} dmu`` and the masses turn into one
extra block at ``s = 0``.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from opalchemy.exceptions import (
    NODE_SET_MISMATCH_ERROR_MESSAGE,
    OPAlchemyBandwidthError,
    OPAlchemyMomentHorizonError,
    OPAlchemyNodeMismatchError,
    OPAlchemyValidationError,
)
from opalchemy.factor import BandMatrix
from opalchemy.forms import MomentFunctional, SobolevMass
from opalchemy.poly import FactoredNodes, Polynomial, h_basis_decompose, r_fold
from opalchemy.precision import Precision, default_precision, max_abs

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MatrixPoly:
    """N x N grid of polynomials in y."""

    grid: Tuple[Tuple[Polynomial, ...], ...]

    @property
    def N(self) -> int:
        return len(self.grid)

    @property
    def degree(self) -> Optional[int]:
        degrees = [entry.degree for row in self.grid for entry in row if entry.degree is not None]
        return max(degrees) if degrees else None

    def entry(self, r: int, k: int) -> Polynomial:
        return self.grid[r][k]

    def coefficient(self, p: int, precision: Precision) -> np.ndarray:
        """The N x N matrix multiplying ``y^p``."""
        matrix = precision.zeros((self.N, self.N))
        for r, row in enumerate(self.grid):
            for k, entry in enumerate(row):
                if entry.degree is not None and p <= entry.degree:
                    matrix[r, k] = entry.coeffs[p]
        return matrix

    def coefficients(self, precision: Precision) -> List[np.ndarray]:
        degree = self.degree
        return [self.coefficient(p, precision) for p in range((degree if degree is not None else -1) + 1)]


def unfold_degree_bound(n: int, r: int, k: int, N: int) -> int:
    """Largest possible degree of entry ``(r, k)`` of the n-th unfolded block; negative means zero."""
    return (n * N + r - k) // N


def unfold(seq: Sequence[Polynomial], h: FactoredNodes, n: int, precision: Optional[Precision] = None) -> MatrixPoly:
    """Block n of the unfolded family: entry ``(r, k) = R_k(p_{nN + r})``."""
    precision = precision or default_precision()
    N = h.N
    if len(seq) < (n + 1) * N:
        raise OPAlchemyValidationError(f"unfolding block {n} needs polynomials up to degree {(n + 1) * N - 1}")
    rows = []
    for r in range(N):
        table = h_basis_decompose(seq[n * N + r], h, precision)
        rows.append(tuple(Polynomial(table[:, k]) for k in range(N)))
    return MatrixPoly(tuple(rows))


def unfold_family(seq: Sequence[Polynomial], h: FactoredNodes, blocks: int, precision=None) -> List[MatrixPoly]:
    return [unfold(seq, h, n, precision) for n in range(blocks)]


def fold_row(matrix_poly: MatrixPoly, r: int, h: FactoredNodes, precision: Optional[Precision] = None) -> Polynomial:
    """Recovers the scalar polynomial behind row r: ``sum_k t^k P[r][k](h(t))``."""
    return r_fold(matrix_poly.grid[r], h, precision)


@dataclass(frozen=True, eq=False)
class MatrixMoments:
    """Symmetric N x N moments ``M_0, M_1, ...``.

    Attributes:
        moments: The matrices, mass block already added to ``M_0``.
        raw: The moments of ``mu`` alone.
        mass: The block added at ``s = 0``, if any.
        source: ``"mu"`` or ``"mu+masses"``.
    """

    moments: Tuple[np.ndarray, ...]
    raw: Tuple[np.ndarray, ...]
    mass: Optional[np.ndarray]
    source: str

    def __len__(self) -> int:
        return len(self.moments)

    def __getitem__(self, k: int) -> np.ndarray:
        if k >= len(self.moments):
            raise OPAlchemyMomentHorizonError(k, len(self.moments) - 1)
        return self.moments[k]

    @property
    def N(self) -> int:
        return self.moments[0].shape[0]

    def shifted(self) -> "MatrixMoments":
        """Moments of ``dM_0 = y dM``, i.e. ``M_{k+1}`` of ``mu`` without masses."""
        return MatrixMoments(self.raw[1:], self.raw[1:], None, "h*mu")

    def symmetry_defect(self) -> float:
        return max(max_abs(m - m.T) for m in self.moments)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "source": self.source,
            "moments": [[[float(x) for x in row] for row in m] for m in self.moments],
        }


def mass_matrix_L(masses: SobolevMass, h: Optional[FactoredNodes] = None, precision=None) -> np.ndarray:
    """``L = sum_{a, b} lambda_{a, b} v_a v_b^T`` with ``v_{(l, j)}[k] = k! / (k - j)! alpha_l^{k-j}``.

    Raises:
        OPAlchemyNodeMismatchError: ``h`` is given and its nodes differ from the nodes of the masses.
    """
    precision = precision or default_precision()
    nodes = masses.nodes
    if h is not None and h != nodes:
        raise OPAlchemyNodeMismatchError(h.nodes, nodes.nodes, message=NODE_SET_MISMATCH_ERROR_MESSAGE)
    N = nodes.N
    vectors = []
    for node, order in nodes.jet_index():
        alpha = precision.scalar(nodes.roots[node])
        vector = precision.zeros(N)
        for k in range(order, N):
            vector[k] = math.perm(k, order) * alpha ** (k - order)
        vectors.append(vector)
    lam = precision.array(masses.matrix)
    L = precision.zeros((N, N))
    for a, left in enumerate(vectors):
        for b, right in enumerate(vectors):
            if lam[a, b] != 0:
                L = L + lam[a, b] * np.outer(left, right)
    return (L + L.T) / 2


def matrix_moments_pushforward(
    mu: MomentFunctional, h: FactoredNodes, masses: Optional[SobolevMass] = None, k_max: int = 4
) -> MatrixMoments:
    """``M_s[i][j] = int h^s t^{i+j} dmu`` for ``s <= k_max``, plus ``L`` at ``s = 0`` when masses are given.

    Raises:
        OPAlchemyMomentHorizonError: ``mu`` lacks moment ``k_max N + 2N - 2``.
    """
    precision = mu.precision
    N = h.N
    needed = k_max * N + 2 * N - 2
    if needed > mu.horizon:
        raise OPAlchemyMomentHorizonError(needed, mu.horizon)
    expanded = h.expand(precision)
    power = Polynomial([1], precision=precision)
    raw = []
    for _ in range(k_max + 1):
        block = precision.zeros((N, N))
        for i in range(N):
            for j in range(N):
                block[i, j] = sum(c * mu.moment(index + i + j) for index, c in enumerate(power.coeffs))
        raw.append(block)
        power = power * expanded
    mass = mass_matrix_L(masses, h, precision) if masses is not None else None
    moments = list(raw)
    if mass is not None:
        moments[0] = raw[0] + mass
    return MatrixMoments(tuple(moments), tuple(raw), mass, "mu+masses" if mass is not None else "mu")


def matrix_gram(family: Sequence[MatrixPoly], moments: MatrixMoments, precision: Precision) -> np.ndarray:
    """Block matrix of ``sum_{p, q} A_p M_{p+q} B_q^T`` over the family."""
    N = moments.N
    coefficients = [poly.coefficients(precision) for poly in family]
    size = len(family) * N
    result = precision.zeros((size, size))
    for a, left in enumerate(coefficients):
        for b, right in enumerate(coefficients):
            block = precision.zeros((N, N))
            for p, A in enumerate(left):
                for q, B in enumerate(right):
                    block = block + A @ moments[p + q] @ B.T
            result[a * N : (a + 1) * N, b * N : (b + 1) * N] = block
    return result


def block_offdiagonal_defect(gram_matrix: np.ndarray, N: int) -> float:
    """Largest entry outside the diagonal N x N blocks, relative to the largest entry."""
    mask = np.kron(np.eye(gram_matrix.shape[0] // N, dtype=bool), np.ones((N, N), dtype=bool))
    return max_abs(gram_matrix[~mask]) / max(1.0, max_abs(gram_matrix))


@dataclass(frozen=True, eq=False)
class BlockTridiagonalView:
    """A band matrix cut into N x N blocks; trailing rows that don't fill a block are dropped."""

    N: int
    count: int
    dense: np.ndarray

    def block(self, I: int, J: int) -> np.ndarray:
        return self.dense[I * self.N : (I + 1) * self.N, J * self.N : (J + 1) * self.N]

    def off_tridiagonal_max(self) -> float:
        values = [max_abs(self.block(I, J)) for I in range(self.count) for J in range(self.count) if abs(I - J) > 1]
        return max(values) if values else 0.0

    def superdiagonal_unitriangular_deviation(self) -> float:
        """How far the blocks ``(I, I+1)`` are from lower triangular with unit diagonal."""
        worst = 0.0
        for I in range(self.count - 1):
            block = self.block(I, I + 1)
            identity = np.eye(self.N, dtype=bool)
            upper = np.triu(np.ones((self.N, self.N), dtype=bool), 1)
            worst = max(worst, max_abs(block[upper]), max_abs(block[identity] - 1))
        return worst

    def __matmul__(self, other: "BlockTridiagonalView") -> "BlockTridiagonalView":
        """Blockwise product, summing only over the nonzero block diagonals."""
        if other.N != self.N or other.count != self.count:
            raise OPAlchemyValidationError("block views of different shapes")
        result = np.zeros_like(self.dense)
        for I in range(self.count):
            for J in range(max(0, I - 2), min(self.count, I + 3)):
                total = np.zeros((self.N, self.N), dtype=self.dense.dtype)
                for K in range(max(0, I - 1, J - 1), min(self.count, I + 2, J + 2)):
                    total = total + self.block(I, K) @ other.block(K, J)
                result[I * self.N : (I + 1) * self.N, J * self.N : (J + 1) * self.N] = total
        return BlockTridiagonalView(self.N, self.count, result)


@dataclass(frozen=True)
class BlockStructureReport:
    N: int
    blocks: int
    block_tridiagonal: bool
    off_tridiagonal_max: float
    superdiagonal_deviation: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "blocks": self.blocks,
            "block_tridiagonal": self.block_tridiagonal,
            "off_tridiagonal_max": self.off_tridiagonal_max,
            "superdiagonal_deviation": self.superdiagonal_deviation,
        }


def block_partition(band: BandMatrix, N: int) -> Tuple[BlockTridiagonalView, BlockStructureReport]:
    """Cuts an (N, N)-band matrix into a block tridiagonal matrix of N x N blocks.

    Raises:
        OPAlchemyBandwidthError: A bandwidth exceeds N.
    """
    if band.lower > N or band.upper > N:
        raise OPAlchemyBandwidthError(band.lower, band.upper, N)
    count = band.M // N
    view = BlockTridiagonalView(N, count, band.to_dense()[: count * N, : count * N])
    off = view.off_tridiagonal_max()
    report = BlockStructureReport(N, count, off == 0.0, off, view.superdiagonal_unitriangular_deviation())
    return view, report
