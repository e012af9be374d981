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
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.special

from opalchemy.constants import OPA_MOMENT_HORIZON
from opalchemy.exceptions import (
    OPAlchemyMomentHorizonError,
    OPAlchemyNodeMismatchError,
    OPAlchemyValidationError,
)
from opalchemy.poly import FactoredNodes, Polynomial, confluent_matrix, monomial_jets
from opalchemy.precision import Precision, default_precision, max_abs

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12


def _symmetrized(matrix: np.ndarray, what: str) -> np.ndarray:
    scale = max(1.0, max_abs(matrix))
    if max_abs(matrix - matrix.T) > SYMMETRY_TOLERANCE * scale:
        raise OPAlchemyValidationError(f"{what} must be symmetric")
    symmetric = (matrix + matrix.T) / 2
    symmetric.setflags(write=False)
    return symmetric


class MomentFunctional(ABC):
    """A linear functional on polynomials known through its moments ``int t^k dmu``.

    Moments are computed once up to ``horizon``; asking for a later one raises
    :class:`OPAlchemyMomentHorizonError`.
    """

    variant: str = "abstract"

    def __init__(self, horizon: int, precision: Optional[Precision] = None):
        if horizon < 0:
            raise OPAlchemyValidationError("moment horizon must be nonnegative")
        self._precision = precision or default_precision()
        self._horizon = horizon
        self._moments = self._compute_moments()
        self._moments.setflags(write=False)

    @abstractmethod
    def _compute_moments(self) -> np.ndarray:
        raise NotImplementedError("Subclasses must override _compute_moments().")

    @property
    def horizon(self) -> int:
        return self._horizon

    @property
    def precision(self) -> Precision:
        return self._precision

    def moment(self, k: int):
        if k < 0 or k > self._horizon:
            raise OPAlchemyMomentHorizonError(k, self._horizon)
        return self._moments[k]

    def moments(self, count: Optional[int] = None) -> np.ndarray:
        """The first ``count`` moments (all of them by default)."""
        if count is None:
            return self._moments
        if count - 1 > self._horizon:
            raise OPAlchemyMomentHorizonError(count - 1, self._horizon)
        return self._moments[:count]

    def hankel(self, n: int, offset: int = 0) -> np.ndarray:
        """The (n+1) x (n+1) matrix of moments ``m[i + j + offset]``."""
        if n < 0:
            return self._precision.zeros((0, 0))
        last = 2 * n + offset
        if last > self._horizon:
            raise OPAlchemyMomentHorizonError(last, self._horizon)
        index = np.add.outer(np.arange(n + 1), np.arange(n + 1)) + offset
        return self._moments[index]

    def hankel_minors(self, n: int) -> List[Any]:
        """Leading principal minors of the Hankel matrix of size n+1."""
        hankel = self.hankel(n)
        return [self._precision.det(hankel[: k + 1, : k + 1]) for k in range(n + 1)]

    def is_positive_definite(self, n: int) -> bool:
        return all(minor > 0 for minor in self.hankel_minors(n))

    def integrate(self, p: Polynomial):
        """``int p dmu``."""
        if p.is_zero:
            return self._precision.scalar(0)
        return sum(c * self.moment(k) for k, c in enumerate(p.coeffs))

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant, "horizon": self._horizon}

    @staticmethod
    def laguerre(alpha: float, horizon: int = OPA_MOMENT_HORIZON, precision: Optional[Precision] = None):
        return LaguerreMoments(alpha, horizon, precision)

    @staticmethod
    def explicit(moments: Sequence, precision: Optional[Precision] = None):
        return ExplicitMoments(moments, precision)

    @staticmethod
    def quadrature(
        nodes: Sequence[float], weights: Sequence[float], horizon: int = OPA_MOMENT_HORIZON, precision=None
    ):
        return QuadratureMoments(nodes, weights, horizon, precision)

    @staticmethod
    def gauss_laguerre(alpha: float, points: int, precision: Optional[Precision] = None):
        """Gauss-Laguerre rule for ``t^alpha e^{-t}``; its moments are exact up to ``2 points - 1``."""
        nodes, weights = scipy.special.roots_genlaguerre(points, alpha)
        return QuadratureMoments(nodes, weights, 2 * points - 1, precision)


class LaguerreMoments(MomentFunctional):
    """Moments ``Gamma(alpha + k + 1)`` of ``t^alpha e^{-t} dt`` on (0, inf)."""

    variant = "laguerre"

    def __init__(self, alpha: float, horizon: int = OPA_MOMENT_HORIZON, precision: Optional[Precision] = None):
        if not alpha > -1:
            raise OPAlchemyValidationError(f"Laguerre parameter alpha must exceed -1, got {alpha}")
        self.alpha = alpha
        super().__init__(horizon, precision)

    def _compute_moments(self) -> np.ndarray:
        moments = self._precision.zeros(self._horizon + 1)
        alpha = self._precision.scalar(self.alpha)
        moments[0] = self._precision.gamma(alpha + 1)
        for k in range(self._horizon):
            moments[k + 1] = (alpha + k + 1) * moments[k]
        if moments.dtype != object and not np.isfinite(moments[-1]):
            raise OPAlchemyValidationError(
                f"Laguerre moment {self._horizon} overflows in {self._precision.name}; use a higher precision"
            )
        return moments

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "alpha": self.alpha}


class ExplicitMoments(MomentFunctional):
    variant = "explicit"

    def __init__(self, moments: Sequence, precision: Optional[Precision] = None, source: str = "explicit"):
        self._given = list(moments)
        self.source = source
        if not self._given:
            raise OPAlchemyValidationError("explicit moment list is empty")
        super().__init__(len(self._given) - 1, precision)

    def _compute_moments(self) -> np.ndarray:
        return self._precision.array(self._given)

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "source": self.source}


class QuadratureMoments(MomentFunctional):
    """Moments of the discrete measure ``sum_i w_i delta(t - x_i)``."""

    variant = "quadrature"

    def __init__(self, nodes: Sequence[float], weights: Sequence[float], horizon: int, precision=None):
        if len(nodes) != len(weights) or len(nodes) == 0:
            raise OPAlchemyValidationError("quadrature needs equally many nodes and weights")
        self.nodes = [float(x) for x in nodes]
        self.weights = [float(w) for w in weights]
        super().__init__(horizon, precision)

    def _compute_moments(self) -> np.ndarray:
        nodes = self._precision.array(self.nodes)
        weights = self._precision.array(self.weights)
        moments = self._precision.zeros(self._horizon + 1)
        powers = weights.copy()
        for k in range(self._horizon + 1):
            moments[k] = powers.sum()
            powers = powers * nodes
        return moments

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "points": len(self.nodes)}


def moment(mu: MomentFunctional, k: int):
    return mu.moment(k)


def pushforward_moments(mu: MomentFunctional, h: FactoredNodes, horizon: Optional[int] = None) -> ExplicitMoments:
    """Moments of ``dmu_0 = h dmu``.

    Raises:
        OPAlchemyMomentHorizonError: ``mu`` has fewer than ``horizon + N`` moments.
    """
    if horizon is None:
        horizon = mu.horizon - h.N
    if horizon < 0 or horizon + h.N > mu.horizon:
        raise OPAlchemyMomentHorizonError(max(horizon, 0) + h.N, mu.horizon)
    b = h.expand(mu.precision).coeffs
    moments = mu.moments()
    shifted = [sum(b[j] * moments[k + j] for j in range(len(b))) for k in range(horizon + 1)]
    return ExplicitMoments(shifted, mu.precision, source="pushforward")


@dataclass(frozen=True, eq=False)
class SobolevMass:
    """Point masses on derivative jets at the roots of h.

    Attributes:
        nodes: The factored polynomial whose roots carry the masses.
        matrix: Symmetric N x N matrix Lambda in jet ordering (node-major, derivative ascending).
    """

    nodes: FactoredNodes
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] != self.nodes.N:
            raise OPAlchemyNodeMismatchError(self.nodes.N, matrix.shape[0] if matrix.ndim else 0)
        object.__setattr__(self, "matrix", _symmetrized(matrix, "mass matrix Lambda"))

    @classmethod
    def from_matrix(cls, nodes: FactoredNodes, matrix, precision: Optional[Precision] = None) -> "SobolevMass":
        precision = precision or default_precision()
        return cls(nodes, precision.array(matrix))

    @classmethod
    def from_entries(
        cls, nodes: FactoredNodes, entries: Mapping[Tuple[int, int, int, int], float], precision=None
    ) -> "SobolevMass":
        """Builds Lambda from entries ``lambda[i, j, l, w]`` (derivative i at node l, j at node w)."""
        precision = precision or default_precision()
        matrix = precision.zeros((nodes.N, nodes.N))
        for (i, j, l, w), value in entries.items():
            a, b = _jet_position(nodes, l, i), _jet_position(nodes, w, j)
            matrix[a, b] = precision.scalar(value)
            matrix[b, a] = precision.scalar(value)
        return cls(nodes, matrix)

    @classmethod
    def from_diagonal_sobolev(
        cls, masses: Mapping[float, Sequence[float]], precision: Optional[Precision] = None
    ) -> "SobolevMass":
        """Diagonal Sobolev masses ``M[c][j]`` on ``f^(j)(c) g^(j)(c)``.

        The root c gets multiplicity ``len(masses[c])``, i.e. one more than the highest derivative.
        """
        precision = precision or default_precision()
        nodes = FactoredNodes.from_pairs((root, len(values)) for root, values in masses.items())
        diagonal = [value for values in masses.values() for value in values]
        return cls(nodes, precision.array(np.diag(np.asarray(diagonal, dtype=object))))

    @property
    def N(self) -> int:
        return self.nodes.N

    def lam(self, i: int, j: int, l: int, w: int):
        return self.matrix[_jet_position(self.nodes, l, i), _jet_position(self.nodes, w, j)]


def _jet_position(nodes: FactoredNodes, node: int, order: int) -> int:
    if not 0 <= node < len(nodes.nodes) or not 0 <= order < nodes.multiplicities[node]:
        raise OPAlchemyValidationError(f"no jet entry for derivative {order} at node {node}")
    return sum(nodes.multiplicities[:node]) + order


@dataclass(frozen=True, eq=False)
class GeronimusParams:
    """The polynomial h and the free values ``shat[i][j] = [t^i, t^j]_h`` for ``i, j < N``."""

    h: FactoredNodes
    shat: np.ndarray

    def __post_init__(self):
        shat = np.asarray(self.shat)
        if shat.ndim != 2 or shat.shape[0] != shat.shape[1] or shat.shape[0] != self.h.N:
            raise OPAlchemyNodeMismatchError(self.h.N, shat.shape[0] if shat.ndim else 0)
        object.__setattr__(self, "shat", _symmetrized(shat, "Geronimus parameter matrix shat"))

    @classmethod
    def from_matrix(cls, h: FactoredNodes, shat, precision: Optional[Precision] = None) -> "GeronimusParams":
        precision = precision or default_precision()
        return cls(h, precision.array(shat))

    @property
    def N(self) -> int:
        return self.h.N


def corollary_masses(shat_minus_moments, N: int, precision: Optional[Precision] = None) -> SobolevMass:
    """Masses for ``h = t^N``, where the confluent matrix is ``diag(k!)``: ``Lambda = D S D``, ``D = diag(1/k!)``."""
    precision = precision or default_precision()
    s = precision.array(shat_minus_moments)
    scale = precision.array([1 / precision.scalar(math.factorial(k)) for k in range(N)])
    return SobolevMass(FactoredNodes(((0.0, N),)), s * np.outer(scale, scale))


class BilinearForm(ABC):
    """Symmetric bilinear form on polynomials, given through its Gram matrix on monomials."""

    kind: str = "abstract"

    def __init__(self, measure: MomentFunctional):
        self._measure = measure
        self._gram_cache: Optional[np.ndarray] = None

    @property
    def measure(self) -> MomentFunctional:
        return self._measure

    @property
    def precision(self) -> Precision:
        return self._measure.precision

    @property
    def is_hankel(self) -> bool:
        """Whether multiplication by t is symmetric for this form."""
        return False

    @abstractmethod
    def _assemble_gram(self, n: int) -> np.ndarray:
        raise NotImplementedError("Subclasses must override _assemble_gram().")

    def gram(self, n: int) -> np.ndarray:
        """Read-only (n+1) x (n+1) matrix of ``inner(t^i, t^j)``."""
        cache = self._gram_cache
        if cache is None or cache.shape[0] < n + 1:
            cache = self._assemble_gram(n)
            cache.setflags(write=False)
            self._gram_cache = cache
        return cache[: n + 1, : n + 1]

    def inner(self, f: Polynomial, g: Polynomial):
        if f.is_zero or g.is_zero:
            return self.precision.scalar(0)
        size = max(len(f.coeffs), len(g.coeffs))
        gram = self.gram(size - 1)
        a = self.precision.array(f.coefficients(size))
        b = self.precision.array(g.coefficients(size))
        return (a @ gram @ b + b @ gram @ a) / 2

    def inner_matrix(self, fs: Sequence[Polynomial], gs: Sequence[Polynomial]) -> np.ndarray:
        """Matrix of ``inner(fs[a], gs[b])``."""
        size = max([len(p.coeffs) for p in list(fs) + list(gs)] + [1])
        gram = self.gram(size - 1)
        left = self.precision.array([p.coefficients(size) for p in fs]).reshape(len(fs), size)
        right = self.precision.array([p.coefficients(size) for p in gs]).reshape(len(gs), size)
        return left @ gram @ right.T

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "measure": self._measure.to_dict()}


class MeasureForm(BilinearForm):
    kind = "measure"

    @property
    def is_hankel(self) -> bool:
        return True

    def _assemble_gram(self, n: int) -> np.ndarray:
        return self._measure.hankel(n).copy()


class SobolevForm(BilinearForm):
    """``int f g dmu + jet(f)^T Lambda jet(g)``."""

    kind = "sobolev"

    def __init__(self, measure: MomentFunctional, masses: SobolevMass):
        super().__init__(measure)
        self.masses = masses

    def _assemble_gram(self, n: int) -> np.ndarray:
        jets = monomial_jets(self.masses.nodes, n + 1, self.precision)
        lam = self.precision.array(self.masses.matrix)
        gram = self._measure.hankel(n) + jets.T @ lam @ jets
        return (gram + gram.T) / 2

    def to_geronimus(self) -> "GeronimusForm":
        return GeronimusForm(self._measure, lambda_to_shat(self._measure, self.masses.nodes, self.masses))


class GeronimusForm(BilinearForm):
    """The form with ``[h f, g]_h = int f g h dmu`` and ``[t^i, t^j]_h = shat[i][j]`` for ``i, j < N``.

    Evaluated as ``int f g dmu + a_0(f)^T S a_0(g)``, where ``a_0`` are the coefficients of the
    remainder modulo h and ``S = shat - (m[i + j])``.
    """

    kind = "geronimus"

    def __init__(self, measure: MomentFunctional, params: GeronimusParams):
        super().__init__(measure)
        self.params = params

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def S(self) -> np.ndarray:
        return self.precision.array(self.params.shat) - self._measure.hankel(self.N - 1)

    def remainder_matrix(self, n: int) -> np.ndarray:
        """N x (n+1) matrix whose column j holds the coefficients of ``t^j mod h``."""
        divisor = self.params.h.expand(self.precision)
        columns = [Polynomial.monomial(j, self.precision).divmod(divisor)[1].coefficients(self.N) for j in range(n + 1)]
        return self.precision.array(columns).reshape(n + 1, self.N).T

    def _assemble_gram(self, n: int) -> np.ndarray:
        remainders = self.remainder_matrix(n)
        gram = self._measure.hankel(n) + remainders.T @ self.S @ remainders
        return (gram + gram.T) / 2

    def to_sobolev(self) -> SobolevForm:
        return SobolevForm(self._measure, shat_to_lambda(self._measure, self.params))


def lambda_to_shat(mu: MomentFunctional, h: FactoredNodes, masses) -> GeronimusParams:
    """``shat = A^T Lambda A + (m[i + j])`` with A the confluent Vandermonde matrix of h."""
    precision = mu.precision
    lam = masses.matrix if isinstance(masses, SobolevMass) else masses
    lam = precision.array(lam)
    if lam.shape != (h.N, h.N):
        raise OPAlchemyNodeMismatchError(h.N, lam.shape[0])
    a = confluent_matrix(h, precision)
    shat = a.T @ lam @ a + mu.hankel(h.N - 1)
    return GeronimusParams(h, (shat + shat.T) / 2)


def shat_to_lambda(mu: MomentFunctional, params: GeronimusParams) -> SobolevMass:
    """``Lambda = A^{-T} S A^{-1}``, the inverse of :func:`lambda_to_shat`."""
    precision = mu.precision
    a = confluent_matrix(params.h, precision)
    a_inverse = precision.solve(a, precision.eye(params.N), what="confluent Vandermonde matrix")
    s = precision.array(params.shat) - mu.hankel(params.N - 1)
    lam = a_inverse.T @ s @ a_inverse
    return SobolevMass(params.h, (lam + lam.T) / 2)


def sobolev_inner(mu: MomentFunctional, masses: SobolevMass, f: Polynomial, g: Polynomial):
    return SobolevForm(mu, masses).inner(f, g)


def geronimus_inner(mu: MomentFunctional, params: GeronimusParams, f: Polynomial, g: Polynomial):
    return GeronimusForm(mu, params).inner(f, g)


def gram(form: BilinearForm, n: int) -> np.ndarray:
    return form.gram(n)
