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

"""Arithmetic backends shared by every numerical module.

Arrays are plain numpy arrays. The binary64 backend uses ``float64`` arrays and
numpy/scipy routines; the multi-precision backend stores ``mpmath`` numbers in
``dtype=object`` arrays and routes the dense linear algebra through an
``mpmath`` context of the requested bit precision.
"""

import logging
import math
import re
import warnings
from abc import ABC, abstractmethod
from functools import lru_cache
from typing import Any, Optional

import numpy as np
import scipy.linalg
import scipy.special
from mpmath import MPContext

from opalchemy.constants import OPA_CONDITION_THRESHOLD, OPA_PRECISION
from opalchemy.exceptions import (
    OPAlchemyConditioningWarning,
    OPAlchemyPositivityError,
    OPAlchemyPrecisionError,
    OPAlchemySingularSystemError,
)

logger = logging.getLogger(__name__)

_HP_PATTERN = re.compile(r"^hp(\d+)$")


class Precision(ABC):
    """Working precision of a computation.

    Attributes:
        name: Name as used on the command line, e.g. ``f64`` or ``hp256``.
        bits: Number of mantissa bits.
    """

    name: str
    bits: int
    dtype: Any

    @property
    def eps(self) -> float:
        return 2.0 ** (1 - self.bits)

    @property
    def condition_threshold(self) -> float:
        return OPA_CONDITION_THRESHOLD * 2.0 ** (self.bits - 53)

    def scaled_tolerance(self, tolerance: float) -> float:
        """A binary64 relative tolerance carried over to this precision.

        Only half of the extra mantissa bits tighten the tolerance, so rounding of
        ill-conditioned intermediate quantities stays below it.
        """
        return tolerance * 2.0 ** ((53 - self.bits) / 2)

    @abstractmethod
    def scalar(self, value) -> Any:
        """Converts a number to the working precision."""
        raise NotImplementedError("Subclasses must override scalar().")

    @abstractmethod
    def array(self, values) -> np.ndarray:
        """Converts a (nested) sequence of numbers to an array in the working precision."""
        raise NotImplementedError("Subclasses must override array().")

    @abstractmethod
    def solve(self, a: np.ndarray, b: np.ndarray, what: str = "linear system") -> np.ndarray:
        raise NotImplementedError("Subclasses must override solve().")

    @abstractmethod
    def det(self, a: np.ndarray) -> Any:
        raise NotImplementedError("Subclasses must override det().")

    @abstractmethod
    def cholesky(self, a: np.ndarray) -> np.ndarray:
        """Returns the lower triangular Cholesky factor.

        Raises:
            OPAlchemyPositivityError: The matrix is not positive definite.
        """
        raise NotImplementedError("Subclasses must override cholesky().")

    @abstractmethod
    def sqrt(self, value) -> Any:
        raise NotImplementedError("Subclasses must override sqrt().")

    @abstractmethod
    def gamma(self, value) -> Any:
        raise NotImplementedError("Subclasses must override gamma().")

    def zeros(self, shape) -> np.ndarray:
        return self.array(np.zeros(shape))

    def eye(self, size: int) -> np.ndarray:
        return self.array(np.eye(size))

    def to_float(self, values) -> np.ndarray:
        return np.array(values, dtype=float)

    def condition_estimate(self, a: np.ndarray) -> float:
        if a.size == 0:
            return 1.0
        with np.errstate(all="ignore"):
            estimate = np.linalg.cond(self.to_float(a))
        return float(estimate) if np.isfinite(estimate) else math.inf

    def warn_if_ill_conditioned(self, a: np.ndarray, what: str) -> float:
        """Emits an OPAlchemyConditioningWarning when ``a`` is too ill-conditioned for this precision."""
        estimate = self.condition_estimate(a)
        if estimate > self.condition_threshold:
            logger.debug("%s has condition estimate %.3e in %s", what, estimate, self.name)
            warnings.warn(OPAlchemyConditioningWarning(what, estimate, self.condition_threshold), stacklevel=3)
        return estimate

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class Float64Precision(Precision):
    name = "f64"
    bits = 53
    dtype = np.float64

    def scalar(self, value) -> float:
        return float(value)

    def array(self, values) -> np.ndarray:
        return np.array(values, dtype=np.float64)

    def solve(self, a: np.ndarray, b: np.ndarray, what: str = "linear system") -> np.ndarray:
        if a.shape[0] == 0:
            return np.zeros(np.shape(b), dtype=np.float64)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                return scipy.linalg.solve(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise OPAlchemySingularSystemError(what) from exc

    def det(self, a: np.ndarray) -> float:
        if a.shape[0] == 0:
            return 1.0
        return float(scipy.linalg.det(np.asarray(a, dtype=float)))

    def cholesky(self, a: np.ndarray) -> np.ndarray:
        try:
            return np.linalg.cholesky(np.asarray(a, dtype=float))
        except np.linalg.LinAlgError as exc:
            raise OPAlchemyPositivityError(degree=None, reason="the matrix has no Cholesky factor") from exc

    def sqrt(self, value) -> float:
        if value < 0:
            raise OPAlchemyPositivityError(degree=None, reason=f"square root of negative value {float(value)}")
        return math.sqrt(value)

    def gamma(self, value) -> float:
        return float(scipy.special.gamma(value))


class MultiPrecision(Precision):
    """Precision backed by a private ``mpmath`` context.

    Args:
        bits: Mantissa bits, at least 53.
    """

    dtype = object

    def __init__(self, bits: int):
        if bits < 53:
            raise OPAlchemyPrecisionError(f"hp{bits}")
        self.bits = bits
        self.name = f"hp{bits}"
        self.ctx = MPContext()
        self.ctx.prec = bits
        self._convert = np.frompyfunc(self.ctx.mpf, 1, 1)

    def scalar(self, value):
        return self.ctx.mpf(value)

    def array(self, values) -> np.ndarray:
        converted = self._convert(np.asarray(values, dtype=object))
        if not isinstance(converted, np.ndarray):
            return np.array(converted, dtype=object)
        return converted.astype(object)

    def _matrix(self, a: np.ndarray):
        return self.ctx.matrix(self.array(a).tolist())

    def solve(self, a: np.ndarray, b: np.ndarray, what: str = "linear system") -> np.ndarray:
        if a.shape[0] == 0:
            return self.zeros(np.shape(b))
        matrix = self._matrix(a)
        rhs = self.array(b)
        columns = rhs.reshape(rhs.shape[0], -1)
        solution = self.zeros(columns.shape)
        try:
            for j in range(columns.shape[1]):
                x = self.ctx.lu_solve(matrix, self.ctx.matrix(columns[:, j].tolist()))
                for i in range(columns.shape[0]):
                    solution[i, j] = x[i]
        except ZeroDivisionError as exc:
            raise OPAlchemySingularSystemError(what) from exc
        return solution.reshape(rhs.shape)

    def det(self, a: np.ndarray):
        if a.shape[0] == 0:
            return self.ctx.mpf(1)
        return self.ctx.det(self._matrix(a))

    def cholesky(self, a: np.ndarray) -> np.ndarray:
        try:
            factor = self.ctx.cholesky(self._matrix(a))
        except (ValueError, ZeroDivisionError) as exc:
            raise OPAlchemyPositivityError(degree=None, reason="the matrix has no Cholesky factor") from exc
        return np.array(factor.tolist(), dtype=object)

    def sqrt(self, value):
        value = self.ctx.mpf(value)
        if value < 0:
            raise OPAlchemyPositivityError(degree=None, reason=f"square root of negative value {float(value)}")
        return self.ctx.sqrt(value)

    def gamma(self, value):
        return self.ctx.gamma(self.ctx.mpf(value))


FLOAT64 = Float64Precision()


def parse_precision(name: str) -> Precision:
    """Returns the precision named ``f64`` or ``hp<bits>``.

    Raises:
        OPAlchemyPrecisionError: The name is not recognised.
    """
    return _precision_named(str(name).strip().lower())


@lru_cache(maxsize=None)
def _precision_named(name: str) -> Precision:
    if name == "f64":
        return FLOAT64
    match = _HP_PATTERN.match(name)
    if match is None:
        raise OPAlchemyPrecisionError(name)
    return MultiPrecision(int(match.group(1)))


def default_precision() -> Precision:
    return parse_precision(OPA_PRECISION)


def infer_precision(values: np.ndarray, fallback: Optional[Precision] = None) -> Precision:
    """Recovers the precision an array was built in."""
    values = np.asarray(values)
    if values.dtype != object:
        return FLOAT64
    for value in values.flat:
        context = getattr(value, "context", None)
        if context is not None:
            return parse_precision(f"hp{context.prec}")
    return fallback if fallback is not None else default_precision()


def max_abs(values) -> float:
    """Largest absolute entry as a float, 0.0 for empty input."""
    values = np.asarray(values)
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(np.array(values, dtype=float))))
