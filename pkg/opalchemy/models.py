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

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic.v1 import BaseModel, Extra, Field, ValidationError, root_validator, validator

from opalchemy.constants import F64_MAX_LAGUERRE_HORIZON, OPA_PRECISION
from opalchemy.exceptions import OPAlchemyValidationError
from opalchemy.forms import (
    ExplicitMoments,
    GeronimusParams,
    LaguerreMoments,
    MomentFunctional,
    QuadratureMoments,
    SobolevMass,
    lambda_to_shat,
    shat_to_lambda,
)
from opalchemy.poly import FactoredNodes
from opalchemy.precision import Precision, parse_precision

SYMMETRY_TOLERANCE = 1e-12
REPORT_FORMATS = ("json", "csv", "both")


class LaguerreSpec(BaseModel):
    alpha: float = 0.0

    class Config:
        extra = Extra.forbid

    @validator("alpha")
    def alpha_above_minus_one(cls, value):
        if value <= -1:
            raise ValueError(f"alpha must exceed -1, got {value}")
        return value


class ExplicitSpec(BaseModel):
    moments: List[float]

    class Config:
        extra = Extra.forbid

    @validator("moments")
    def not_empty(cls, value):
        if not value:
            raise ValueError("at least one moment is required")
        return value


class QuadratureSpec(BaseModel):
    nodes: List[float]
    weights: List[float]

    class Config:
        extra = Extra.forbid

    @root_validator(skip_on_failure=True)
    def same_length(cls, values):
        if len(values["nodes"]) != len(values["weights"]) or not values["nodes"]:
            raise ValueError("quadrature needs equally many nodes and weights")
        return values


class MeasureSpec(BaseModel):
    """Exactly one of the three ways to give the measure."""

    laguerre: Optional[LaguerreSpec] = None
    explicit: Optional[ExplicitSpec] = None
    quadrature: Optional[QuadratureSpec] = None

    class Config:
        extra = Extra.forbid

    @root_validator(skip_on_failure=True)
    def exactly_one_variant(cls, values):
        given = [name for name in ("laguerre", "explicit", "quadrature") if values.get(name) is not None]
        if len(given) != 1:
            raise ValueError(f"measure needs exactly one of laguerre, explicit, quadrature; got {given or 'none'}")
        return values

    @property
    def variant(self) -> str:
        return next(name for name in ("laguerre", "explicit", "quadrature") if getattr(self, name) is not None)

    def build(self, horizon: int, precision: Precision) -> MomentFunctional:
        if self.laguerre is not None:
            return LaguerreMoments(self.laguerre.alpha, horizon, precision)
        if self.explicit is not None:
            return ExplicitMoments(self.explicit.moments[: horizon + 1], precision)
        return QuadratureMoments(self.quadrature.nodes, self.quadrature.weights, horizon, precision)


def _is_symmetric(matrix: List[List[float]]) -> bool:
    scale = max([1.0] + [abs(x) for row in matrix for x in row])
    return all(
        abs(matrix[i][j] - matrix[j][i]) <= SYMMETRY_TOLERANCE * scale
        for i in range(len(matrix))
        for j in range(len(matrix))
    )


class FormSpec(BaseModel):
    """The measure, the factored polynomial h and one parameter matrix (``shat`` or ``lambda``)."""

    measure: MeasureSpec
    h: List[Tuple[float, float]]
    shat: Optional[List[List[float]]] = None
    lambda_: Optional[List[List[float]]] = Field(None, alias="lambda")

    class Config:
        extra = Extra.forbid
        allow_population_by_field_name = True

    @validator("h")
    def valid_nodes(cls, value):
        try:
            FactoredNodes.from_pairs(value)
        except OPAlchemyValidationError as exc:
            raise ValueError(exc.reason)
        return value

    @root_validator(skip_on_failure=True)
    def one_symmetric_parameter(cls, values):
        shat, lam = values.get("shat"), values.get("lambda_")
        if (shat is None) == (lam is None):
            raise ValueError("give exactly one of 'shat' and 'lambda'")
        matrix, name = (shat, "shat") if shat is not None else (lam, "lambda")
        size = int(sum(multiplicity for _, multiplicity in values["h"]))
        if len(matrix) != size or any(len(row) != size for row in matrix):
            raise ValueError(f"'{name}' must be a {size} x {size} matrix (N = {size})")
        if not _is_symmetric(matrix):
            raise ValueError(f"'{name}' must be symmetric")
        return values

    def nodes(self) -> FactoredNodes:
        return FactoredNodes.from_pairs(self.h)

    @property
    def N(self) -> int:
        return self.nodes().N

    def build(
        self, horizon: int, precision: Precision
    ) -> Tuple[MomentFunctional, GeronimusParams, SobolevMass]:
        """Moments of mu together with both parametrizations of the form."""
        measure = self.measure.build(horizon, precision)
        nodes = self.nodes()
        if self.shat is not None:
            params = GeronimusParams.from_matrix(nodes, self.shat, precision)
            return measure, params, shat_to_lambda(measure, params)
        masses = SobolevMass.from_matrix(nodes, self.lambda_, precision)
        return measure, lambda_to_shat(measure, nodes, masses), masses


class OutputSpec(BaseModel):
    directory: str = "opalchemy-report"
    format: str = "both"

    class Config:
        extra = Extra.forbid

    @validator("format")
    def known_format(cls, value):
        if value not in REPORT_FORMATS:
            raise ValueError(f"format must be one of {', '.join(REPORT_FORMATS)}")
        return value


class RunConfig(BaseModel):
    """One run: the form, the largest degree, the truncation order and the precision.

    Attributes:
        form: Measure, h and parameters.
        n_max: Largest degree reported by ``transform``.
        truncation: Order M of the finite sections; defaults to ``n_max + 2N``.
        precision: ``f64`` or ``hp<bits>``.
        output: Where and how reports are written.
    """

    form: FormSpec
    n_max: int = 12
    truncation: Optional[int] = None
    precision: str = OPA_PRECISION
    output: OutputSpec = OutputSpec()

    class Config:
        extra = Extra.forbid

    @validator("n_max")
    def positive_degree(cls, value):
        if value < 1:
            raise ValueError("n_max must be at least 1")
        return value

    @validator("precision")
    def known_precision(cls, value):
        try:
            return parse_precision(value).name
        except OPAlchemyValidationError as exc:
            raise ValueError(exc.reason)

    @root_validator(skip_on_failure=True)
    def consistent_sizes(cls, values):
        N = int(sum(multiplicity for _, multiplicity in values["form"].h))
        n_max, truncation = values["n_max"], values.get("truncation")
        M = truncation if truncation is not None else n_max + 2 * N
        if M < n_max + 2 * N:
            raise ValueError(f"truncation M={M} must be at least n_max + 2N = {n_max + 2 * N}")
        horizon = 2 * M + 3 * N
        measure = values["form"].measure
        if measure.explicit is not None and len(measure.explicit.moments) < horizon + 1:
            raise ValueError(
                f"{horizon + 1} moments are needed for n_max={n_max}, M={M}, N={N}; "
                f"got {len(measure.explicit.moments)}"
            )
        if measure.laguerre is not None and values["precision"] == "f64" and horizon > F64_MAX_LAGUERRE_HORIZON:
            raise ValueError(f"Laguerre moments up to {horizon} overflow in f64; use a precision such as hp256")
        return values

    @property
    def N(self) -> int:
        return self.form.N

    @property
    def M(self) -> int:
        return self.truncation if self.truncation is not None else self.n_max + 2 * self.N

    @property
    def required_horizon(self) -> int:
        """Moments of mu needed for sequences up to degree ``M + N``."""
        return 2 * self.M + 3 * self.N

    @classmethod
    def parse(cls, data: Dict[str, Any]) -> "RunConfig":
        """Validates a config dictionary.

        Raises:
            OPAlchemyValidationError: The document is malformed.
        """
        try:
            return cls.parse_obj(data)
        except ValidationError as exc:
            raise OPAlchemyValidationError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise OPAlchemyValidationError(f"config file {path} not found")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise OPAlchemyValidationError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.parse(data)

    def with_overrides(
        self,
        n_max: Optional[int] = None,
        truncation: Optional[int] = None,
        precision: Optional[str] = None,
        directory: Optional[str] = None,
        format: Optional[str] = None,
    ) -> "RunConfig":
        """A copy with the given fields replaced and validated again.

        Raising ``n_max`` alone drops a stored truncation that no longer fits, so M falls back to ``n_max + 2N``.
        """
        data = self.to_dict()
        if n_max is not None:
            data["n_max"] = n_max
            if truncation is None and data.get("truncation", n_max + 2 * self.N) < n_max + 2 * self.N:
                del data["truncation"]
        if truncation is not None:
            data["truncation"] = truncation
        if precision is not None:
            data["precision"] = precision
        if directory is not None:
            data["output"]["directory"] = directory
        if format is not None:
            data["output"]["format"] = format
        return RunConfig.parse(data)

    def to_dict(self) -> Dict[str, Any]:
        return json.loads(self.json(by_alias=True, exclude_none=True))
