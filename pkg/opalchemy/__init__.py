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

import warnings

from opalchemy.precision import FLOAT64, MultiPrecision, Precision, parse_precision  # noqa F401
from opalchemy.poly import (  # noqa F401
    FactoredNodes,
    Polynomial,
    h_basis_decompose,
    jet,
    r_fold,
    r_unfold,
    s_slice,
)
from opalchemy.forms import (  # noqa F401
    GeronimusForm,
    GeronimusParams,
    MeasureForm,
    MomentFunctional,
    SobolevForm,
    SobolevMass,
    lambda_to_shat,
    pushforward_moments,
    shat_to_lambda,
)
from opalchemy.orthopoly import JacobiMatrix, MonicOPS, gs_oracle, jacobi, kernel, monic_ops_from_form  # noqa F401
from opalchemy.geronimus import (  # noqa F401
    ConnectionCoeffs,
    Definiteness,
    connection_coefficients,
    definiteness,
    existence_system,
    pstar_determinant,
    pstar_sequence,
)
from opalchemy.factor import BandMatrix, TruncationWindow, build_Lmon, build_Umon, h_of_jacobi, jstar_band  # noqa F401
from opalchemy.blockview import block_partition, matrix_moments_pushforward, unfold  # noqa F401
from opalchemy.models import RunConfig  # noqa F401
from opalchemy.pipeline import GeronimusPipeline  # noqa F401
from opalchemy.exceptions import OPAlchemyError, OPAlchemyWarning  # noqa F401

warnings.filterwarnings("once", category=OPAlchemyWarning)
__all__ = ["GeronimusPipeline", "RunConfig"]
