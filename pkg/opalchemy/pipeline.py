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

"""End-to-end runs: every object of a run is computed lazily from one :class:`RunConfig`."""

import logging
from datetime import datetime, timezone
from functools import cached_property
from typing import Any, Dict, List, Optional

from opalchemy.blockview import BlockStructureReport, block_partition
from opalchemy.constants import REPORT_SCHEMA
from opalchemy.exceptions import OPAlchemyPositivityError
from opalchemy.factor import (
    BandMatrix,
    ResidualReport,
    TruncationWindow,
    build_Lmon,
    build_Umon,
    cholesky_C,
    cholesky_oracle,
    h_of_jacobi,
    jstar_band,
    jstar_band_defect,
    jstar_orthonormal,
    verify_cholesky,
    verify_LU,
    verify_UL,
)
from opalchemy.forms import (
    GeronimusForm,
    GeronimusParams,
    MeasureForm,
    MomentFunctional,
    SobolevForm,
    SobolevMass,
    pushforward_moments,
)
from opalchemy.geronimus import (
    ConnectionCoeffs,
    DefinitenessReport,
    connection_coefficients,
    definiteness,
    gram_is_positive_definite,
    pstar_sequence,
)
from opalchemy.models import RunConfig
from opalchemy.orthopoly import JacobiMatrix, MonicOPS, jacobi, monic_ops_from_form
from opalchemy.poly import FactoredNodes
from opalchemy.precision import Precision, max_abs, parse_precision

logger = logging.getLogger(__name__)


def table(columns: List[str], rows: List[List[Any]]) -> Dict[str, Any]:
    return {"columns": columns, "rows": rows}


class GeronimusPipeline:
    """Lazily evaluated run over a validated configuration.

    Sequences are computed once and shared between the commands: the base sequence of
    ``mu_0 = h mu`` reaches degree ``M + N - 1`` so that ``h(J_mon)`` can be cut to order M,
    ``P*`` reaches degree ``M - 1`` and the sequence ``R`` of ``mu`` reaches ``n_max + N``.
    """

    def __init__(self, config: RunConfig):
        self.config = config

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def M(self) -> int:
        return self.config.M

    @property
    def n_max(self) -> int:
        return self.config.n_max

    @cached_property
    def precision(self) -> Precision:
        return parse_precision(self.config.precision)

    @cached_property
    def nodes(self) -> FactoredNodes:
        return self.config.form.nodes()

    @cached_property
    def _parametrizations(self):
        logger.debug("Building moments up to %d in %s", self.config.required_horizon, self.precision.name)
        return self.config.form.build(self.config.required_horizon, self.precision)

    @property
    def measure(self) -> MomentFunctional:
        return self._parametrizations[0]

    @property
    def params(self) -> GeronimusParams:
        return self._parametrizations[1]

    @property
    def masses(self) -> SobolevMass:
        return self._parametrizations[2]

    @cached_property
    def form(self) -> GeronimusForm:
        return GeronimusForm(self.measure, self.params)

    @cached_property
    def sobolev_form(self) -> SobolevForm:
        return SobolevForm(self.measure, self.masses)

    @cached_property
    def measure_form(self) -> MeasureForm:
        return MeasureForm(self.measure)

    @cached_property
    def mu0_form(self) -> MeasureForm:
        return MeasureForm(pushforward_moments(self.measure, self.nodes))

    @cached_property
    def base(self) -> MonicOPS:
        return monic_ops_from_form(self.mu0_form, self.M + self.N - 1)

    @cached_property
    def r_ops(self) -> MonicOPS:
        return monic_ops_from_form(self.measure_form, self.n_max + self.N)

    @cached_property
    def connection(self) -> ConnectionCoeffs:
        return connection_coefficients(self.base, self.form, self.M - 1)

    @cached_property
    def pstar(self) -> MonicOPS:
        return pstar_sequence(self.base, self.form, self.M - 1, self.connection)

    @cached_property
    def definiteness(self) -> DefinitenessReport:
        return definiteness(self.base, self.form, self.n_max)

    @cached_property
    def base_jacobi(self) -> JacobiMatrix:
        return jacobi(self.base)

    @cached_property
    def window(self) -> TruncationWindow:
        return TruncationWindow(self.M, self.N)

    @cached_property
    def L_mon(self) -> BandMatrix:
        return build_Lmon(self.connection, self.M)

    @cached_property
    def U_mon(self) -> BandMatrix:
        return build_Umon(self.base, self.pstar, self.form, self.M)

    @cached_property
    def J_star(self) -> BandMatrix:
        return jstar_band(self.pstar, self.form, self.M)

    @cached_property
    def h_of_J(self) -> BandMatrix:
        return h_of_jacobi(self.base_jacobi, self.nodes, self.M)

    def cholesky_factor(self) -> Optional[BandMatrix]:
        """C of ``J* = C C^T``, or ``None`` when ``mu_0`` or the form is not positive."""
        try:
            return cholesky_C(self.connection, self.base.norms2, self.pstar.norms2, self.M)
        except OPAlchemyPositivityError as exc:
            logger.debug("No Cholesky factor: %s", exc.message.strip())
            return None

    def ratios_monotone(self) -> bool:
        """Whether ``|d*_{n+1} / d*_n|`` is nondecreasing for ``N <= n <= n_max``."""
        ratios = [abs(v.ratio) for v in self.definiteness.degrees if v.n >= self.N and v.ratio is not None]
        return all(b >= a for a, b in zip(ratios, ratios[1:]))

    def sobolev_diagnostics(self) -> Dict[str, Any]:
        n = self.n_max
        sobolev = self.sobolev_form.gram(n)
        geronimus = self.form.gram(n)
        scale = max(1.0, max_abs(sobolev))
        return {
            "size": n + 1,
            "positive_definite": gram_is_positive_definite(self.sobolev_form, n),
            "condition_estimate": self.precision.condition_estimate(sobolev),
            "geronimus_discrepancy": max_abs(sobolev - geronimus) / scale,
            "lambda": self.precision.to_float(self.masses.matrix).tolist(),
            "shat": self.precision.to_float(self.params.shat).tolist(),
            "S": self.precision.to_float(self.form.S).tolist(),
        }

    def header(self, command: str) -> Dict[str, Any]:
        return {
            "schema": REPORT_SCHEMA,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "command": command,
            "config": self.config.to_dict(),
            "precision": self.precision.name,
            "N": self.N,
            "n_max": self.n_max,
            "M": self.M,
        }

    def transform_report(self) -> Dict[str, Any]:
        """P*, connection rows, norms and definiteness up to ``n_max``.

        Raises:
            OPAlchemyQuasiDefinitenessError: Some ``d*_n`` vanishes; the error carries n.
        """
        n_max = self.n_max
        pstar = self.pstar.truncated(n_max)
        verdicts = {v.n: v for v in self.definiteness.degrees}
        report = self.header("transform")
        report.update(
            {
                "pstar": [p.to_floats() for p in pstar],
                "connection": {
                    "rows": [[float(a) for a in row] for row in self.connection.rows[: n_max + 1]],
                    "dstar": [float(d) for d in self.connection.dstar[: n_max + 1]],
                },
                "norms": {
                    "base": [float(x) for x in self.base.norms2[: n_max + 1]],
                    "pstar": [float(x) for x in pstar.norms2],
                    "r": [float(x) for x in self.r_ops.norms2[: n_max + 1]],
                },
                "orthogonality": {
                    "pstar": pstar.orthogonality_defect(),
                    "base": self.base.truncated(n_max).orthogonality_defect(),
                    "r": self.r_ops.truncated(n_max).orthogonality_defect(),
                },
                "definiteness": self.definiteness.to_dict(),
                "ratios_monotone": self.ratios_monotone(),
                "sobolev": self.sobolev_diagnostics(),
            }
        )
        report["tables"] = {
            "pstar_coefficients": table(
                ["n"] + [f"c{k}" for k in range(n_max + 1)],
                [[n] + p.to_floats() + [0.0] * (n_max - n) for n, p in enumerate(pstar)],
            ),
            "connection": table(
                ["n", "dstar"] + [f"A_n-{k}" for k in range(1, self.N + 1)],
                [
                    [n, float(self.connection.dstar[n])]
                    + [float(a) for a in self.connection.rows[n]]
                    + [None] * (self.N - len(self.connection.rows[n]))
                    for n in range(n_max + 1)
                ],
            ),
            "norms": table(
                ["n", "h2", "hstar2", "ratio", "regime", "passed"],
                [
                    [
                        n,
                        float(self.base.norms2[n]),
                        float(pstar.norms2[n]),
                        verdicts[n].ratio,
                        verdicts[n].regime,
                        verdicts[n].passed,
                    ]
                    for n in range(n_max + 1)
                ],
            ),
        }
        logger.info("transform: %s up to degree %d", self.definiteness.classification.value, n_max)
        return report

    def residuals(self) -> Dict[str, Optional[ResidualReport]]:
        reports: Dict[str, Optional[ResidualReport]] = {
            "UL": verify_UL(self.base_jacobi, self.nodes, self.L_mon, self.U_mon, self.window),
            "LU": verify_LU(self.J_star, self.L_mon, self.U_mon, self.window),
            "cholesky": None,
            "cholesky_oracle": None,
        }
        C = self.cholesky_factor()
        if C is not None:
            Jorth = jstar_orthonormal(self.pstar, self.form, self.M)
            reports["cholesky"] = verify_cholesky(Jorth, C, self.window)
            reports["cholesky_oracle"] = cholesky_oracle(Jorth, C, self.window)
        return reports

    def block_structure(self) -> Dict[str, BlockStructureReport]:
        return {
            "h_of_J": block_partition(self.h_of_J, self.N)[1],
            "J_star": block_partition(self.J_star, self.N)[1],
        }

    def factorize_report(self) -> Dict[str, Any]:
        """The band matrices of ``h(J_mon) = U L`` and ``J* = L U`` with their residuals."""
        residuals = self.residuals()
        report = self.header("factorize")
        report.update(
            {
                "window": self.window.to_dict(),
                "L_mon": self.L_mon.to_dict(),
                "U_mon": self.U_mon.to_dict(),
                "J_star_mon": self.J_star.to_dict(),
                "h_of_J": self.h_of_J.to_dict(),
                "residuals": {name: r.to_dict() if r is not None else None for name, r in residuals.items()},
                "band_defect": jstar_band_defect(self.pstar, self.form, self.M),
                "block_structure": {name: r.to_dict() for name, r in self.block_structure().items()},
                "ratios_monotone": self.ratios_monotone(),
            }
        )
        report["tables"] = {
            "residuals": table(
                ["name", "absolute", "relative", "M_valid"],
                [
                    [name, r.absolute, r.relative, r.window.M_valid]
                    for name, r in residuals.items()
                    if r is not None
                ],
            ),
            "L_mon": _band_table(self.L_mon),
            "U_mon": _band_table(self.U_mon),
            "J_star_mon": _band_table(self.J_star),
        }
        logger.info("factorize: M=%d, valid block %d", self.M, self.window.M_valid)
        return report


def _band_table(band: BandMatrix) -> Dict[str, Any]:
    offsets = list(range(-band.lower, band.upper + 1))
    rows = []
    for i in range(band.M):
        row: List[Any] = [i]
        for offset in offsets:
            j = i + offset
            row.append(float(band[i, j]) if 0 <= j < band.M else None)
        rows.append(row)
    return table(["row"] + [f"diag{offset:+d}" for offset in offsets], rows)

