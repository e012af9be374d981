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

import numpy as np

from opalchemy.forms import (
    GeronimusForm,
    LaguerreMoments,
    MeasureForm,
    SobolevMass,
    lambda_to_shat,
    pushforward_moments,
)
from opalchemy.orthopoly import MonicOPS, monic_ops_from_form
from opalchemy.poly import FactoredNodes, Polynomial
from opalchemy.precision import Precision


def coefficient_gap(p: Polynomial, q: Polynomial) -> float:
    return (p - q).max_abs_coefficient() / max(1.0, p.max_abs_coefficient(), q.max_abs_coefficient())


def floats(values) -> np.ndarray:
    return np.array(values, dtype=float)


def random_positive_setup(rng: np.random.Generator, precision: Precision, N_max: int = 3):
    """Laguerre measure, h with roots in [-2, 0] and a positive definite Lambda.

    h is nonnegative on the support, so ``h mu`` is positive and the Sobolev form is positive definite.
    """
    alpha = float(rng.uniform(-0.5, 2.0))
    N = int(rng.integers(1, N_max + 1))
    multiplicities = []
    while sum(multiplicities) < N:
        multiplicities.append(int(rng.integers(1, N - sum(multiplicities) + 1)))
    roots = -np.sort(rng.choice(np.arange(0, 9), size=len(multiplicities), replace=False)) / 4
    h = FactoredNodes(tuple((float(root), m) for root, m in zip(roots, multiplicities)))
    b = rng.normal(size=(N, N))
    lam = b @ b.T + 0.1 * np.eye(N)
    return alpha, h, (lam + lam.T) / 2


def geronimus_setup(alpha: float, h: FactoredNodes, lam, precision: Precision, degree: int, horizon: int = 80):
    """The Geronimus form of Lambda and the base sequence of ``h mu`` up to ``degree``."""
    mu = LaguerreMoments(alpha, horizon, precision)
    masses = SobolevMass.from_matrix(h, lam, precision)
    form = GeronimusForm(mu, lambda_to_shat(mu, h, masses))
    base: MonicOPS = monic_ops_from_form(MeasureForm(pushforward_moments(mu, h)), degree)
    return mu, masses, form, base
