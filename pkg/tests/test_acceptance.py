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

import itertools

import numpy as np
import pytest

from opalchemy.forms import LaguerreMoments, MeasureForm, SobolevForm, SobolevMass, lambda_to_shat, shat_to_lambda
from opalchemy.geronimus import (
    connection_coefficients,
    definiteness,
    gram_is_positive_definite,
    pstar_determinant,
    pstar_from_existence,
    pstar_sequence,
)
from opalchemy.orthopoly import monic_ops_from_form
from opalchemy.poly import FactoredNodes
from opalchemy.presets import PRESETS
from opalchemy.verification import run_checks
from tests.common import coefficient_gap, floats, geronimus_setup, random_positive_setup

pytestmark = pytest.mark.slow

LAMBDA_0 = (-0.3, -0.07, 0.5, 1.0, 4.0)
LAMBDA_1 = (-0.2, -0.03, 0.5, 2.0, 10.0)


@pytest.mark.parametrize("seed", range(25))
def test_random_configurations_agree_on_every_path(seed, hp):
    alpha, h, lam = random_positive_setup(np.random.default_rng(1000 + seed), hp)
    mu, masses, form, base = geronimus_setup(alpha, h, lam, hp, 10)
    R_ops = monic_ops_from_form(MeasureForm(mu), 10)
    oracle = monic_ops_from_form(SobolevForm(mu, masses), 10)
    sequence = pstar_sequence(base, form, 10, connection_coefficients(base, form, 10))
    for n in range(11):
        assert coefficient_gap(sequence[n], oracle[n]) <= 1e-30
        assert coefficient_gap(pstar_determinant(base, form, n), oracle[n]) <= 1e-30
        assert coefficient_gap(pstar_from_existence(R_ops, masses, n), oracle[n]) <= 1e-30


@pytest.mark.parametrize("seed", range(10))
def test_random_mass_matrices_give_the_same_form(seed, hp):
    rng = np.random.default_rng(2000 + seed)
    alpha, h, _ = random_positive_setup(rng, hp)
    lam = rng.normal(size=(h.N, h.N))
    lam = (lam + lam.T) / 2
    mu = LaguerreMoments(alpha, 60, hp)
    masses = SobolevMass.from_matrix(h, lam, hp)
    params = lambda_to_shat(mu, h, masses)
    sobolev = floats(SobolevForm(mu, masses).gram(14))
    geronimus = floats(SobolevForm(mu, masses).to_geronimus().gram(14))
    assert np.max(np.abs(sobolev - geronimus)) <= 1e-30 * np.max(np.abs(sobolev))
    assert np.max(np.abs(floats(shat_to_lambda(mu, params).matrix) - floats(masses.matrix))) <= 1e-30


@pytest.mark.parametrize("lam0, lam1", list(itertools.product(LAMBDA_0, LAMBDA_1)))
def test_sign_pattern_grid(lam0, lam1, hp):
    h = FactoredNodes(((0.0, 2),))
    _, _, form, base = geronimus_setup(0.0, h, np.diag([lam0, lam1]), hp, 17)
    report = definiteness(base, form, 15)
    assert report.sign_pattern_positive == gram_is_positive_definite(form, 15)
    assert report.max_identity_discrepancy() <= 1e-7


@pytest.mark.parametrize("name", list(PRESETS))
def test_presets_pass_every_check(name, preset_pipeline):
    failed = [result for result in run_checks(preset_pipeline(name)) if not result.passed]
    assert failed == []


@pytest.mark.parametrize("name", list(PRESETS))
def test_recurrence_matrix_is_stable_under_truncation(name, preset_pipeline):
    small = preset_pipeline(name)
    large = preset_pipeline(name, truncation=small.M + 8)
    M = small.M
    gap = floats(small.J_star.to_dense() - large.J_star.to_dense()[:M, :M])
    assert np.max(np.abs(gap)) <= 1e-12 * max(1.0, np.max(np.abs(floats(small.J_star.to_dense()))))
