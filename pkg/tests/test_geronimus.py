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

import math

import numpy as np
import pytest

from opalchemy.exceptions import OPAlchemyQuasiDefinitenessError, OPAlchemyValidationError
from opalchemy.forms import MeasureForm, SobolevForm, pushforward_moments
from opalchemy.geronimus import (
    Definiteness,
    connect_to_R,
    connection_coefficients,
    connection_to_r_closed_form,
    definiteness,
    dstar,
    existence_system,
    gram_is_positive_definite,
    pstar_determinant,
    pstar_from_existence,
    pstar_mu0_gram,
    pstar_sequence,
    small_degree_norm,
)
from opalchemy.orthopoly import monic_ops_from_form
from opalchemy.poly import FactoredNodes, jet
from tests.common import coefficient_gap, floats, geronimus_setup, random_positive_setup

T1 = FactoredNodes(((0.0, 1),))
T2 = FactoredNodes(((0.0, 2),))


def laguerre_krall(lam: float, precision, degree: int = 12):
    return geronimus_setup(0.0, T1, [[lam]], precision, degree)


def krall_dstar(n: int, lam: float) -> float:
    return (-1) ** (n - 1) * math.factorial(n - 1) * (1 + lam * n)


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
def test_laguerre_krall_determinants(lam, hp):
    _, _, form, base = laguerre_krall(lam, hp)
    assert float(dstar(base, form, 0)) == 1.0
    for n in range(1, 12):
        assert float(dstar(base, form, n)) == pytest.approx(krall_dstar(n, lam), rel=1e-14)


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
def test_laguerre_krall_ratios(lam, hp):
    _, _, form, base = laguerre_krall(lam, hp)
    report = definiteness(base, form, 10)
    assert report.degrees[0].ratio == pytest.approx(1 + lam)
    for verdict in report.degrees[1:]:
        n = verdict.n
        assert verdict.ratio == pytest.approx(-n * (1 + lam * (n + 1)) / (1 + lam * n), rel=1e-12)
        assert verdict.regime == "n>=N"
        assert verdict.passed
    assert report.classification is Definiteness.POSITIVE
    assert report.sign_pattern_positive
    assert report.first_degenerate is None
    assert report.max_identity_discrepancy() <= 1e-7


def test_laguerre_krall_first_polynomial(hp):
    _, _, form, base = laguerre_krall(1.0, hp)
    assert float(form.params.shat[0, 0]) == pytest.approx(2.0)
    sequence = pstar_sequence(base, form, 4)
    assert sequence[1].to_floats() == pytest.approx([-0.5, 1.0])
    assert float(sequence.norms2[1]) == pytest.approx(1.5)


def test_no_masses_gives_the_orthogonal_sequence_of_mu(hp):
    mu, _, form, base = laguerre_krall(0.0, hp)
    expected = monic_ops_from_form(MeasureForm(mu), 8)
    sequence = pstar_sequence(base, form, 8)
    for p, q in zip(sequence, expected):
        assert coefficient_gap(p, q) <= 1e-40


class TestDegenerateMass:
    lam = -0.25

    def test_determinant_vanishes_at_degree_four(self, hp):
        _, _, form, base = laguerre_krall(self.lam, hp, degree=8)
        assert abs(float(dstar(base, form, 4))) <= 1e-60
        report = definiteness(base, form, 6)
        assert report.first_degenerate == 4
        assert report.classification is Definiteness.DEGENERATE
        assert report.degrees[4].ratio is None
        assert report.degrees[3].passed is None

    def test_connection_reports_the_degree(self, hp):
        _, _, form, base = laguerre_krall(self.lam, hp, degree=8)
        with pytest.raises(OPAlchemyQuasiDefinitenessError) as error:
            connection_coefficients(base, form, 6)
        assert error.value.degree == 4
        with pytest.raises(OPAlchemyQuasiDefinitenessError):
            pstar_determinant(base, form, 4)

    def test_jet_system_is_singular(self, hp):
        mu, masses, _, _ = laguerre_krall(self.lam, hp, degree=8)
        R_ops = monic_ops_from_form(MeasureForm(mu), 6)
        for n in range(6):
            result = existence_system(R_ops, masses, n)
            assert float(result.matrix[0, 0]) == pytest.approx(1 + self.lam * n, abs=1e-40)
            assert result.solvable == (n != 4)
        with pytest.raises(OPAlchemyQuasiDefinitenessError):
            pstar_from_existence(R_ops, masses, 4)


def test_negative_mass_is_indefinite(hp):
    _, _, form, base = laguerre_krall(-0.3, hp, degree=8)
    report = definiteness(base, form, 6)
    assert report.classification is Definiteness.INDEFINITE
    assert [v.passed for v in report.degrees[:3]] == [True, True, True]
    assert report.degrees[3].passed is False
    assert not gram_is_positive_definite(form, 6)
    for verdict in report.degrees:
        assert (verdict.norm2 > 0) == verdict.passed


@pytest.mark.parametrize("seed", range(6))
def test_three_constructions_agree(seed, hp):
    alpha, h, lam = random_positive_setup(np.random.default_rng(seed), hp)
    mu, masses, form, base = geronimus_setup(alpha, h, lam, hp, 10)
    R_ops = monic_ops_from_form(MeasureForm(mu), 10)
    oracle = monic_ops_from_form(SobolevForm(mu, masses), 10)
    conn = connection_coefficients(base, form, 10)
    sequence = pstar_sequence(base, form, 10, conn)
    for n in range(11):
        assert coefficient_gap(sequence[n], oracle[n]) <= 1e-30
        assert coefficient_gap(pstar_determinant(base, form, n), oracle[n]) <= 1e-30
        assert coefficient_gap(pstar_from_existence(R_ops, masses, n), oracle[n]) <= 1e-30
    assert sequence.orthogonality_defect() <= 1e-30
    assert np.max(np.abs(floats(sequence.norms2 - oracle.norms2) / floats(oracle.norms2))) <= 1e-30


@pytest.mark.parametrize("seed", range(4))
def test_existence_jets_are_jets_of_pstar(seed, hp):
    alpha, h, lam = random_positive_setup(np.random.default_rng(100 + seed), hp)
    mu, masses, form, base = geronimus_setup(alpha, h, lam, hp, 8)
    R_ops = monic_ops_from_form(MeasureForm(mu), 8)
    sequence = pstar_sequence(base, form, 8)
    for n in range(9):
        result = existence_system(R_ops, masses, n)
        assert result.solvable
        gap = floats(result.jets - jet(sequence[n], h, hp))
        assert np.max(np.abs(gap)) <= 1e-30 * max(1.0, np.max(np.abs(floats(result.jets))))


def test_small_degree_norms(hp):
    h = FactoredNodes(((-1.0, 1), (0.0, 2)))
    _, _, form, base = geronimus_setup(0.5, h, np.diag([1.0, 2.0, 0.5]), hp, 6)
    conn = connection_coefficients(base, form, 6)
    sequence = pstar_sequence(base, form, 6, conn)
    for m in range(3):
        assert float(small_degree_norm(base, form, conn, m)) == pytest.approx(float(sequence.norms2[m]), rel=1e-30)
    with pytest.raises(OPAlchemyValidationError):
        small_degree_norm(base, form, conn, 3)


def test_pushforward_gram_of_pstar(hp):
    mu, _, form, base = geronimus_setup(1.0, T2, np.diag([0.5, 2.0]), hp, 8)
    conn = connection_coefficients(base, form, 8)
    sequence = pstar_sequence(base, form, 8, conn)
    expected = MeasureForm(pushforward_moments(mu, T2)).inner_matrix(sequence.polys, sequence.polys)
    computed = pstar_mu0_gram(base, conn, 9)
    assert np.max(np.abs(floats(computed - expected))) <= 1e-40 * np.max(np.abs(floats(expected)))


@pytest.mark.parametrize("seed", range(4))
def test_connection_to_mu_sequence_is_banded(seed, hp):
    alpha, h, lam = random_positive_setup(np.random.default_rng(200 + seed), hp)
    mu, _, form, base = geronimus_setup(alpha, h, lam, hp, 12)
    R_ops = monic_ops_from_form(MeasureForm(mu), 12)
    conn = connection_coefficients(base, form, 12)
    sequence = pstar_sequence(base, form, 12, conn)
    for n in range(12 - h.N + 1):
        connection = connect_to_R(R_ops, sequence, h, n)
        assert connection.leading == pytest.approx(1.0, rel=1e-30)
        assert connection.below_band <= 1e-30
        assert connection.orthogonality_defect <= 1e-30
        if n >= h.N:
            assert connection.pivot != 0
        closed = connection_to_r_closed_form(base, R_ops, conn, h, n)
        gap = floats(closed - connection.coefficients)
        assert np.max(np.abs(gap)) <= 1e-30 * max(1.0, np.max(np.abs(floats(closed))))


def test_connection_to_mu_sequence_needs_enough_degrees(hp):
    mu, _, form, base = laguerre_krall(1.0, hp, degree=6)
    R_ops = monic_ops_from_form(MeasureForm(mu), 6)
    sequence = pstar_sequence(base, form, 6)
    with pytest.raises(OPAlchemyValidationError):
        connect_to_R(R_ops, sequence, T1, 6)
    with pytest.raises(OPAlchemyValidationError):
        connect_to_R(sequence, sequence, T1, 1)


@pytest.mark.parametrize("lam0, lam1", [(1.0, 2.0), (-0.3, 0.5), (0.5, -0.2), (4.0, 10.0)])
def test_sign_pattern_decides_positivity(lam0, lam1, hp):
    _, _, form, base = geronimus_setup(0.0, T2, np.diag([lam0, lam1]), hp, 17)
    report = definiteness(base, form, 15)
    assert report.base_positive
    assert report.sign_pattern_positive == gram_is_positive_definite(form, 15)
    assert report.max_identity_discrepancy() <= 1e-7
