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
import scipy.special

from opalchemy.exceptions import (
    OPAlchemyNonHankelFormError,
    OPAlchemyPositivityError,
    OPAlchemyQuasiDefinitenessError,
    OPAlchemyValidationError,
)
from opalchemy.forms import ExplicitMoments, LaguerreMoments, MeasureForm, SobolevForm, SobolevMass
from opalchemy.orthopoly import (
    JacobiMatrix,
    christoffel_darboux,
    gs_oracle,
    jacobi,
    kernel,
    kernel_deriv,
    kernel_jet_matrix,
    kernel_polynomial,
    monic_ops_from_form,
    reconstruction_residual,
)
from opalchemy.poly import FactoredNodes, Polynomial
from opalchemy.precision import FLOAT64
from tests.common import coefficient_gap, floats


@pytest.fixture(scope="module")
def laguerre_half_ops(hp):
    return monic_ops_from_form(MeasureForm(LaguerreMoments(0.5, 40, hp)), 10)


def test_low_degree_laguerre_polynomials(laguerre0_f64):
    ops = monic_ops_from_form(MeasureForm(laguerre0_f64), 4)
    assert ops[1].to_floats() == pytest.approx([-1.0, 1.0])
    assert ops[2].to_floats() == pytest.approx([2.0, -4.0, 1.0])
    assert floats(ops.norms2).tolist() == pytest.approx([math.factorial(k) ** 2 for k in range(5)])
    assert ops.is_positive
    assert ops.orthogonality_defect() <= 1e-10


@pytest.mark.parametrize("alpha", [0.0, 0.5, 2.0])
def test_laguerre_recurrence_coefficients(alpha, hp):
    ops = monic_ops_from_form(MeasureForm(LaguerreMoments(alpha, 40, hp)), 12)
    matrix = jacobi(ops)
    assert matrix.M == 13
    for n in range(13):
        assert float(matrix.diag[n]) == pytest.approx(2 * n + alpha + 1, rel=1e-30)
    for n in range(1, 13):
        assert float(matrix.subdiag[n - 1]) == pytest.approx(n * (n + alpha), rel=1e-30)
    assert reconstruction_residual(ops, matrix) <= 1e-50


def test_jacobi_eigenvalues_are_gauss_nodes(laguerre0_f64):
    ops = monic_ops_from_form(MeasureForm(laguerre0_f64), 5)
    matrix = jacobi(ops).truncated(5)
    eigenvalues = np.linalg.eigvalsh(floats(matrix.orthonormal()))
    nodes, _ = scipy.special.roots_genlaguerre(5, 0.0)
    assert np.allclose(np.sort(eigenvalues), np.sort(nodes), rtol=1e-9)


def test_monic_jacobi_matrix_layout(laguerre0_f64):
    monic = floats(jacobi(monic_ops_from_form(MeasureForm(laguerre0_f64), 2)).monic())
    np.testing.assert_allclose(monic, [[1.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 4.0, 5.0]], rtol=1e-12, atol=1e-12)


def test_jacobi_matrix_shape_validation():
    with pytest.raises(OPAlchemyValidationError):
        JacobiMatrix(np.ones(3), np.ones(3))
    with pytest.raises(OPAlchemyValidationError):
        JacobiMatrix(np.ones(3), np.ones(2)).truncated(4)


def test_ldl_matches_gram_schmidt(laguerre_half_ops):
    oracle = gs_oracle(laguerre_half_ops.form, 10)
    for p, q in zip(laguerre_half_ops, oracle):
        assert coefficient_gap(p, q) <= 1e-25
    assert np.max(np.abs(floats(laguerre_half_ops.norms2 - oracle.norms2) / floats(oracle.norms2))) <= 1e-25


def test_degenerate_moments_are_not_quasi_definite():
    form = MeasureForm(ExplicitMoments([1, 0, 0], FLOAT64))
    with pytest.raises(OPAlchemyQuasiDefinitenessError) as error:
        monic_ops_from_form(form, 1)
    assert error.value.degree == 1
    with pytest.raises(OPAlchemyQuasiDefinitenessError):
        gs_oracle(form, 1)


def test_indefinite_sequence_has_no_norms():
    ops = monic_ops_from_form(MeasureForm(ExplicitMoments([1, 0, -1], FLOAT64)), 1)
    assert floats(ops.norms2).tolist() == [1.0, -1.0]
    assert not ops.is_positive
    with pytest.raises(OPAlchemyPositivityError) as error:
        ops.norms()
    assert error.value.degree == 1


def test_recurrence_needs_a_hankel_form(laguerre0_f64):
    masses = SobolevMass.from_matrix(FactoredNodes(((0.0, 1),)), [[1.0]], FLOAT64)
    ops = monic_ops_from_form(SobolevForm(laguerre0_f64, masses), 3)
    with pytest.raises(OPAlchemyNonHankelFormError):
        jacobi(ops)


@pytest.mark.parametrize("y", [0.0, 0.7, 3.0])
def test_kernel_reproduces_polynomials(y, laguerre_half_ops):
    n = 8
    f = Polynomial([1.0, -2.0, 0.0, 0.5, 0.0, 0.0, 0.1], precision=laguerre_half_ops.precision)
    reproduced = laguerre_half_ops.form.inner(kernel_polynomial(laguerre_half_ops, n, y), f)
    assert float(reproduced) == pytest.approx(float(f(y)), rel=1e-25, abs=1e-25)
    derivative = laguerre_half_ops.form.inner(kernel_polynomial(laguerre_half_ops, n, y, j=1), f)
    assert float(derivative) == pytest.approx(float(f.derivative()(y)), rel=1e-25, abs=1e-25)


@pytest.mark.parametrize("n, x, y", [(3, 0.3, 1.7), (6, 0.5, 2.0), (9, 4.0, 0.1)])
def test_christoffel_darboux(n, x, y, laguerre_half_ops):
    direct = kernel(laguerre_half_ops, n, x, y)
    assert float(christoffel_darboux(laguerre_half_ops, n, x, y)) == pytest.approx(float(direct), rel=1e-25)


def test_christoffel_darboux_needs_distinct_points(laguerre_half_ops):
    with pytest.raises(OPAlchemyValidationError):
        christoffel_darboux(laguerre_half_ops, 3, 1.0, 1.0)


def test_kernel_degree_out_of_range(laguerre_half_ops):
    with pytest.raises(OPAlchemyValidationError):
        kernel(laguerre_half_ops, 11, 0.0, 0.0)


@pytest.mark.parametrize("i, j", [(1, 0), (0, 1), (1, 1), (2, 0)])
def test_kernel_derivatives_match_finite_differences(i, j, laguerre_half_ops):
    precision = laguerre_half_ops.precision
    step = precision.scalar(1e-12)
    x, y = precision.scalar(0.3), precision.scalar(1.7)

    def lower(a, b):
        return kernel_deriv(laguerre_half_ops, 6, i - 1 if i else 0, j - 1 if not i else j, a, b)

    if i:
        estimate = (lower(x + step, y) - lower(x - step, y)) / (2 * step)
    else:
        estimate = (lower(x, y + step) - lower(x, y - step)) / (2 * step)
    exact = kernel_deriv(laguerre_half_ops, 6, i, j, x, y)
    assert float(estimate) == pytest.approx(float(exact), rel=1e-15)


def test_kernel_jet_matrix(laguerre_half_ops):
    nodes = FactoredNodes(((0.0, 2), (1.5, 1)))
    matrix = kernel_jet_matrix(laguerre_half_ops, 7, nodes)
    positions = nodes.jet_index()
    for a, (l, i) in enumerate(positions):
        for b, (w, j) in enumerate(positions):
            expected = kernel_deriv(laguerre_half_ops, 7, i, j, nodes.roots[l], nodes.roots[w])
            assert float(matrix[a, b]) == pytest.approx(float(expected), rel=1e-25, abs=1e-30)
