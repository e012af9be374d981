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
import pytest

from opalchemy.exceptions import (
    OPAlchemyConditioningWarning,
    OPAlchemyPositivityError,
    OPAlchemyPrecisionError,
    OPAlchemySingularSystemError,
)
from opalchemy.precision import FLOAT64, MultiPrecision, infer_precision, max_abs, parse_precision


@pytest.mark.parametrize("name, bits", [("f64", 53), ("hp128", 128), ("HP256", 256), (" hp64 ", 64)])
def test_parse_precision(name, bits):
    assert parse_precision(name).bits == bits


def test_parse_precision_is_cached():
    assert parse_precision("f64") is FLOAT64
    assert parse_precision("hp192") is parse_precision("hp192")


@pytest.mark.parametrize("name", ["quad", "hp", "hp40", "f32"])
def test_parse_precision_rejects_unknown_names(name):
    with pytest.raises(OPAlchemyPrecisionError):
        parse_precision(name)


def test_multi_precision_arrays_hold_context_numbers(hp):
    values = hp.array([1, 2.5, 3])
    assert values.dtype == object
    assert values[1].context.prec == 256
    assert infer_precision(values) is hp
    assert infer_precision(np.array([1.0, 2.0])) is FLOAT64


def test_scaled_tolerance_shrinks_with_precision(hp):
    assert FLOAT64.scaled_tolerance(1e-10) == 1e-10
    assert hp.scaled_tolerance(1e-10) < 1e-40


@pytest.mark.parametrize("precision_name", ["f64", "hp128"])
def test_solve(precision_name):
    precision = parse_precision(precision_name)
    a = precision.array([[4.0, 1.0], [1.0, 3.0]])
    b = precision.array([1.0, 2.0])
    x = precision.solve(a, b)
    assert max_abs(a @ x - b) < 1e-14


@pytest.mark.parametrize("precision_name", ["f64", "hp128"])
def test_singular_solve_raises(precision_name):
    precision = parse_precision(precision_name)
    with pytest.raises(OPAlchemySingularSystemError):
        precision.solve(precision.array([[1.0, 2.0], [2.0, 4.0]]), precision.array([1.0, 1.0]))


def test_cholesky(hp128):
    factor = hp128.cholesky(hp128.array([[4.0, 2.0], [2.0, 3.0]]))
    assert float(factor[0, 0]) == pytest.approx(2.0)
    assert float(factor[1, 0]) == pytest.approx(1.0)
    assert float(factor[1, 1]) == pytest.approx(np.sqrt(2.0))
    assert float(factor[0, 1]) == 0.0


@pytest.mark.parametrize("precision_name", ["f64", "hp128"])
def test_cholesky_of_indefinite_matrix_raises(precision_name):
    precision = parse_precision(precision_name)
    with pytest.raises(OPAlchemyPositivityError):
        precision.cholesky(precision.array([[1.0, 2.0], [2.0, 1.0]]))


def test_sqrt_of_negative_raises(hp128):
    with pytest.raises(OPAlchemyPositivityError):
        hp128.sqrt(-1)
    with pytest.raises(OPAlchemyPositivityError):
        FLOAT64.sqrt(-1.0)


def test_gamma():
    assert FLOAT64.gamma(5) == pytest.approx(24.0)
    assert float(MultiPrecision(100).gamma(0.5) ** 2) == pytest.approx(np.pi)


def test_ill_conditioned_matrix_warns():
    with pytest.warns(OPAlchemyConditioningWarning):
        estimate = FLOAT64.warn_if_ill_conditioned(np.diag([1.0, 1e-14]), "test matrix")
    assert estimate > 1e12


def test_determinant_of_empty_matrix_is_one(hp128):
    assert FLOAT64.det(np.zeros((0, 0))) == 1.0
    assert hp128.det(hp128.zeros((0, 0))) == 1
