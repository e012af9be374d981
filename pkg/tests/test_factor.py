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

from opalchemy.exceptions import OPAlchemyConditioningWarning, OPAlchemyValidationError
from opalchemy.factor import (
    BandMatrix,
    TruncationWindow,
    build_Umon,
    h_of_jacobi,
    jstar_band_defect,
    jstar_orthonormal,
    jstar_subdiagonal_defect,
    residual,
    umon_expansion_residual,
)
from opalchemy.pipeline import GeronimusPipeline
from opalchemy.presets import get_preset
from tests.common import coefficient_gap, floats

PRESETS = ["laguerre-krall", "laguerre-krall-0.1", "laguerre-krall-10", "trivial", "laguerre-N2", "simple-roots"]


@pytest.fixture
def tridiagonal():
    return np.array([[2.0, 1.0, 0.0, 0.0], [3.0, 2.0, 1.0, 0.0], [0.0, 3.0, 2.0, 1.0], [0.0, 0.0, 3.0, 2.0]])


def test_band_storage(tridiagonal):
    band = BandMatrix.from_dense(tridiagonal, 1, 1)
    assert band.data.shape == (3, 4)
    assert band[1, 0] == 3.0
    assert band[0, 3] == 0
    assert band.diagonal(-1).tolist() == [3.0, 3.0, 3.0]
    assert band.diagonal(1).tolist() == [1.0, 1.0, 1.0]
    assert band.diagonal(2).tolist() == [0.0, 0.0]
    assert np.array_equal(band.to_dense(), tridiagonal)
    assert np.array_equal(band.crop(2).to_dense(), tridiagonal[:2, :2])
    with pytest.raises(IndexError):
        band[4, 0]


def test_band_product(tridiagonal):
    band = BandMatrix.from_dense(tridiagonal, 1, 1)
    product = band @ band
    assert (product.lower, product.upper) == (2, 2)
    assert np.array_equal(product.to_dense(), tridiagonal @ tridiagonal)


def test_band_storage_shape_is_checked():
    with pytest.raises(OPAlchemyValidationError):
        BandMatrix(4, 1, 1, np.zeros((2, 4)))
    with pytest.raises(OPAlchemyValidationError):
        BandMatrix.from_dense(np.eye(3), 0, 0).crop(4)


def test_outside_band_max(tridiagonal):
    assert BandMatrix.outside_band_max(tridiagonal, 1, 1) == 0.0
    assert BandMatrix.outside_band_max(tridiagonal, 0, 1) == 3.0


@pytest.mark.parametrize("M, N, products, valid", [(22, 1, 1, 21), (24, 2, 1, 22), (24, 2, 2, 20), (3, 2, 2, 0)])
def test_truncation_window(M, N, products, valid):
    assert TruncationWindow(M, N, products).M_valid == valid


def test_residual_is_measured_on_the_window(tridiagonal):
    other = tridiagonal.copy()
    other[3, 3] = 100.0
    report = residual("test", tridiagonal, other, TruncationWindow(4, 1))
    assert report.absolute == 0.0
    assert report.within(0.0)
    assert residual("test", tridiagonal, other, TruncationWindow(5, 1)).absolute == 98.0


@pytest.mark.parametrize("name", PRESETS)
def test_ul_and_lu_factorizations(name, preset_pipeline):
    pipeline = preset_pipeline(name)
    residuals = pipeline.residuals()
    assert residuals["UL"].window.M_valid == pipeline.M - pipeline.N
    assert residuals["UL"].relative <= 1e-30
    assert residuals["LU"].relative <= 1e-30


@pytest.mark.parametrize("name", PRESETS)
def test_factor_shapes(name, preset_pipeline):
    pipeline = preset_pipeline(name)
    L, U, J = pipeline.L_mon, pipeline.U_mon, pipeline.J_star
    assert (L.lower, L.upper) == (pipeline.N, 0)
    assert (U.lower, U.upper) == (0, pipeline.N)
    assert (J.lower, J.upper) == (pipeline.N, pipeline.N)
    assert floats(L.diagonal(0)).tolist() == [1.0] * pipeline.M
    assert np.allclose(floats(U.diagonal(pipeline.N)), 1.0, rtol=0, atol=1e-30)
    assert jstar_band_defect(pipeline.pstar, pipeline.form, pipeline.M) <= 1e-30
    assert umon_expansion_residual(pipeline.base, pipeline.pstar, U, pipeline.nodes) <= 1e-30


@pytest.mark.parametrize("name", ["laguerre-krall", "laguerre-krall-10", "trivial", "laguerre-N2"])
def test_cholesky_factor(name, preset_pipeline):
    pipeline = preset_pipeline(name)
    residuals = pipeline.residuals()
    assert residuals["cholesky"].relative <= 1e-30
    assert residuals["cholesky_oracle"].relative <= 1e-30
    orthonormal = floats(jstar_orthonormal(pipeline.pstar, pipeline.form, pipeline.M))
    assert np.array_equal(orthonormal, orthonormal.T)


@pytest.mark.parametrize("name", ["indefinite", "simple-roots"])
def test_no_cholesky_factor_without_positivity(name, preset_pipeline):
    pipeline = preset_pipeline(name)
    assert pipeline.cholesky_factor() is None
    residuals = pipeline.residuals()
    assert residuals["cholesky"] is None
    assert residuals["cholesky_oracle"] is None
    assert residuals["LU"].relative <= 1e-30


@pytest.mark.parametrize("name", ["laguerre-krall", "laguerre-N2"])
def test_leading_block_does_not_depend_on_truncation(name, preset_pipeline):
    small, large = preset_pipeline(name), preset_pipeline(name, truncation=preset_pipeline(name).M + 8)
    M = small.M
    for attribute in ("J_star", "L_mon", "U_mon", "h_of_J"):
        gap = floats(getattr(small, attribute).to_dense() - getattr(large, attribute).to_dense()[:M, :M])
        scale = max(1.0, np.max(np.abs(floats(getattr(small, attribute).to_dense()))))
        assert np.max(np.abs(gap)) <= 1e-12 * scale


def test_h_of_jacobi_needs_a_longer_section(preset_pipeline):
    pipeline = preset_pipeline("laguerre-N2")
    with pytest.raises(OPAlchemyValidationError):
        h_of_jacobi(pipeline.base_jacobi, pipeline.nodes, pipeline.M + 1)


def binary64_pipeline(name: str, **overrides) -> GeronimusPipeline:
    return GeronimusPipeline(get_preset(name).run_config().with_overrides(precision="f64", **overrides))


@pytest.mark.parametrize("name", ["laguerre-krall", "laguerre-N2"])
def test_jstar_subdiagonal_is_positive(name, preset_pipeline):
    pipeline = preset_pipeline(name)
    N = pipeline.N
    subdiagonal = pipeline.J_star.diagonal(-N)
    assert len(subdiagonal) == pipeline.M - N
    assert all(entry > 0 for entry in subdiagonal)
    assert jstar_subdiagonal_defect(pipeline.J_star, pipeline.pstar.norms2) <= 1e-30


def test_jstar_subdiagonal_defect_flags_a_sign_change():
    band = BandMatrix.from_dense(np.array([[1.0, 1.0, 0.0], [2.0, 1.0, 1.0], [0.0, -3.0, 1.0]]), 1, 1)
    assert jstar_subdiagonal_defect(band, np.array([1.0, 2.0, 2.0])) == float("inf")
    band = BandMatrix.from_dense(np.array([[1.0, 1.0, 0.0], [2.0, 1.0, 1.0], [0.0, 1.0, 1.0]]), 1, 1)
    assert jstar_subdiagonal_defect(band, np.array([1.0, 2.0, 2.0])) == 0.0


@pytest.mark.parametrize("M", [8, 12, 16, 22])
def test_umon_diagonal_ignores_rounding_below_the_diagonal(M):
    pipeline = binary64_pipeline("laguerre-krall", n_max=min(12, M - 2), truncation=M)
    U = build_Umon(pipeline.base, pipeline.pstar, pipeline.form, M)
    assert float(U[0, 0]) == pytest.approx(0.5, rel=1e-6)
    assert float(U[0, 1]) == pytest.approx(1.0, rel=1e-6)
    assert U.lower == 0


def test_binary64_warns_at_preset_size():
    with pytest.warns(OPAlchemyConditioningWarning):
        binary64_pipeline("laguerre-krall").base


@pytest.mark.parametrize("name", ["laguerre-krall", "laguerre-N2"])
def test_binary64_agrees_with_high_precision_at_small_degree(name):
    small = binary64_pipeline(name, n_max=3)
    exact = GeronimusPipeline(get_preset(name).run_config().with_overrides(n_max=3))
    assert small.M == exact.M
    for n in range(small.M):
        assert coefficient_gap(small.pstar[n], exact.pstar[n]) <= 1e-6
    residuals = small.residuals()
    assert residuals["UL"].relative <= 1e-6
    assert residuals["LU"].relative <= 1e-6
