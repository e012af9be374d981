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

from functools import lru_cache

import pytest

from opalchemy.forms import LaguerreMoments, MeasureForm, pushforward_moments
from opalchemy.orthopoly import monic_ops_from_form
from opalchemy.pipeline import GeronimusPipeline
from opalchemy.poly import FactoredNodes
from opalchemy.precision import FLOAT64, parse_precision
from opalchemy.presets import get_preset


@lru_cache(maxsize=None)
def _preset_pipeline(name: str, truncation=None) -> GeronimusPipeline:
    config = get_preset(name).run_config()
    if truncation is not None:
        config = config.with_overrides(truncation=truncation)
    return GeronimusPipeline(config)


@pytest.fixture(scope="session")
def preset_pipeline():
    """Pipelines shared across the session; they cache every sequence they compute."""
    return _preset_pipeline


@pytest.fixture(scope="session")
def hp():
    return parse_precision("hp256")


@pytest.fixture(scope="session")
def hp128():
    return parse_precision("hp128")


@pytest.fixture
def f64():
    return FLOAT64


@pytest.fixture
def laguerre0_f64():
    return LaguerreMoments(0.0, 40, FLOAT64)


@pytest.fixture(scope="session")
def laguerre0_hp(hp):
    return LaguerreMoments(0.0, 80, hp)


@pytest.fixture(scope="session")
def laguerre_base_hp(laguerre0_hp):
    """Monic orthogonal polynomials of ``t e^{-t}`` up to degree 20."""
    h = FactoredNodes(((0.0, 1),))
    return monic_ops_from_form(MeasureForm(pushforward_moments(laguerre0_hp, h)), 20)
