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

import pytest

from opalchemy.exceptions import OPAlchemyValidationError
from opalchemy.presets import PRESETS, get_preset, list_presets


def test_preset_names():
    assert [preset.name for preset in list_presets()] == [
        "laguerre-krall",
        "laguerre-krall-0.1",
        "laguerre-krall-10",
        "trivial",
        "laguerre-N2",
        "simple-roots",
        "indefinite",
    ]


@pytest.mark.parametrize("name", list(PRESETS))
def test_presets_are_valid_configs(name):
    preset = get_preset(name)
    run = preset.run_config()
    assert preset.description
    assert run.precision == "hp256"
    assert run.M >= run.n_max + 2 * run.N


@pytest.mark.parametrize(
    "name, mass", [("laguerre-krall", 1.0), ("laguerre-krall-0.1", 0.1), ("laguerre-krall-10", 10.0)]
)
def test_laguerre_krall_presets(name, mass):
    run = get_preset(name).run_config()
    assert run.N == 1
    assert run.form.lambda_ == [[mass]]
    assert run.form.measure.laguerre.alpha == 0.0


def test_indefinite_preset_is_given_by_shat():
    run = get_preset("indefinite").run_config()
    assert run.form.shat == [[-5.0]]
    assert run.form.lambda_ is None


def test_unknown_preset():
    with pytest.raises(OPAlchemyValidationError) as error:
        get_preset("laguerre")
    assert "laguerre-krall" in error.value.reason
