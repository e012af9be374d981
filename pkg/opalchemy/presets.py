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

"""Named configurations that reproduce the standard examples."""

from dataclasses import dataclass
from typing import Any, Dict, List

from dacite import from_dict

from opalchemy.exceptions import OPAlchemyValidationError
from opalchemy.models import RunConfig

PRESET_PRECISION = "hp256"


@dataclass(frozen=True)
class Preset:
    """A named run configuration.

    Attributes:
        name: Name accepted by ``--preset``.
        description: One line shown by ``opalchemy presets``.
        config: Config document, validated by :class:`RunConfig`.
    """

    name: str
    description: str
    config: Dict[str, Any]

    def run_config(self) -> RunConfig:
        return RunConfig.parse(self.config)


def _laguerre_krall(name: str, mass: float) -> Dict[str, Any]:
    return {
        "name": name,
        "description": f"Laguerre alpha=0 with a mass {mass} at the origin (h = t)",
        "config": {
            "form": {"measure": {"laguerre": {"alpha": 0.0}}, "h": [[0.0, 1]], "lambda": [[mass]]},
            "n_max": 12,
            "truncation": 22,
            "precision": PRESET_PRECISION,
        },
    }


_PRESET_DATA: List[Dict[str, Any]] = [
    _laguerre_krall("laguerre-krall", 1.0),
    _laguerre_krall("laguerre-krall-0.1", 0.1),
    _laguerre_krall("laguerre-krall-10", 10.0),
    {
        "name": "trivial",
        "description": "Laguerre alpha=0 without masses; P* coincides with the Laguerre polynomials",
        "config": {
            "form": {"measure": {"laguerre": {"alpha": 0.0}}, "h": [[0.0, 1]], "lambda": [[0.0]]},
            "n_max": 12,
            "truncation": 22,
            "precision": PRESET_PRECISION,
        },
    },
    {
        "name": "laguerre-N2",
        "description": "Laguerre alpha=1, h = t^2, unit masses on f(0) and f'(0)",
        "config": {
            "form": {"measure": {"laguerre": {"alpha": 1.0}}, "h": [[0.0, 2]], "lambda": [[1.0, 0.0], [0.0, 1.0]]},
            "n_max": 12,
            "truncation": 24,
            "precision": PRESET_PRECISION,
        },
    },
    {
        "name": "simple-roots",
        "description": "Laguerre alpha=0, h = t (t - 1) with a coupled mass matrix",
        "config": {
            "form": {
                "measure": {"laguerre": {"alpha": 0.0}},
                "h": [[0.0, 1], [1.0, 1]],
                "lambda": [[1.0, 0.25], [0.25, 0.5]],
            },
            "n_max": 12,
            "truncation": 24,
            "precision": PRESET_PRECISION,
        },
    },
    {
        "name": "indefinite",
        "description": "Laguerre alpha=0, h = t, shat = [[-5]]; the Geronimus form is indefinite",
        "config": {
            "form": {"measure": {"laguerre": {"alpha": 0.0}}, "h": [[0.0, 1]], "shat": [[-5.0]]},
            "n_max": 12,
            "truncation": 22,
            "precision": PRESET_PRECISION,
        },
    },
]

PRESETS: Dict[str, Preset] = {data["name"]: from_dict(data_class=Preset, data=data) for data in _PRESET_DATA}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise OPAlchemyValidationError(f"unknown preset '{name}'; known presets: {', '.join(PRESETS)}") from None


def list_presets() -> List[Preset]:
    return list(PRESETS.values())
