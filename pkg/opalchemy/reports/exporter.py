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

import csv
import json
import logging
import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from opalchemy.exceptions import OPAlchemyValidationError

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite numbers become ``None``."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if value is None or isinstance(value, (bool, np.bool_, str)):
        return bool(value) if isinstance(value, np.bool_) else value
    if isinstance(value, (int, np.integer)):
        return int(value)
    number = float(value)
    return number if math.isfinite(number) else None


def _cell(value: Any) -> str:
    value = to_jsonable(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ReportExporter(ABC):
    format: str = ""

    @abstractmethod
    def export(self, report: Dict[str, Any], directory: Union[str, Path]) -> List[Path]:
        """Writes the report into ``directory`` and returns the files written.

        Raises:
            NotImplementedError: The method must be overridden by a specific exporter.
        """
        raise NotImplementedError("Subclasses must override this method in order to write a report in their format.")


class JSONReportExporter(ReportExporter):
    """One ``<command>.json`` file with sorted keys."""

    format = "json"

    @staticmethod
    def dumps(report: Dict[str, Any]) -> str:
        return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def export(self, report: Dict[str, Any], directory: Union[str, Path]) -> List[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{report['command']}.json"
        path.write_text(self.dumps(report))
        logger.info("Wrote %s", path)
        return [path]


class CSVReportExporter(ReportExporter):
    """One ``<command>_<table>.csv`` file per table of the report."""

    format = "csv"

    def export(self, report: Dict[str, Any], directory: Union[str, Path]) -> List[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, content in sorted(report.get("tables", {}).items()):
            path = directory / f"{report['command']}_{name}.csv"
            with path.open("w", newline="") as handle:
                writer = csv.writer(handle)
                writer.writerow(content["columns"])
                for row in content["rows"]:
                    writer.writerow([_cell(value) for value in row])
            paths.append(path)
        logger.info("Wrote %d CSV tables to %s", len(paths), directory)
        return paths


def exporters_for(fmt: str) -> List[ReportExporter]:
    if fmt == "json":
        return [JSONReportExporter()]
    if fmt == "csv":
        return [CSVReportExporter()]
    if fmt == "both":
        return [JSONReportExporter(), CSVReportExporter()]
    raise OPAlchemyValidationError(f"unknown report format '{fmt}'")
