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

import os

OPA_PRECISION = os.getenv("OPA_PRECISION", "f64")
OPA_TOLERANCE = float(os.getenv("OPA_TOLERANCE", "1e-10"))
OPA_PIVOT_TOLERANCE = float(os.getenv("OPA_PIVOT_TOLERANCE", "1e-12"))
OPA_CONDITION_THRESHOLD = float(os.getenv("OPA_CONDITION_THRESHOLD", "1e12"))
OPA_MOMENT_HORIZON = int(os.getenv("OPA_MOMENT_HORIZON", "96"))
OPA_LOG_LEVEL = os.getenv("OPA_LOG_LEVEL", "WARNING").upper()

# Largest moment index whose Laguerre moment stays finite in binary64 (170! overflows).
F64_MAX_LAGUERRE_HORIZON = 160

REPORT_SCHEMA = "geronimus-report/1"
