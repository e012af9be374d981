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

"""``opalchemy transform | factorize | verify | presets``.

Exit status: 0 when the run succeeds (verdicts such as an indefinite form are data),
1 on invalid input, 2 on a numerical breakdown or a failed invariant check.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from opalchemy.constants import OPA_LOG_LEVEL
from opalchemy.exceptions import OPAlchemyError, OPAlchemyNumericalError, OPAlchemyValidationError
from opalchemy.models import REPORT_FORMATS, RunConfig
from opalchemy.pipeline import GeronimusPipeline
from opalchemy.presets import get_preset, list_presets
from opalchemy.reports import exporters_for
from opalchemy.verification import verify_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

COMMANDS = ("transform", "factorize", "verify", "presets")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opalchemy",
        description="Geronimus transformations of orthogonal polynomials and their banded factorizations.",
    )
    parser.add_argument("command", choices=COMMANDS, help="What to run.")
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--config", metavar="PATH", help="JSON run configuration.")
    source.add_argument("--preset", metavar="NAME", help="Named configuration, see 'opalchemy presets'.")
    parser.add_argument("--nmax", type=int, dest="n_max", help="Override the largest degree n_max.")
    parser.add_argument("--trunc", type=int, dest="truncation", help="Override the truncation order M.")
    parser.add_argument("--precision", help="Override the precision: f64 or hp<bits>.")
    parser.add_argument("--out", metavar="DIR", help="Directory for the report files.")
    parser.add_argument("--format", choices=REPORT_FORMATS, help="Report format.")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """The configuration selected on the command line with its overrides applied.

    Raises:
        OPAlchemyValidationError: No source was given or the configuration is invalid.
    """
    if args.config:
        config = RunConfig.from_file(args.config)
    elif args.preset:
        config = get_preset(args.preset).run_config()
    else:
        raise OPAlchemyValidationError(f"'{args.command}' needs --config PATH or --preset NAME")
    return config.with_overrides(
        n_max=args.n_max,
        truncation=args.truncation,
        precision=args.precision,
        directory=args.out,
        format=args.format,
    )


def _print_presets() -> int:
    for preset in list_presets():
        print(f"{preset.name:20s} {preset.description}")
    return EXIT_OK


def _summary(report: Dict[str, Any]) -> str:
    command = report["command"]
    if command == "verify":
        failed = [c["module"] + "." + c["name"] for c in report["checks"] if not c["passed"]]
        return f"verify: {len(report['checks']) - len(failed)}/{len(report['checks'])} checks passed" + (
            f"; failed: {', '.join(failed)}" if failed else ""
        )
    if command == "transform":
        return f"transform: form is {report['definiteness']['classification']} up to degree {report['n_max']}"
    residuals = {name: r["relative"] for name, r in report["residuals"].items() if r is not None}
    return "factorize: " + ", ".join(f"{name} residual {value:.2e}" for name, value in sorted(residuals.items()))


def run(command: str, config: RunConfig) -> Dict[str, Any]:
    pipeline = GeronimusPipeline(config)
    if command == "transform":
        return pipeline.transform_report()
    if command == "factorize":
        return pipeline.factorize_report()
    return verify_report(pipeline)


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=OPA_LOG_LEVEL, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    if args.command == "presets":
        return _print_presets()

    try:
        config = load_config(args)
        report = run(args.command, config)
        for exporter in exporters_for(config.output.format):
            exporter.export(report, config.output.directory)
    except OPAlchemyValidationError as exc:
        print(f"error: {exc.reason}", file=sys.stderr)
        return EXIT_VALIDATION
    except OPAlchemyNumericalError as exc:
        where = f" at degree {exc.degree}" if exc.degree is not None else ""
        print(f"numerical failure{where}: {exc.message.strip()}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OPAlchemyError as exc:
        print(f"error: {str(exc).strip()}", file=sys.stderr)
        return EXIT_NUMERICAL

    print(_summary(report))
    if args.command == "verify" and not report["passed"]:
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
