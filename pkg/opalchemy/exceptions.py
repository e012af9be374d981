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

VALIDATION_ERROR_MESSAGE = """
Invalid input: {reason}
"""

MOMENT_HORIZON_ERROR_MESSAGE = """
Moment index {k} requested beyond the available horizon {horizon}.
Supply more moments or lower the degree / truncation order.
"""

QUASI_DEFINITENESS_ERROR_MESSAGE = """
The bilinear form is not quasi-definite at degree {degree}: {reason}
"""

POSITIVITY_ERROR_MESSAGE = """
Positivity check failed at degree {degree}: {reason}
"""

NON_HANKEL_FORM_ERROR_MESSAGE = """
A three-term recurrence only exists for a form where multiplication by t is symmetric.
The {form} is not of that kind; use the banded operators of the factor module instead.
"""

NODE_MISMATCH_ERROR_MESSAGE = """
The mass matrix has size {got} but the factored polynomial h has N={expected} jet entries.
"""

NODE_SET_MISMATCH_ERROR_MESSAGE = """
The masses sit at the nodes {got} but the roots of h with multiplicities are {expected}.
"""

BANDWIDTH_ERROR_MESSAGE = """
A band matrix with lower bandwidth {lower} and upper bandwidth {upper} can't be
split into blocks of size {block_size}: both bandwidths must be at most the block size.
"""

PRECISION_ERROR_MESSAGE = """
Unknown precision '{name}'. Use 'f64' or 'hp<bits>' with bits >= 53, for example 'hp256'.
"""

SINGULAR_SYSTEM_ERROR_MESSAGE = """
Linear system '{what}' is singular in the working precision.
"""

CONDITIONING_WARNING_MESSAGE = """
{what} is ill-conditioned for the working precision (threshold {threshold:.1e}).
Consider running with a higher precision such as 'hp256'.
"""


class OPAlchemyWarning(Warning):
    pass


class OPAlchemyConditioningWarning(OPAlchemyWarning):
    def __init__(self, what: str, estimate: float, threshold: float):
        self.what = what
        self.estimate = estimate
        self.threshold = threshold
        self.message = CONDITIONING_WARNING_MESSAGE.format(what=what, threshold=threshold)
        super().__init__(self.message)


class OPAlchemyError(Exception):
    pass


class OPAlchemyValidationError(OPAlchemyError):
    def __init__(self, reason: str):
        self.reason = reason
        self.message = VALIDATION_ERROR_MESSAGE.format(reason=reason)
        super().__init__(self.message)


class OPAlchemyMomentHorizonError(OPAlchemyValidationError):
    def __init__(self, k: int, horizon: int):
        self.k = k
        self.horizon = horizon
        super().__init__(reason=MOMENT_HORIZON_ERROR_MESSAGE.format(k=k, horizon=horizon).strip())


class OPAlchemyNodeMismatchError(OPAlchemyValidationError):
    def __init__(self, expected, got, message: str = NODE_MISMATCH_ERROR_MESSAGE):
        self.expected = expected
        self.got = got
        super().__init__(reason=message.format(expected=expected, got=got).strip())


class OPAlchemyPrecisionError(OPAlchemyValidationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(reason=PRECISION_ERROR_MESSAGE.format(name=name).strip())


class OPAlchemyNumericalError(OPAlchemyError):
    """Raised when a computation breaks down on valid input."""

    def __init__(self, message: str, degree=None):
        self.degree = degree
        self.message = message
        super().__init__(self.message)


class OPAlchemyQuasiDefinitenessError(OPAlchemyNumericalError):
    def __init__(self, degree: int, reason: str = "a pivot vanished"):
        super().__init__(
            message=QUASI_DEFINITENESS_ERROR_MESSAGE.format(degree=degree, reason=reason),
            degree=degree,
        )


class OPAlchemyPositivityError(OPAlchemyNumericalError):
    def __init__(self, degree, reason: str = "a norm is not positive"):
        super().__init__(
            message=POSITIVITY_ERROR_MESSAGE.format(degree=degree, reason=reason),
            degree=degree,
        )


class OPAlchemySingularSystemError(OPAlchemyNumericalError):
    def __init__(self, what: str, degree=None):
        super().__init__(message=SINGULAR_SYSTEM_ERROR_MESSAGE.format(what=what), degree=degree)


class OPAlchemyNonHankelFormError(OPAlchemyError):
    def __init__(self, form: str = "form"):
        self.message = NON_HANKEL_FORM_ERROR_MESSAGE.format(form=form)
        super().__init__(self.message)


class OPAlchemyBandwidthError(OPAlchemyError):
    def __init__(self, lower: int, upper: int, block_size: int):
        self.message = BANDWIDTH_ERROR_MESSAGE.format(lower=lower, upper=upper, block_size=block_size)
        super().__init__(self.message)
