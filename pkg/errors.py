# errors.py
# Exception hierarchy shared by the library and the command line

import numpy as np


class SkewError(Exception):
    """Base class for everything this package raises on purpose"""


class DimensionMismatchError(SkewError, ValueError):
    pass


class SingularMatrixError(SkewError, np.linalg.LinAlgError):
    pass


class NotSymmetricError(SkewError, np.linalg.LinAlgError):
    pass


class NotPositiveDefiniteError(SkewError, np.linalg.LinAlgError):
    pass


class VacuousProblemError(SkewError, ValueError):
    """Raised when every input matrix is zero"""


class ConfigurationError(SkewError, ValueError):
    pass


class FormatError(SkewError, ValueError):
    """Malformed input document, with the offending field and line when known"""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
