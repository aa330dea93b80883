"""Exception types shared across the package."""


class HybridCloudError(Exception):
    """Base class for all package errors."""


class DimensionError(HybridCloudError, ValueError):
    """Raised when vector/matrix shapes do not agree.

    ``name`` identifies the offending operand, ``expected`` and ``actual``
    the mismatching sizes.
    """

    def __init__(self, name, expected, actual):
        self.name = name
        self.expected = expected
        self.actual = actual
        super().__init__(f"dimension mismatch for {name}: expected {expected}, got {actual}")


class ConvergenceError(HybridCloudError, ArithmeticError):
    """Numerical iteration failed to converge."""


class CapExceededError(HybridCloudError, ValueError):
    """A brute-force enumeration or matrix size limit was exceeded."""


class HorizonError(HybridCloudError, ValueError):
    """A trajectory or horizon is too short for the requested analysis."""


class PolicyError(HybridCloudError, ValueError):
    """Invalid controller policy or policy input."""


class InsufficientExcitationError(HybridCloudError, ArithmeticError):
    """Regressors of an identification problem are rank deficient.

    ``directions`` holds unit vectors (rows) spanning the unexcited part of
    the regressor space, in the ordering ``(x_1..x_n, u_1..u_m)``.
    """

    def __init__(self, message, directions):
        self.directions = directions
        super().__init__(message)


class UnknownAuthorError(HybridCloudError, KeyError):
    def __init__(self, author_id):
        self.author_id = author_id
        super().__init__(f"author {author_id!r} not present in corpus")

    def __str__(self):
        return self.args[0]


class FormatError(HybridCloudError, ValueError):
    """A config/model/trace file could not be parsed.

    ``key`` names the offending field (if any) and ``line`` the 1-based line.
    """

    def __init__(self, message, key=None, line=None, path=None):
        self.key = key
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = ": ".join([", ".join(where)]) + ": " if where else ""
        super().__init__(prefix + message)
