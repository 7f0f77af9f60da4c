"""Exception hierarchy shared by the numerical tools and the CLI."""


class EikoLabError(Exception):
    """Base class for all eikolab errors."""

    exit_code = 1


class ValidationFailure(EikoLabError, ValueError):
    """Invalid input: bad grid, malformed file, unsupported parameters."""

    exit_code = 2


class GridSpecError(ValidationFailure):
    """Grid specification violates its invariants."""


class FieldFormatError(ValidationFailure):
    """Field or scalar file does not follow the text format."""


class SupportError(ValidationFailure):
    """Test-function support is not inside the admissible interior."""


class UnresolvableMollifierError(ValidationFailure):
    """Mollifier radius is below the resolvable scale (eps < 2h)."""


class WindowError(ValidationFailure):
    """Evaluation window is too small or leaves the domain."""


class SingularGridError(ValidationFailure):
    """A grid node sits on the singular set and no half-shift avoids it."""


class GeneratorError(ValidationFailure):
    """Unknown generator or parameters invalid for the generator."""


class UnderResolvedLoopError(ValidationFailure):
    """Consecutive loop samples turn by a right angle or more."""


class NumericalContractError(EikoLabError, ArithmeticError):
    """A computed quantity breaks a numerical contract."""

    exit_code = 3
