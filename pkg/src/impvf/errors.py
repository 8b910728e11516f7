"""Exception hierarchy shared by every module of the package."""


class ImpvfError(Exception):
    """Base class for all errors raised by impvf."""


class InvalidArgument(ImpvfError, ValueError):
    pass


class InvalidSchedule(ImpvfError, ValueError):
    pass


class GridMismatch(ImpvfError, ValueError):
    pass


class DimensionMismatch(ImpvfError, ValueError):
    pass


class KernelEvalError(ImpvfError, ArithmeticError):
    """A kernel or nonlinearity failed to evaluate at some (tau, sigma)."""

    def __init__(self, message, tau=None, sigma=None):
        super().__init__(message)
        self.tau = tau
        self.sigma = sigma


class InsufficientResolution(ImpvfError, ValueError):
    pass


class CertificateInfeasible(ImpvfError, ArithmeticError):
    pass


class OracleDivergence(ImpvfError, ArithmeticError):
    pass


class InstanceError(ImpvfError, ValueError):
    """A Gronwall instance violates nonnegativity or monotonicity."""


class ProblemFormatError(ImpvfError, ValueError):
    """Structured diagnostic for a malformed problem or instance file.

    ``field`` is a dotted path such as ``dynamics.G[0]``; ``line`` is set
    when the underlying TOML reader reported one.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(field)
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.message = message


class ExprSyntaxError(ImpvfError, ValueError):
    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnknownVariable(ExprSyntaxError):
    pass


class IndexOutOfRange(ExprSyntaxError):
    pass


class UnboundVariable(ImpvfError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unbound variable"


class EvalError(ImpvfError, ArithmeticError):
    """Evaluation produced NaN/Inf or hit a domain error.

    ``subexpr`` is the printed offending subexpression; ``index`` is the
    flat position of the first bad element for array evaluation.
    """

    def __init__(self, message, subexpr=None, index=None):
        self.subexpr = subexpr
        self.index = index
        if subexpr is not None:
            message = f"{message} in '{subexpr}'"
        super().__init__(message)
