"""Exception hierarchy shared by all modules.

Every error carries a stable machine-readable ``token`` and the exit code
the CLI maps it to (2 = malformed input, 3 = budget/size limits,
4 = decomposition point errors, 1 = everything else).
"""


class MsoPolyError(Exception):
    token = "Error"
    exit_code = 1

    def __init__(self, detail=""):
        super().__init__(detail)
        self.detail = detail

    def __str__(self):
        return f"{self.token}: {self.detail}" if self.detail else self.token


# -- input / parse errors (exit 2) -----------------------------------------

class FormulaSyntaxError(MsoPolyError):
    token = "SyntaxError"
    exit_code = 2

    def __init__(self, line, col, expected):
        super().__init__(f"line {line}, col {col}: expected {expected}")
        self.line = line
        self.col = col
        self.expected = expected


class UnboundVariable(MsoPolyError):
    token = "UnboundVariable"
    exit_code = 2

    def __init__(self, name):
        super().__init__(name)
        self.name = name


class DuplicateFree(MsoPolyError):
    token = "DuplicateFree"
    exit_code = 2

    def __init__(self, name):
        super().__init__(name)
        self.name = name


class ShadowedVariable(MsoPolyError):
    token = "ShadowedVariable"
    exit_code = 2

    def __init__(self, name):
        super().__init__(name)
        self.name = name


class GraphFormatError(MsoPolyError):
    token = "GraphFormatError"
    exit_code = 2


class TdFormatError(MsoPolyError):
    token = "TdFormatError"
    exit_code = 2


class WeightsFormatError(MsoPolyError):
    token = "WeightsFormatError"
    exit_code = 2


# -- budget / size limits (exit 3) ------------------------------------------

class BudgetExceeded(MsoPolyError):
    token = "BudgetExceeded"
    exit_code = 3


class UniverseTooLarge(MsoPolyError):
    token = "UniverseTooLarge"
    exit_code = 3


class WitnessTooLarge(MsoPolyError):
    token = "WitnessTooLarge"
    exit_code = 3


class TooLarge(MsoPolyError):
    token = "TooLarge"
    exit_code = 3


# -- decomposition oracle errors (exit 4) ------------------------------------

class NotInDilate(MsoPolyError):
    token = "NotInDilate"
    exit_code = 4


class InconsistentPoint(MsoPolyError):
    token = "InconsistentPoint"
    exit_code = 4


class PairingFailed(MsoPolyError):
    token = "PairingFailed"
    exit_code = 4


class NotDecomposable(MsoPolyError):
    token = "NotDecomposable"
    exit_code = 4


# -- structural errors (exit 1) ----------------------------------------------

class IncompatibleStructures(MsoPolyError):
    token = "IncompatibleStructures"


class BoundaryFull(MsoPolyError):
    token = "BoundaryFull"


class BadPosition(MsoPolyError):
    token = "BadPosition"


class EmptyPolytope(MsoPolyError):
    token = "EmptyPolytope"


class InvalidDecomposition(MsoPolyError):
    token = "InvalidDecomposition"


class NoDecomposition(MsoPolyError):
    token = "NoDecomposition"
