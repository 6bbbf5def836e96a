class MedgeomError(Exception):
    """Base class for all library errors."""


class DomainError(MedgeomError, ValueError):
    """An argument lies outside the domain of the operation."""


class SchemaError(MedgeomError):
    """A declared column is absent from the input table."""


class ParseError(MedgeomError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class CollinearityError(MedgeomError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class DegenerateFitError(MedgeomError):
    """A statistic is undefined because a standard error is zero."""


class InsufficientDataError(MedgeomError):
    pass


class ConvergenceError(MedgeomError):
    def __init__(self, message, iterations=None, last_change=None):
        super().__init__(message)
        self.iterations = iterations
        self.last_change = last_change


class BoundaryUndefinedError(MedgeomError, ValueError):
    pass


class WitnessNotFoundError(MedgeomError):
    pass
