"""Exception types raised by the library."""


class PskcError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(PskcError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class InvalidInputError(PskcError, ValueError):
    """Input data has the wrong shape, dimensionality or contents."""


class DataFormatError(PskcError):
    """A file could not be parsed.

    Attributes:
        path: File that failed to parse.
        line: 1-based line number, when the failure is line specific.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
