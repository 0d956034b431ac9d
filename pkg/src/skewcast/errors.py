"""Exception hierarchy shared across the package.

Two broad families matter to callers (and to the CLI exit codes):
configuration problems (bad knobs, incompatible choices) and data
problems (malformed files, values outside a valid domain).
"""


class SkewcastError(Exception):
    """Base class for all package errors."""


class ConfigError(SkewcastError):
    """Invalid or incompatible configuration."""


class DataError(SkewcastError):
    """Input data violates a contract."""


class MalformedRow(DataError):
    def __init__(self, line_no: int, detail: str):
        super().__init__(f"line {line_no}: {detail}")
        self.line_no = line_no


class NegativeSales(DataError):
    def __init__(self, line_no: int, value: float):
        super().__init__(f"line {line_no}: negative sales {value}")
        self.line_no = line_no


class DuplicateKey(DataError):
    def __init__(self, item_id: str, day):
        super().__init__(f"duplicate (item, day) pair: ({item_id!r}, {day})")
        self.item_id = item_id
        self.day = day


class IoFailure(DataError):
    """Filesystem write failed."""


class DomainError(DataError):
    """Value outside the valid domain of a transform or loss."""


class EmptyInput(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class InsufficientData(DataError):
    pass


class InsufficientHistory(DataError):
    pass


class DegenerateData(DataError):
    pass


class ZeroActual(DataError):
    """An item sold nothing over the horizon; percent error is undefined."""


class NoValidItems(DataError):
    pass


class DegenerateBaseline(DataError):
    pass
