"""Exception hierarchy shared across the simulator."""


class QRLError(Exception):
    """Base class for all simulator errors."""


class InvalidArgument(QRLError, ValueError):
    pass


class InvalidState(QRLError, ValueError):
    """A register or table is in a state an operation cannot accept."""


class MapParseError(QRLError, ValueError):
    """Raised by the map loader; carries optional row/column diagnostics."""

    def __init__(self, message, row=None, col=None):
        self.row = row
        self.col = col
        if row is not None and col is not None:
            message = f"{message} (row {row}, column {col})"
        elif row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)


class ConfigError(QRLError, ValueError):
    pass
