"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A numerical routine failed (non-finite value, divergence, solver breakdown)."""


class DegenerateFrameError(NumericalError, ValueError):
    """A frame vector has zero norm where a normalization needs it."""

    def __init__(self, owner, column):
        self.owner = owner
        self.column = column
        super().__init__(f"degenerate frame vector ({owner}, {column})")


class GeometryError(ValueError):
    """Invalid planar geometry input (coincident sites, degenerate polygon)."""


class ConfigError(ValueError):
    """Scenario configuration failed validation."""

    def __init__(self, message, path=None):
        self.path = path
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{message}")
