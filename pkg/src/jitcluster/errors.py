"""Exception types shared across modules."""


class ConstructionUnsupportedError(ValueError):
    """The entangling procedure cannot build vertical edges (c2 > 1, not broker-client)."""


class CapacityError(RuntimeError):
    """A guard on problem size was exceeded (graph too large, search too long)."""


class SearchCapError(CapacityError):
    """Reservoir search passed its cap without reaching the target yield."""
