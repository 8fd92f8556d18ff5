class DomainError(ValueError):
    """Argument outside the domain of a closed-form formula."""


class GridSpecError(ValueError):
    pass


class MismatchError(ValueError):
    """Inputs that must share a shape or grid do not."""


class EmptyEnsembleError(ValueError):
    pass


class UnsupportedNotionError(NotImplementedError):
    pass


class ConfigError(ValueError):
    """Invalid scenario configuration (CLI exit code 2)."""
