"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An operation was called with parameters outside its stated domain."""


class ResourceCapError(RuntimeError):
    """A requested computation would exceed the configured memory cap."""


class InsufficientReplicasError(ValueError):
    """A statistical estimator refused to run below its replica floor."""
