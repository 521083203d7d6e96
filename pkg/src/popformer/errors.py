"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was invoked outside its documented preconditions."""


class CapacityError(ContractViolation):
    """Input exceeds a configured model capacity (max dimension, objectives or sequence)."""


class ShapeError(ContractViolation):
    """Tensor shapes are inconsistent for the requested operation."""


class ConfigError(ContractViolation):
    """Invalid configuration value."""


class DataError(ContractViolation):
    """Malformed dataset record or incompatible population pair."""


class EvaluationError(RuntimeError):
    """A problem evaluation produced a non-finite objective or constraint value."""


class BudgetExhausted(RuntimeError):
    """An evaluation budget could not cover a requested evaluation.

    ``performed`` counts evaluations that did happen before the budget ran
    out; ``population`` carries the partially evaluated population when one
    exists, so callers can keep the work already paid for.
    """

    def __init__(self, message: str, performed: int = 0, population=None):
        super().__init__(message)
        self.performed = performed
        self.population = population


class UnsupportedFront(ValueError):
    """The problem has no analytically known reference front."""


class IgdUndefined(ValueError):
    """IGD is undefined for the given solution set (e.g. empty)."""


class CheckpointError(RuntimeError):
    """Checkpoint file is corrupt, truncated or inconsistent with its config."""


class TapeError(RuntimeError):
    """Illegal use of a gradient tape (e.g. a second backward pass)."""
