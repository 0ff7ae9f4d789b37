"""Exception types shared across the toolkit."""


class WrenchGraspError(Exception):
    """Base class for all toolkit errors."""


class InvalidModelError(WrenchGraspError):
    """A tool or rigid-body model violates its physical invariants."""


class InvalidTransformError(WrenchGraspError):
    """A rotation/transform is not a valid rigid transform."""


class InvalidParameterError(WrenchGraspError):
    """A scalar or vector argument is outside its contract."""


class InvalidInputError(WrenchGraspError):
    """Structured input (cloud, feature vector, record set) is unusable."""


class SynthesisError(WrenchGraspError):
    """Trajectory synthesis could not reach the requested contact."""


class SimulationDivergedError(WrenchGraspError):
    """Rollout state became non-finite."""


class TrainingFailedError(WrenchGraspError):
    """Surrogate training diverged; carries the loss history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class NoCandidateError(WrenchGraspError):
    """Selection was asked to pick from an empty candidate set."""


class ScenarioError(WrenchGraspError):
    """Scenario file failed validation; message names the field path."""
