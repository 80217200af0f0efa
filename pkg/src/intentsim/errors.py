"""Exception hierarchy shared across the simulator."""


class IntentSimError(Exception):
    """Base class for all simulator errors."""


class ParseError(IntentSimError):
    """A scenario or config file is not syntactically valid."""


class ValidationError(IntentSimError):
    """A loaded structure violates an invariant; message names the field path."""


class ConfigError(IntentSimError):
    """A trial or suite configuration is invalid."""


class DegenerateTarget(IntentSimError):
    """Bearing requested toward the robot's own position."""


class UnparsablePrompt(IntentSimError):
    """No ontology noun or category word found in the prompt text."""


class EmptyCandidateSet(IntentSimError):
    """An operation that needs tracked candidates was given none."""


class BackendUnavailable(IntentSimError):
    """The semantic scoring backend failed; callers keep the previous prior."""


class ExternalTimeout(BackendUnavailable):
    """External scorer missed its deadline."""


class MalformedResponse(BackendUnavailable):
    """External scorer returned a response that does not match the protocol."""


class TransportError(BackendUnavailable):
    """External scorer could not be reached."""
