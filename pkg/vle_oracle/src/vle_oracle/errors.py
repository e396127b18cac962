class SessionError(ValueError):
    """Invalid session input: image shape, caption length, mask width."""


class LabelTokenizationError(SessionError):
    """A pointing-game label does not tokenize to a single token."""
