"""Exception hierarchy shared across the package."""


class PckadError(Exception):
    """Base class for all errors raised by pckad."""


class CorpusError(PckadError):
    """Unreadable or malformed packet corpus (pcap or JSONL)."""


class ModelFormatError(PckadError):
    """Model file is missing, corrupt, or violates a model invariant."""


class InjectionError(PckadError):
    """A record is unsuitable for the requested anomaly injection."""


class EvaluationError(PckadError):
    """Labels and corpus do not line up, or a sweep cell is unusable."""
