"""Typed error taxonomy shared across the toolkit."""


class VpcoachError(Exception):
    """Base class for all toolkit errors."""


class NoAnswerFound(VpcoachError):
    """The answer text holds nothing extractable for the task kind."""


class MissingGroundTruth(VpcoachError):
    """Ground truth lacks the field required by the sample's task kind."""


class EmptyGroundTruth(VpcoachError):
    """A temporal annotation has no positions to match against."""


class EmptyVideo(VpcoachError):
    """A frame source yielded zero frames."""


class MissingBoxes(VpcoachError):
    """A box-driven visual prompt was requested without any boxes."""


class MissingRelevanceProvider(VpcoachError):
    """The attention overlay prompt was requested without a relevance source."""


class PolicyFailure(VpcoachError):
    """A policy call failed; aborts the sample, never the run."""


class SelectorFailure(VpcoachError):
    """A selector call failed; aborts the sample, never the run."""


class NoCandidates(VpcoachError):
    """Pseudo-label selection was asked to choose from an empty candidate set."""


class LengthMismatch(VpcoachError):
    """Paired prediction/ground-truth lists have different lengths."""


class ComponentAtOne(VpcoachError):
    """A log-gain metric component exceeds 1 beyond the epsilon guard."""


class SchemaError(VpcoachError):
    """A dataset header or record violates the declared schema."""
