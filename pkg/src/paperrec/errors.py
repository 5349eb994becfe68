"""Exception types shared across the pipeline."""

from __future__ import annotations


class PaperRecError(Exception):
    """Base class for all package-specific failures."""


class IndexOutOfRange(PaperRecError):
    """A row or column index is outside the matrix shape."""


class UnorderedInput(PaperRecError):
    """A stream that must be timestamp-ordered was not."""


class DisorderExceeded(UnorderedInput):
    """An event arrived earlier than the merge window can reorder."""


class BudgetTooSmall(PaperRecError):
    """A single paper's co-occurrence table alone exceeds the memory budget."""


class DegenerateGraph(PaperRecError):
    """Graph computation is undefined (e.g. no edges at all)."""


class UnknownPaper(PaperRecError):
    """A paper id is absent from the index being queried."""


class UnknownTerm(PaperRecError):
    """A term is absent from the text index vocabulary."""


class UnknownDocument(PaperRecError):
    """A document id is absent from the text index."""


class EmptyInput(PaperRecError):
    """An operation received no usable input at all."""


class NoInputsResolved(PaperRecError):
    """Free-text input yielded zero known paper ids."""


class EmptyRelevantSet(PaperRecError):
    """An evaluation item has no relevant papers to score against."""


class EmptyTestSet(PaperRecError):
    """An evaluation setting selected zero test papers."""


class InvalidConfig(PaperRecError):
    """A configuration value is out of its documented range."""
