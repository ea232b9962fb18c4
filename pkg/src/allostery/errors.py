"""Exception types shared across the package."""


class AllosteryError(Exception):
    """Base class for all errors raised by this package."""


class PresentationUnsupported(AllosteryError):
    """The presentation admits neither the direct small-cancellation route
    nor the double-cover delegation route."""


class EmptyTarget(AllosteryError):
    """Erasing morphism asked to keep an empty A- or B-side."""


class ForeignGenerators(AllosteryError):
    """A word mentions generators outside the expected alphabet or subset."""


class PresentationMismatch(AllosteryError):
    """Two actions of different presentations were combined."""


class NotAQuotient(AllosteryError):
    """No equivariant basepoint-respecting surjection exists.

    Carries a witness word that fixes the fine basepoint but moves the
    coarse one.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class KillWordNotInSubgroup(AllosteryError):
    """A kill word does not fix the basepoint of the covering action."""

    def __init__(self, message, word=None, endpoint=None):
        super().__init__(message)
        self.word = word
        self.endpoint = endpoint


class TargetInvisible(AllosteryError):
    """A separation target has zero class in the homology quotient."""

    def __init__(self, message, word=None):
        super().__init__(message)
        self.word = word


class RankExhausted(AllosteryError):
    """No separation map found up to the configured rank cap."""


class ConstructionExhausted(AllosteryError):
    """The subgroup search ran out of admissible (d, E) choices.

    ``diagnostics`` lists one entry per attempt with the failure reason.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class RelatorFailure(AllosteryError):
    """An induced action failed its relator check (bad embedding data)."""


class DegreeCapExceeded(AllosteryError):
    """The experimental iterated cover mode hit its hard degree cap."""
