"""Exception hierarchy.

Combinatorial rejections (bad input angles, angles outside a copy, etc.)
derive from :class:`CombinatorialRejection`; the CLI maps them to exit code 2.
"""


class PuzzleError(Exception):
    """Base class for every error raised by puzzle_forge."""

    def __init__(self, message: str = "", **context):
        super().__init__(message)
        for key, value in context.items():
            setattr(self, key, value)


class CombinatorialRejection(PuzzleError):
    pass


class NotARotationCycle(CombinatorialRejection):
    pass


class NoPortraitFound(CombinatorialRejection):
    pass


class OnWakeBoundary(CombinatorialRejection):
    pass


class OrbitHitsAlpha(CombinatorialRejection):
    pass


class NotInCopy(CombinatorialRejection):
    pass


class NonRecurrent(CombinatorialRejection):
    """The critical point never returns to the top nest piece."""


class HorizonExhausted(PuzzleError):
    pass


class DegenerateCase(PuzzleError):
    pass


class NumericalFailure(PuzzleError):
    pass


class EmptyConstraints(CombinatorialRejection):
    pass
