"""Adapter error taxonomy."""


class ExtractError(Exception):
    """Base class for everything this package raises on purpose."""


class UnknownModel(ExtractError):
    pass


class UnknownLayer(ExtractError):
    pass


class UnreadableImage(ExtractError):
    pass


class DuplicateStimulus(ExtractError):
    pass


class NoImages(ExtractError):
    pass


class WeightsUnavailable(ExtractError):
    pass
