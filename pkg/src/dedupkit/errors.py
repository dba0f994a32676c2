"""Exception hierarchy shared by every dedupkit module."""


class DedupError(Exception):
    """Base class for all dedupkit errors."""


class SelfPairError(DedupError, ValueError):
    pass


class ParamError(DedupError, ValueError):
    pass


class ConfigError(DedupError, ValueError):
    pass


class MissingRecordError(DedupError, KeyError):
    pass


class ShapeError(DedupError, ValueError):
    pass


class InputError(DedupError, ValueError):
    pass


class TrainingError(DedupError, ValueError):
    pass


class SchemaMismatchError(DedupError):
    pass


class FormatError(DedupError):
    pass


class EmptyInputError(DedupError, ValueError):
    pass


class DegenerateError(DedupError, ValueError):
    pass


class ImbalanceWarning(UserWarning):
    """Raised as a warning when a requested class ratio cannot be met."""
