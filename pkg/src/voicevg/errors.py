"""Exception hierarchy.

Every error raised on bad input derives from :class:`VoiceVGError`; the CLI
maps :class:`ConfigError` subclasses to exit code 1 and :class:`DataError`
subclasses to exit code 2.
"""


class VoiceVGError(Exception):
    pass


class ConfigError(VoiceVGError, ValueError):
    """Invalid parameters or usage."""


class DataError(VoiceVGError, ValueError):
    """Input data that cannot be processed."""


# signal_core
class MalformedWav(DataError):
    pass


class UnsupportedEncoding(DataError):
    pass


class WindowTooLong(DataError):
    pass


class TooShort(DataError):
    pass


class ClipTooShort(DataError):
    pass


class NoPeaks(DataError):
    pass


# visibility_graph
class NonIncreasingTime(DataError):
    pass


# graph_features
class Disconnected(DataError):
    pass


class TooSmall(DataError):
    pass


# audio_features
class BadFftSize(ConfigError):
    pass


class BadBand(ConfigError):
    pass


class Empty(DataError):
    pass


class WrongColumnCount(DataError):
    pass


class NonNumericCell(DataError):
    pass


class DuplicateId(DataError):
    pass


# learn
class EmptyData(DataError):
    pass


class SingleClass(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class EmptyScores(DataError):
    pass


class BadC(ConfigError):
    pass


class MissingScore(DataError):
    pass


class UntrainedFusion(ConfigError):
    pass


class LengthMismatch(DataError):
    pass


class DegenerateTruth(DataError):
    pass


# pipeline
class ManifestInvalid(ConfigError):
    pass


class ModelMissing(ConfigError):
    pass


class FamilyMismatch(DataError):
    pass
