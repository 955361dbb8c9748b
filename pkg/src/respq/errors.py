"""Exception types raised by the respq library.

Every error raised on a contract violation derives from RespqError so CLI
entry points can catch one base class and emit a single machine-parsable
line.
"""


class RespqError(Exception):
    """Base class for all respq errors."""


# signal handling
class NonPositiveRate(RespqError):
    pass


class EmptySignal(RespqError):
    pass


class BandOutOfRange(RespqError):
    pass


class SignalTooShort(RespqError):
    pass


class SignalShorterThanWindow(RespqError):
    pass


# spectral estimation
class SegmentTooShort(RespqError):
    pass


class DegenerateAutocorrelation(RespqError):
    pass


class EigenFailure(RespqError):
    pass


class SubsegmentTooLong(RespqError):
    pass


class EmptyBand(RespqError):
    pass


class InsufficientPeaks(RespqError):
    pass


# quality metrics
class ZeroVarianceSegment(RespqError):
    pass


class WrongStage(RespqError):
    pass


class EmptyPopulation(RespqError):
    pass


# composite scoring / subset search
class EmptyMask(RespqError):
    pass


class NoValidCandidates(RespqError):
    pass


class InsufficientData(RespqError):
    pass


class ArityMismatch(RespqError):
    pass


# learned predictors
class TooFewSamples(RespqError):
    pass


class NonFiniteLoss(RespqError):
    pass


class ShapeMismatch(RespqError):
    pass


class LabelOutOfRange(RespqError):
    pass


# pipeline
class GridMismatch(RespqError):
    pass


class MissingModel(RespqError):
    pass


class MissingMask(RespqError):
    pass


class FractionOutOfRange(RespqError):
    pass


class EmptySeries(RespqError):
    pass


# synthetic benchmarks
class ProfileOutOfBand(RespqError):
    pass


# file I/O and CLI
class MissingInput(RespqError):
    pass


class ParseError(RespqError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConfigError(RespqError):
    def __init__(self, key: str, message: str):
        super().__init__(f"key {key!r}: {message}")
        self.key = key
