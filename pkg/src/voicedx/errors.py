"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: DataError -> 3, NumericError -> 4.
"""


class VoiceDxError(Exception):
    """Base class for all pipeline errors."""


class DataError(VoiceDxError):
    """Bad or inconsistent input data (files, manifests, labels, shapes of corpora)."""


class NumericError(VoiceDxError):
    """Numerical failure: NaN/Inf encountered where finite values are required."""


# --- corpus ---------------------------------------------------------------

class MalformedWav(DataError):
    pass


class UnsupportedChannels(DataError):
    pass


class UnsupportedEncoding(DataError):
    pass


class UnsupportedSampleRate(DataError):
    pass


class TruncatedData(DataError):
    pass


class DuplicatePath(DataError):
    pass


class UnknownLabel(DataError):
    pass


class MissingField(DataError):
    pass


class InsufficientSpeakers(DataError):
    pass


class InconsistentSpeakerLabel(DataError):
    pass


# --- vad / features -------------------------------------------------------

class InputTooShort(DataError):
    """Signal shorter than one analysis frame."""


class NoSpeechDetected(DataError):
    """VAD rejected every frame of the utterance."""


# --- training / evaluation ------------------------------------------------

class UnlabeledSequence(DataError):
    pass


class SingleClassData(DataError):
    pass


class EmptyTestSet(DataError):
    pass


class UarUndefined(DataError):
    """A class is absent from the truth rows, so UAR over all classes is undefined."""


class DegenerateData(DataError):
    """Too few samples or dimensions for the requested decomposition."""
