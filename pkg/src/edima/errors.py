"""Exception hierarchy shared by all edima modules."""


class EdimaError(Exception):
    """Base class for every error raised by this package."""


# pcap reader/writer

class BadMagic(EdimaError):
    """First 4 bytes are not a recognized classic-pcap magic in either byte order."""


class TruncatedHeader(EdimaError):
    """File is shorter than the 24-byte global header."""


class UnsupportedLinkType(EdimaError):
    """Capture link type is not Ethernet."""


class UnsortedInput(EdimaError):
    """Packet timestamps decrease where an ordered stream is required."""


# sessionizer

class InvalidProbability(EdimaError):
    """Sampling probability outside [0, 1]."""


# ml

class EmptyDataset(EdimaError):
    pass


class SingleClassDataset(EdimaError):
    """Training data contains only one of the two classes."""


class InvalidHyperparams(EdimaError):
    pass


class CategoryMismatch(EdimaError):
    """Model and input belong to different malware categories."""


class LengthMismatch(EdimaError):
    pass


class EmptyInput(EdimaError):
    pass


class ModelFormatError(EdimaError):
    """Serialized model fails schema or invariant validation."""


# feature database

class DuplicateId(EdimaError):
    def __init__(self, record_id: str):
        super().__init__(f"duplicate record id: {record_id!r}")
        self.record_id = record_id


class MalformedRow(EdimaError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"malformed row at line {line_no}: {reason}")
        self.line_no = line_no


# constructor

class TooFewRows(EdimaError):
    pass


# policy

class InvalidRule(EdimaError):
    """Rules file entry fails validation."""


# synthesizer

class InvalidProfile(EdimaError):
    pass
