"""
Decoder Errors
Exception hierarchy shared by the decoding, windowing and scheduling modules
"""


class DecodingError(Exception):
    """Base class for all errors raised by the decoding library"""


class ParameterError(DecodingError, ValueError):
    """Invalid numeric parameter (probability, distance, window size)"""


class IntegrityError(DecodingError):
    """Data does not belong to the graph it is used with, or validity was lost"""


class ContractViolation(DecodingError):
    """A caller broke a precondition (defect outside window, missing dependency)"""


class SizeLimitError(DecodingError):
    """Problem instance too large for an exhaustive method"""


class PipelineError(DecodingError):
    """A worker failed or the pipeline could not make progress"""


class ColoringError(DecodingError):
    """Invalid region partition or decode order"""


class ConfigError(DecodingError):
    """Config file could not be read or validated"""
