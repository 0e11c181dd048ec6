"""Exception hierarchy.

Two broad families matter to callers (and to the CLI exit codes): bad input
data and numerical failures.  Everything raised by this package derives from
:class:`ScorekitError`.
"""


class ScorekitError(Exception):
    """Base class for all errors raised by scorekit."""


class DataError(ScorekitError):
    """Malformed, inconsistent or missing input data (CLI exit code 2)."""


class NumericalError(ScorekitError):
    """A computation cannot proceed or did not converge (CLI exit code 3)."""


# --- parsing ---------------------------------------------------------------


class ParseError(DataError):
    """Positioned error in a text input; ``line_no`` is 1-based."""

    def __init__(self, message, line_no=None, path=None):
        self.line_no = line_no
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line_no is not None:
            where += f"{line_no}: "
        elif where:
            where += " "
        super().__init__(where + message)


class MalformedLine(ParseError):
    pass


class UnknownSourceType(ParseError):
    pass


class BadLabel(ParseError):
    pass


class DuplicateSegment(DataError):
    pass


class DuplicateTrial(DataError):
    pass


class MissingMeta(DataError):
    """A trial references a segment id absent from the metadata table."""


# --- embeddings ------------------------------------------------------------


class ZeroVector(DataError):
    """A vector with zero norm where a direction is required."""


class DimMismatch(DataError):
    pass


class ClassMismatch(DataError):
    """Logit sets with different class label sequences cannot be fused."""


class IdMismatch(DataError):
    pass


class BadWeights(DataError):
    pass


class BadIndex(DataError):
    pass


class EmptyPool(DataError):
    pass


class MissingEmbedding(DataError):
    """A trial references an id absent from an embedding set."""


class BadMagic(DataError):
    """Binary embedding file does not start with the expected magic."""


class TruncatedFile(DataError):
    pass


# --- scoring / aggregation -------------------------------------------------


class NoFrames(DataError):
    pass


class AllFramesUnrecognizable(DataError):
    """Every test frame fell below the recognizability threshold (WATE)."""


# --- normalization ---------------------------------------------------------


class CohortTooSmall(DataError):
    pass


class DegenerateCohort(NumericalError):
    """Top-n cohort statistics have zero standard deviation for a trial."""


class MissingChannelPair(DataError):
    pass


class MissingPairStats(DataError):
    pass


class DegenerateSigma(NumericalError):
    """Channel statistics with sigma == 0 cannot be applied."""


# --- metrics / calibration -------------------------------------------------


class OneClassOnly(DataError):
    """Both target and nontarget trials are required."""


class NoConvergence(NumericalError):
    def __init__(self, message, iterations=None):
        self.iterations = iterations
        super().__init__(message)
