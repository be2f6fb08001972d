class RankingToolkitError(Exception):
    """Base class for every error raised by the toolkit"""


class ConfigError(RankingToolkitError):
    """Invalid or inconsistent run configuration"""


# Oracle side

class OracleError(RankingToolkitError):
    """Anything that stops an oracle from answering a batch"""

    partial_state = None


class OracleUnavailable(OracleError):
    """The oracle could not be reached"""


class TransportError(OracleUnavailable):
    """Network failure that survived the retry policy"""


class InconsistentOracle(OracleError):
    """An answer contradicts an earlier answer"""


class QuotaExhausted(OracleError):
    """The engine's daily query budget is used up"""


class MalformedResponse(OracleError):
    """The engine answered with something that is not a ranking"""


class CacheMiss(OracleError):
    """Replay-only oracle was asked for a batch it never recorded"""


class QueryTooLarge(OracleError):
    """Built query breaks the dialect's byte or term limit"""


class HostOnlyCollision(OracleError):
    """Distinct URLs collapse to one host under a host-only dialect"""

    def __init__(self, message, urls=()):
        super().__init__(message)
        self.urls = tuple(urls)


class UnknownItem(OracleError):
    """A simulated oracle was asked about an item it has no score for"""


# Input data

class DataError(RankingToolkitError):
    """Bad input files"""


class ParseError(DataError):
    """File could not be parsed"""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateRank(ParseError):
    """Two rows share a rank"""


class MissingUrl(ParseError):
    """Row without a URL"""


class MissingRanking(DataError):
    """A ranking file needed for a correlation is absent"""


# Statistics

class StatsError(RankingToolkitError, ValueError):
    """Input outside what a statistic is defined for"""


class TooFewItems(StatsError):
    pass


class TiesPresent(StatsError):
    pass


class ParityViolation(StatsError):
    pass


class NOutOfRange(StatsError):
    pass
