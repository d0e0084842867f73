class CertifierError(Exception):
    """Base class for every error raised by reset-delay-certifier."""


class ModelConstructionError(CertifierError, ValueError):
    pass


class LegendreDomainError(CertifierError, ValueError):
    pass


class QueryError(CertifierError, ValueError):
    pass


class AssemblyError(CertifierError, ValueError):
    pass


class ConfigError(CertifierError, ValueError):
    def __init__(self, message, messages=None):
        super().__init__(message)
        self.messages = messages or {}


class DecayEstimationError(CertifierError, ValueError):
    pass


class SearchError(CertifierError):
    pass
