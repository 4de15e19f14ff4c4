"""Exception hierarchy shared by every module."""


class EivError(Exception):
    """Base class for all errors raised by eivreg."""


class InputError(EivError, ValueError):
    pass


class NotPositiveDefiniteError(EivError):
    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class IllConditionedError(EivError):
    def __init__(self, message, ratio=None):
        super().__init__(message)
        self.ratio = ratio


class DegenerateFitError(EivError):
    pass


class DegenerateInferenceError(EivError):
    pass


class ModelInfeasibleError(EivError):
    pass


class CertificateInapplicableError(EivError):
    pass


class InfeasibleDesignError(EivError):
    pass


class ConfigError(EivError):
    pass
