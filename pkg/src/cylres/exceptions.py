"""Error types shared across the package."""


class CylresError(Exception):
    pass


class CatalogError(CylresError, ValueError):
    pass


class H1Violation(CylresError):
    pass


class RamificationPoint(CylresError, ValueError):
    pass


class CutError(CylresError, ValueError):
    """Point is not on a cut segment, or the side flag is inconsistent."""


class PreconditionViolated(CylresError, ValueError):
    pass


class TailBoundExceeded(CylresError):
    pass


class ContourTooClose(CylresError):
    pass


class NonIntegerWinding(CylresError):
    pass


class BudgetExceeded(CylresError):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class IllConditioned(CylresError):
    def __init__(self, msg, cond=None):
        super().__init__(msg)
        self.cond = cond


class DisagreementWithResolvent(CylresError):
    pass


class IndeterminateOrder(CylresError):
    pass


class IdenticallySingular(CylresError):
    pass


class QuadratureError(CylresError):
    pass


class ConfigError(CylresError, ValueError):
    pass
