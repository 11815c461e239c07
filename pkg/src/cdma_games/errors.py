"""Exception hierarchy shared by every module of the package."""


class CdmaGameError(Exception):
    """Base class for all errors raised by this package."""


# model
class DimensionMismatch(CdmaGameError, ValueError):
    pass


class NonUnitCode(CdmaGameError, ValueError):
    pass


class NonPositiveGain(CdmaGameError, ValueError):
    pass


class EmptyUserSet(CdmaGameError, ValueError):
    pass


# numerics
class NotSymmetric(CdmaGameError, ValueError):
    pass


class NotPositiveDefinite(CdmaGameError, ArithmeticError):
    pass


class NoConvergence(CdmaGameError, ArithmeticError):
    pass


class NoSignChange(CdmaGameError, ValueError):
    pass


class BracketNotFound(CdmaGameError, ArithmeticError):
    pass


# utility function
class NoPositiveRoot(CdmaGameError, ValueError):
    pass


class ZeroPower(CdmaGameError, ValueError):
    pass


# receivers / code optimization
class ZeroFilter(CdmaGameError, ArithmeticError):
    pass


class ZeroProjection(CdmaGameError, ArithmeticError):
    pass


# equilibrium
class ZeroSinr(CdmaGameError, ArithmeticError):
    """A user transmits with positive power but its SINR is zero."""


class NotConverged(CdmaGameError, RuntimeError):
    pass


class DeviationImproves(CdmaGameError, AssertionError):
    pass


class MultipleEquilibria(CdmaGameError, AssertionError):
    pass


# monte carlo / cli
class EmptyCell(CdmaGameError, ValueError):
    pass


class ParseError(CdmaGameError, ValueError):
    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.key = key


class UnknownKey(ParseError):
    pass


class InvalidValue(ParseError):
    pass
