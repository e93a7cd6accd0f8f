"""Exception hierarchy shared by every layer of the simulator."""


class SanisimError(Exception):
    """Base class for all simulator errors."""


# device physics
class InvalidGeometry(SanisimError, ValueError):
    pass


class IndexOutOfRange(SanisimError, IndexError):
    pass


class BlockRetired(SanisimError):
    pass


class NopExceeded(SanisimError):
    pass


class NoReachableLevel(SanisimError):
    pass


class RegionOutOfBounds(SanisimError, IndexError):
    pass


# codec
class NotPrimitive(SanisimError, ValueError):
    pass


class CapacityExceeded(SanisimError, ValueError):
    pass


class LengthMismatch(SanisimError, ValueError):
    pass


class MaskInfeasible(SanisimError):
    pass


# translation layer
class DeviceFull(SanisimError):
    pass


class Unmapped(SanisimError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ReadFail(SanisimError):
    """Page stayed uncorrectable after every recovery re-read."""


class NoVictim(SanisimError):
    pass


# sanitization
class PulseBudgetExhausted(SanisimError):
    pass


class MaskInfeasibleAndFallbackFailed(SanisimError):
    pass


class UnsupportedGeometry(SanisimError):
    pass


# front end
class ParseError(SanisimError, ValueError):
    def __init__(self, line: int, token: str, message: str = "unexpected token"):
        self.line = line
        self.token = token
        super().__init__(f"line {line}: {message}: {token!r}")


class ConfigError(SanisimError, ValueError):
    pass
