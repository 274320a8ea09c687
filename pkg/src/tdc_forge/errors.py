"""Exception hierarchy shared by every part of the converter model."""


class TdcError(Exception):
    """Base class for all errors raised by tdc_forge."""


class TimeOverflow(TdcError, OverflowError):
    pass


class SchedulingInPast(TdcError):
    pass


class UnknownNet(TdcError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NetlistError(TdcError):
    """Malformed netlist: multiple drivers, dangling inputs, duplicate names."""


class CombinationalCycle(NetlistError):
    pass


class IndexOutOfRange(TdcError, IndexError):
    pass


class NonPositiveInterval(TdcError, ValueError):
    pass


class NonPositiveClock(TdcError, ValueError):
    pass


class NotSynchronous(TdcError):
    """Coarse-counter input violates the clock-synchronous contract."""


class RangeExceeded(TdcError):
    """Interval does not fit the coarse counter."""


class InvalidConfig(TdcError, ValueError):
    pass


class InvalidIdentifier(TdcError, ValueError):
    pass
