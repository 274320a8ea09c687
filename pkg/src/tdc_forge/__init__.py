"""Event-driven model of a delay-line time-to-digital converter with
coarse/fine interpolation, characterization tools and VHDL emission."""

from .dtdc import ConversionResult, TdcConfig, convert, effective_lsb
from .errors import (
    CombinationalCycle,
    IndexOutOfRange,
    InvalidConfig,
    InvalidIdentifier,
    NetlistError,
    NonPositiveClock,
    NonPositiveInterval,
    NotSynchronous,
    RangeExceeded,
    SchedulingInPast,
    TdcError,
    TimeOverflow,
    UnknownNet,
)
from .fine import FineTdcConfig
from .timebase import FS, MS, NS, PS, S, US, format_time, parse_time
from .tpg import TpgOutput, tpg_decompose

__version__ = "0.1.0"
