"""Integer femtosecond time base.

All simulated time is a plain ``int`` counting femtoseconds.  Python ints do
not overflow, so the 64-bit range is enforced explicitly with
:func:`check_time` wherever times enter the model.
"""

import re
from decimal import Decimal, InvalidOperation
from fractions import Fraction

from .errors import NonPositiveClock, TimeOverflow

SimTime = int

FS = 1
PS = 1_000
NS = 1_000_000
US = 1_000_000_000
MS = 1_000_000_000_000
S = 1_000_000_000_000_000

UNITS = {"fs": FS, "ps": PS, "ns": NS, "us": US, "ms": MS, "s": S}

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

_TIME_RE = re.compile(r"^\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)\s*(fs|ps|ns|us|ms|s)\s*$")


def check_time(t: int, what: str = "time") -> int:
    if isinstance(t, bool) or not isinstance(t, int):
        raise TypeError(f"{what} must be an integer number of fs, got {t!r}")
    if not INT64_MIN <= t <= INT64_MAX:
        raise TimeOverflow(f"{what}={t} fs is outside the signed 64-bit range")
    return t


def parse_time(text) -> int:
    """Parse ``"1.25ns"``, ``"62.5ps"``, ``"15625fs"`` into exact femtoseconds.

    A value that does not land on a whole femtosecond is rejected rather than
    rounded.
    """
    if isinstance(text, int) and not isinstance(text, bool):
        raise ValueError(f"time {text!r} needs an explicit unit suffix (fs, ps, ns, us, ms, s)")
    m = _TIME_RE.match(str(text))
    if not m:
        raise ValueError(f"cannot parse time {text!r}; expected e.g. '1.25ns', '62.5ps', '15625fs'")
    try:
        value = Decimal(m.group(1)) * UNITS[m.group(2)]
    except InvalidOperation as exc:
        raise ValueError(f"cannot parse time {text!r}") from exc
    if value != value.to_integral_value():
        raise ValueError(f"time {text!r} is not an integer number of femtoseconds")
    return check_time(int(value))


def format_time(t) -> str:
    """Render a femtosecond count with the largest unit that keeps it exact."""
    t = Fraction(t)
    for unit in ("s", "ms", "us", "ns", "ps"):
        q = t / UNITS[unit]
        if q.denominator == 1 and q != 0:
            return f"{q.numerator}{unit}"
    if t.denominator == 1:
        return f"{t.numerator}fs"
    return f"{float(t)}fs"


def ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def round_half_up(x: Fraction) -> int:
    return (x.numerator * 2 + x.denominator) // (2 * x.denominator)


def period_from_frequency(f_hz) -> int:
    """Clock period in fs, ``round(1e15 / f)``, computed exactly."""
    f = Fraction(str(f_hz)) if isinstance(f_hz, float) else Fraction(f_hz)
    if f <= 0:
        raise NonPositiveClock(f"clock frequency must be positive, got {f_hz!r}")
    return round_half_up(Fraction(S) / f)
