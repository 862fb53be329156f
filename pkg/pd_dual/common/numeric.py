from fractions import Fraction
from functools import reduce
from math import factorial
from typing import Iterable, Union

Number = Union[int, float, Fraction]


def rising(a: Number, k: int) -> Number:
    """
    Rising factorial a_(k) = a(a+1)...(a+k-1), with a_(0) = 1.
    """
    result = 1
    for i in range(k):
        result *= a + i
    return result


def falling(a: Number, k: int) -> Number:
    """
    Falling factorial a_[k] = a(a-1)...(a-k+1), with a_[0] = 1.
    """
    result = 1
    for i in range(k):
        result *= a - i
    return result


def multinomial(parts: Iterable[int]) -> int:
    """
    Multinomial coefficient (sum parts)! / prod(part!).
    """
    parts = list(parts)
    return factorial(sum(parts)) // reduce(lambda acc, p: acc * factorial(p), parts, 1)


def to_number(value: Union[str, Number]) -> Number:
    """
    Parse a user supplied number. Strings and integers become exact `Fraction`s
    ("0.5" -> 1/2, "1/3" -> 1/3), floats are kept as floats.
    """
    if isinstance(value, bool):
        raise TypeError("Booleans are not numbers here")
    if isinstance(value, (Fraction, float)):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"Cannot interpret {value!r} as a number")


def is_exact(*values: Number) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


def format_rational(value: Number) -> str:
    """
    Serialise a number without precision loss: rationals as "p/q", floats with
    `repr`.
    """
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, int):
        return f"{value}/1"
    return repr(float(value))


def parse_rational(text: str) -> Fraction:
    return Fraction(text)
