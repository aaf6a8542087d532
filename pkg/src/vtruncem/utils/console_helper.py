"""
ASCII fallbacks for the math symbols used in reports

Validation summaries and tables use ℒ, Δ, φ, ≤ and friends. On a
terminal whose encoding cannot represent them, ``SafeConsole`` spells
them out instead of letting Rich raise or print replacement characters.
"""

import sys
from typing import Optional, TextIO

from rich.console import Console as RichConsole

# longest keys first so "⁻¹" wins over a bare "¹"
ASCII_SPELLINGS = {
    "⁻¹": "^-1",
    "ℒ": "L",
    "Δ": "dt",
    "ρ": "rho",
    "θ": "theta",
    "φ": "phi",
    "μ": "mu",
    "λ": "lambda",
    "δ": "delta",
    "∇": "grad ",
    "≤": "<=",
    "≥": ">=",
    "−": "-",
    "√": "sqrt",
    "∨": " v ",
    "∧": " ^ ",
    "∞": "inf",
    "²": "^2",
    "³": "^3",
    "✓": "ok",
    "✗": "FAIL",
}


def can_encode(text: str, encoding: Optional[str]) -> bool:
    if not encoding:
        return False
    try:
        text.encode(encoding)
    except (UnicodeEncodeError, LookupError):
        return False
    return True


def is_unicode_supported(stream: Optional[TextIO] = None) -> bool:
    """True when the stream's encoding can show every report symbol."""
    stream = stream if stream is not None else sys.stdout
    return can_encode("".join(ASCII_SPELLINGS), getattr(stream, "encoding", None))


def make_text_safe(text: str, encoding: Optional[str] = "ascii") -> str:
    """Replace every symbol the encoding cannot represent with its ASCII spelling."""
    for symbol, spelling in ASCII_SPELLINGS.items():
        if symbol in text and not can_encode(symbol, encoding):
            text = text.replace(symbol, spelling)
    return text


class SafeConsole:
    """Rich console wrapper that spells out math symbols on ASCII terminals"""

    def __init__(self, console: Optional[RichConsole] = None, unicode_supported: Optional[bool] = None):
        self._console = console if console is not None else RichConsole()
        self.unicode_supported = is_unicode_supported() if unicode_supported is None else unicode_supported

    @property
    def rich(self) -> RichConsole:
        return self._console

    def print(self, *args, **kwargs):
        if args and isinstance(args[0], str) and not self.unicode_supported:
            args = (make_text_safe(args[0]),) + args[1:]
        self._console.print(*args, **kwargs)
