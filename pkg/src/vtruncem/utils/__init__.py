"""
Utility modules for vtruncem

- Reporter: CSV output for reports and paths
- SafeConsole: rich console with ASCII fallbacks
"""

from .console_helper import SafeConsole, make_text_safe
from .reporter import Reporter, format_value

__all__ = [
    "Reporter",
    "SafeConsole",
    "format_value",
    "make_text_safe",
]
