"""Number rendering shared by the file formats and the reports.

Canonical rule for file formats: at most 6 fractional digits, trailing
zeros trimmed, no trailing dot. Report tables use fixed precision per
column (percentages at 1 or 2 decimals, metrics at 3).
"""

from __future__ import annotations


def canonical_number(value: float | int) -> str:
    """Render a number in the canonical wire form ("10", "0.5", "0.123457")."""
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers in the wire formats")
    if isinstance(value, int):
        return str(value)
    text = f"{value:.6f}".rstrip("0").rstrip(".")
    if text in ("", "-0"):
        return "0"
    return text


def percent(ratio: float, decimals: int) -> str:
    """Render a [0, 1] ratio as a percentage string, e.g. 0.765394 -> '76.5%'."""
    return f"{ratio * 100:.{decimals}f}%"


def metric(value: float | None, decimals: int = 3) -> str:
    """Render a metric at fixed precision; undefined values render empty."""
    if value is None:
        return ""
    return f"{value:.{decimals}f}"
