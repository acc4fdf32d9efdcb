"""
Terminal progress display for long audit runs.
"""
import sys
from typing import Optional, TextIO


def display_progress(
    current: int,
    total: int,
    message: str = "",
    width: int = 50,
    stream: Optional[TextIO] = None,
) -> None:
    """
    Display a simple progress bar.

    Written to stderr by default so that reports on stdout stay byte-stable.

    Args:
        current: Current progress value
        total: Total value for 100% completion
        message: Optional message to display with the progress bar
        width: Width of the progress bar in characters
        stream: Output stream (stderr if None)
    """
    stream = stream if stream is not None else sys.stderr
    progress = min(1.0, current / total if total > 0 else 1.0)
    filled_width = int(width * progress)
    bar = '#' * filled_width + '-' * (width - filled_width)
    percent = progress * 100

    stream.write(f"\r{message} [{bar}] {percent:.1f}% ({current}/{total})")
    stream.flush()

    if current >= total:
        stream.write('\n')
