"""ANSI color constants; disabled by NO_COLOR or when stdout is not a terminal."""

import os


def color_enabled() -> bool:
    return not os.environ.get("NO_COLOR") and os.isatty(1)


class Colors:
    _on = color_enabled()

    BLUE = "\033[94m" if _on else ""
    CYAN = "\033[96m" if _on else ""
    GREEN = "\033[92m" if _on else ""
    YELLOW = "\033[93m" if _on else ""
    RED = "\033[91m" if _on else ""
    BOLD = "\033[1m" if _on else ""
    ENDC = "\033[0m" if _on else ""
