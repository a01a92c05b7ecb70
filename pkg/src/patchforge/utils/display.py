"""Display / print helpers."""

import sys
from typing import Optional, Sequence

from .colors import Colors


def print_header(text: str) -> None:
    print(f"\n{Colors.BOLD}{text}{Colors.ENDC}")


def print_success(text: str) -> None:
    print(f"  {Colors.GREEN}✓{Colors.ENDC} {text}")


def print_info(text: str) -> None:
    print(f"  {Colors.BLUE}ℹ{Colors.ENDC} {text}")


def print_warning(text: str) -> None:
    print(f"  {Colors.YELLOW}!{Colors.ENDC} {text}", file=sys.stderr)


def print_error(text: str, suggestion: Optional[str] = None) -> None:
    """Error on stderr with an optional actionable suggestion."""
    print(f"  {Colors.RED}✗{Colors.ENDC} {text}", file=sys.stderr)
    if suggestion:
        print(f"    {Colors.YELLOW}→{Colors.ENDC} {suggestion}", file=sys.stderr)


def print_table(header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    cells = [[str(h) for h in header]] + [[_cell(v) for v in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    for n, row in enumerate(cells):
        line = "  ".join(value.ljust(width) for value, width in zip(row, widths))
        print(f"  {Colors.BOLD}{line}{Colors.ENDC}" if n == 0 else f"  {line}")


def _cell(value: object) -> str:
    return f"{value:.4f}" if isinstance(value, float) else str(value)
