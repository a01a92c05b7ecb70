"""Terminal output and filesystem helpers."""

from .colors import Colors
from .display import print_error, print_header, print_info, print_success, print_table, print_warning
from .filesystem import atomic_write_bytes, atomic_write_text, ensure_dir
from .progress import TrainingProgress

__all__ = [
    "Colors",
    "print_error",
    "print_header",
    "print_info",
    "print_success",
    "print_table",
    "print_warning",
    "atomic_write_bytes",
    "atomic_write_text",
    "ensure_dir",
    "TrainingProgress",
]
