"""Single-line training progress for interactive terminals."""

import os
import sys
import time
from typing import Optional

from ..core.types import EpochLog
from .colors import Colors


class TrainingProgress:
    """
    Context manager that redraws ``epoch i/M  loss=...  lr=...`` in place.

    Silent when stdout is not a TTY. With SCREEN_READER=1 it prints a plain
    line every few seconds instead of redrawing.
    """

    def __init__(self, total_epochs: int, enabled: Optional[bool] = None):
        self.total = total_epochs
        self.enabled = sys.stdout.isatty() if enabled is None else enabled
        self.screen_reader_mode = os.environ.get("SCREEN_READER") == "1"
        self.start_time = 0.0
        self._last_print = 0.0

    def update(self, entry: EpochLog) -> None:
        if not self.enabled:
            return
        now = time.time()
        elapsed = int(now - self.start_time)
        text = f"epoch {entry.epoch}/{self.total}  loss={entry.total_loss:.5f}  lr={entry.learning_rate:.3g}  ({elapsed}s)"
        if self.screen_reader_mode:
            if now - self._last_print >= 3 or entry.epoch == self.total:
                print(text)
                self._last_print = now
            return
        sys.stdout.write(f"\r  {Colors.CYAN}▸{Colors.ENDC} {text}\033[K")
        sys.stdout.flush()

    def __enter__(self) -> "TrainingProgress":
        self.start_time = time.time()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.enabled and not self.screen_reader_mode:
            sys.stdout.write(f"\r{' ' * 80}\r")
            sys.stdout.flush()
