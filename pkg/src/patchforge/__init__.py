"""
patchforge - adversarial patch training and practical evaluation for person
detectors.

- Localization-confidence suppression loss and its score-only baselines
- Probabilistic scale-preserving padding of training images
- PASR next to mAP and ASR, plus the longest undetected streak for video
- A seeded differentiable toy detector for end-to-end checks
"""

__version__ = "1.0.0"

# Trigger detector auto-registration on import
from patchforge import detectors  # noqa: F401

__all__ = [
    "cli",
    "core",
    "dataset",
    "detectors",
    "services",
    "utils",
]
