"""
Dataset manifest: the image list of a dataset directory.

A dataset is a directory of PNG/JPEG files, scanned recursively in sorted
order. Image ids are POSIX paths relative to the root. The scan is persisted
as <root>/manifest.json and reused while the file list is unchanged.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from PIL import Image, UnidentifiedImageError

from ..core.errors import InputError
from ..core.patching import load_rgb
from ..core.types import BBox, ImageGrid
from ..utils.filesystem import atomic_write_text

logger = logging.getLogger("patchforge")

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1


@dataclass
class ImageEntry:
    id: str
    file: str
    height: int
    width: int
    gt_boxes: Optional[List[BBox]] = None

    @property
    def extent(self):
        return self.height, self.width


@dataclass
class DatasetManifest:
    root: Path
    entries: List[ImageEntry] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.root.name

    def __len__(self) -> int:
        return len(self.entries)

    def path_of(self, entry: ImageEntry) -> Path:
        return self.root / entry.file

    def load_image(self, entry: ImageEntry) -> ImageGrid:
        return ImageGrid(load_rgb(self.path_of(entry)), entry.id)

    def with_entries(self, entries: List[ImageEntry], skipped: Optional[List[str]] = None) -> "DatasetManifest":
        return replace(self, entries=entries, skipped=list(self.skipped if skipped is None else skipped))

    def gts(self) -> Dict[str, List[BBox]]:
        return {e.id: list(e.gt_boxes or []) for e in self.entries}


def _image_files(root: Path) -> List[Path]:
    return sorted(
        (p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES and ".cache" not in p.parts),
        key=lambda p: p.relative_to(root).as_posix(),
    )


def scan_dataset(root: Union[str, Path]) -> DatasetManifest:
    root = Path(root)
    if not root.is_dir():
        raise InputError(f"dataset directory not found: {root}")

    manifest = DatasetManifest(root=root)
    for path in _image_files(root):
        rel = path.relative_to(root).as_posix()
        try:
            with Image.open(path) as img:
                width, height = img.size
        except (OSError, UnidentifiedImageError) as e:
            logger.warning("skipping unreadable image %s: %s", rel, e)
            manifest.skipped.append(rel)
            continue
        manifest.entries.append(ImageEntry(id=rel, file=rel, height=height, width=width))
    return manifest


def _to_json(manifest: DatasetManifest) -> Dict[str, Any]:
    return {
        "version": MANIFEST_VERSION,
        "images": [{"id": e.id, "file": e.file, "height": e.height, "width": e.width} for e in manifest.entries],
        "skipped": manifest.skipped,
    }


def save_manifest(manifest: DatasetManifest) -> Optional[Path]:
    """Persist next to the images; a read-only dataset is not an error."""
    try:
        return atomic_write_text(manifest.root / MANIFEST_NAME, json.dumps(_to_json(manifest), indent=2) + "\n")
    except OSError as e:
        logger.warning("could not write %s: %s", manifest.root / MANIFEST_NAME, e)
        return None


def _load_saved(root: Path) -> Optional[DatasetManifest]:
    path = root / MANIFEST_NAME
    if not path.exists():
        return None
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("version") != MANIFEST_VERSION:
            return None
        entries = [ImageEntry(id=i["id"], file=i["file"], height=int(i["height"]), width=int(i["width"])) for i in data["images"]]
        return DatasetManifest(root=root, entries=entries, skipped=list(data.get("skipped", [])))
    except (OSError, ValueError, KeyError, TypeError) as e:
        logger.debug("ignoring unreadable %s: %s", path, e)
        return None


def open_dataset(root: Union[str, Path], rescan: bool = False) -> DatasetManifest:
    """Saved manifest when it still lists exactly the files on disk, else a fresh scan."""
    root = Path(root)
    if not root.is_dir():
        raise InputError(f"dataset directory not found: {root}")
    if not rescan:
        saved = _load_saved(root)
        if saved is not None:
            on_disk = [p.relative_to(root).as_posix() for p in _image_files(root)]
            if on_disk == sorted([e.file for e in saved.entries] + saved.skipped):
                return saved
    manifest = scan_dataset(root)
    save_manifest(manifest)
    logger.debug("scanned %s: %d images, %d unreadable", root, len(manifest.entries), len(manifest.skipped))
    return manifest
