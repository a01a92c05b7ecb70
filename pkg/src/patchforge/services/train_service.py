"""
Patch training loop.

Each epoch walks the filtered dataset in seeded mini-batches. Per image:
optional scale-preserving padding (ground truth shifted by the same
offset), patch pasted on every ground-truth person, detector forward pass
and the configured attack term against the largest person box. The batch
mean plus the weighted TV penalty is minimized with Adam; a plateau
schedule halves the learning rate, and pixels are clamped to [0, 1] after
every step.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
import torch

from patchforge.core.config import AttackConfig
from patchforge.core.detector import BaseDetector, LossSpec, adversarial_term, require_differentiable
from patchforge.core.errors import EmptyDatasetError, InputError, TrainingDivergedError
from patchforge.core.losses import batch_mean, largest_gt_box, total_loss, tv_loss
from patchforge.core.patching import apply_cutout, init_patch, plan_placements, pspp
from patchforge.core.types import EpochLog, ImageGrid, Patch
from patchforge.dataset.manifest import DatasetManifest, ImageEntry

logger = logging.getLogger("patchforge")


@dataclass
class TrainingResult:
    patch: Patch
    log: List[EpochLog] = field(default_factory=list)


def _check_filtered(manifest: DatasetManifest) -> None:
    if not manifest.entries:
        raise EmptyDatasetError(
            f"no training images in {manifest.root}: the detector finds no person in any of them"
        )
    unfiltered = [e.id for e in manifest.entries if not e.gt_boxes]
    if unfiltered:
        raise InputError(f"{len(unfiltered)} images have no ground truth; filter the dataset first ({unfiltered[0]}, ...)")


def _batches(entries: List[ImageEntry], size: int, rng: np.random.Generator) -> List[List[ImageEntry]]:
    order = rng.permutation(len(entries))
    shuffled = [entries[i] for i in order]
    return [shuffled[i : i + size] for i in range(0, len(shuffled), size)]


def train_patch(
    config: AttackConfig,
    detector: BaseDetector,
    manifest: DatasetManifest,
    initial: Optional[Patch] = None,
    on_epoch: Optional[Callable[[EpochLog], None]] = None,
) -> TrainingResult:
    config.validate()
    require_differentiable(detector)
    _check_filtered(manifest)

    start = initial if initial is not None else init_patch(config.patch_side, config.patch_init, config.rng("init"))
    if config.epochs == 0:
        return TrainingResult(Patch(start.pixels.detach().clone()))

    images: Dict[str, ImageGrid] = {e.id: manifest.load_image(e) for e in manifest.entries}
    pspp_rng = config.rng("pspp")
    batch_rng = config.rng("batch")
    cutout_rng = config.rng("cutout")
    spec = LossSpec(
        kind=config.loss_kind,
        top_k=config.top_k,
        lambda_tv=config.lambda_tv,
        class_id=config.class_id,
        iou_eps=config.iou_eps,
        rng=config.torch_generator("topk-random"),
    )

    pixels = start.pixels.detach().clone().to(torch.float64).requires_grad_(True)
    optimizer = torch.optim.Adam([pixels], lr=config.learning_rate, betas=(config.beta1, config.beta2))
    scheduler = torch.optim.lr_scheduler.ReduceLROnPlateau(
        optimizer, mode="min", factor=config.scheduler_factor, patience=config.scheduler_patience
    )

    log: List[EpochLog] = []
    for epoch in range(1, config.epochs + 1):
        lr = optimizer.param_groups[0]["lr"]
        sums = np.zeros(3)
        steps = 0
        for batch in _batches(manifest.entries, config.batch_size, batch_rng):
            terms = []
            for entry in batch:
                padded = pspp(images[entry.id], config.pspp_target, config.pspp_probability, config.pspp_fill, pspp_rng)
                dx, dy = padded.offset
                gts = [box.translate(dx, dy) for box in entry.gt_boxes or []]
                placements = plan_placements(gts, config.patch_scale, padded.image.extent)

                applied = pixels
                if config.cutout_probability > 0 and cutout_rng.random() < config.cutout_probability:
                    applied = apply_cutout(pixels, config.cutout_fraction, config.cutout_fill, cutout_rng)
                terms.append(adversarial_term(detector, padded.image, placements, applied, spec, largest_gt_box(gts)))

            loss = total_loss(batch_mean(terms), tv_loss(pixels), config.lambda_tv, per_image_adv=terms)
            total = loss.total
            if not math.isfinite(float(total)):
                raise TrainingDivergedError(f"loss became {float(total)} at epoch {epoch}; lower the learning rate")

            optimizer.zero_grad()
            total.backward()
            optimizer.step()
            with torch.no_grad():
                pixels.clamp_(0.0, 1.0)

            values = loss.as_floats()
            sums += (values["adv"], values["tv"], values["total"])
            steps += 1

        adv, tv, mean_total = (sums / steps).tolist()
        entry_log = EpochLog(epoch, adv, tv, mean_total, lr)
        log.append(entry_log)
        logger.debug("epoch %d/%d adv=%.6f tv=%.6f total=%.6f lr=%g", epoch, config.epochs, adv, tv, mean_total, lr)

        scheduler.step(mean_total)
        new_lr = optimizer.param_groups[0]["lr"]
        if new_lr < lr:
            logger.info("epoch %d: loss plateaued, learning rate %g -> %g", epoch, lr, new_lr)
        if on_epoch is not None:
            on_epoch(entry_log)

    return TrainingResult(Patch(pixels.detach().clone()), log)
