"""Segmentation metrics and adversarial/segmentation loss formulas.

Overlap metrics follow total conventions: two empty masks count as a
perfect match, an empty side of precision/recall scores 1. Hausdorff
distance is undefined on empty sets and raises instead of returning a
sentinel. All losses are pure functions over arrays; nothing here
trains a model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core.morphology import thin
from .core.types import BinaryMask, Image
from .errors import InvalidParameterError, UndefinedMetricError

__all__ = [
    "ClassTargets",
    "MetricsReport",
    "dice",
    "soft_dice",
    "dice_loss",
    "bce_loss",
    "precision_recall",
    "hausdorff",
    "skeletonize",
    "cl_dice",
    "lsgan_losses",
    "cycle_loss",
    "minimax_value",
    "evaluate_pair",
]

_EPS = 1e-6


def _as_binary(arr, name: str) -> np.ndarray:
    if isinstance(arr, BinaryMask):
        return arr.as_bool()
    a = np.asarray(arr)
    if a.ndim != 2 or a.size == 0:
        raise InvalidParameterError(f"{name} must be a non-empty 2-D mask, got shape {a.shape}")
    if a.dtype != bool:
        vals = np.unique(a)
        if not np.isin(vals, (0, 1)).all():
            raise InvalidParameterError(f"{name} values must be 0/1, got {vals[:8]}")
        a = a.astype(bool)
    return a


def _as_prob(arr, name: str) -> np.ndarray:
    if isinstance(arr, Image):
        return arr.data
    if isinstance(arr, BinaryMask):
        return arr.data.astype(np.float64)
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise InvalidParameterError(f"{name} must be a non-empty 2-D grid, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or a.min() < 0.0 or a.max() > 1.0:
        raise InvalidParameterError(f"{name} values must lie in [0, 1]")
    return a


def _match(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise InvalidParameterError(f"shape mismatch: {a.shape} vs {b.shape}")


def dice(pred, gt) -> float:
    """2|P n G| / (|P| + |G|); 1 when both masks are empty."""
    p = _as_binary(pred, "pred")
    g = _as_binary(gt, "gt")
    _match(p, g)
    denom = int(p.sum()) + int(g.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((p & g).sum()) / denom


def soft_dice(pred, gt) -> float:
    """Dice over probabilities with 1e-6 smoothing top and bottom."""
    p = _as_prob(pred, "pred")
    g = _as_binary(gt, "gt").astype(np.float64)
    _match(p, g)
    inter = float((p * g).sum())
    return (2.0 * inter + _EPS) / (float(p.sum()) + float(g.sum()) + _EPS)


def dice_loss(pred, gt) -> float:
    """1 - soft_dice."""
    return 1.0 - soft_dice(pred, gt)


def bce_loss(pred, gt, pos_weight: float = 1.0) -> float:
    """Mean weighted binary cross-entropy with probability clipping.

    Predictions are clipped to [1e-7, 1 - 1e-7], so the loss is finite
    even for hard 0/1 outputs.
    """
    w = float(pos_weight)
    if not np.isfinite(w) or w <= 0:
        raise InvalidParameterError(f"pos_weight must be > 0, got {pos_weight!r}")
    p = np.clip(_as_prob(pred, "pred"), 1e-7, 1.0 - 1e-7)
    g = _as_binary(gt, "gt").astype(np.float64)
    _match(p, g)
    per_pixel = -(w * g * np.log(p) + (1.0 - g) * np.log1p(-p))
    return float(per_pixel.mean())


def precision_recall(pred, gt) -> tuple[float, float]:
    """(TP/(TP+FP), TP/(TP+FN)); an empty side scores 1 by convention."""
    p = _as_binary(pred, "pred")
    g = _as_binary(gt, "gt")
    _match(p, g)
    tp = int((p & g).sum())
    np_, ng = int(p.sum()), int(g.sum())
    precision = 1.0 if np_ == 0 else tp / np_
    recall = 1.0 if ng == 0 else tp / ng
    return precision, recall


def _directed_distances(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Euclidean distance from each set pixel of src to the set dst.

    Uses the exact feature transform and takes the square root of the
    integer squared distance, the same arithmetic as an all-pairs
    evaluation, so results agree with a brute-force oracle bitwise.
    """
    ind = ndimage.distance_transform_edt(~dst, return_distances=False, return_indices=True)
    rows, cols = np.nonzero(src)
    di = ind[0][rows, cols] - rows
    dj = ind[1][rows, cols] - cols
    return np.sqrt((di * di + dj * dj).astype(np.float64))


def hausdorff(pred, gt, percentile: float = 100.0) -> float:
    """Percentile of the pooled two-way nearest-neighbor distances.

    percentile=100 is the classical symmetric Hausdorff maximum.
    Computed with exact Euclidean distance transforms, so it matches an
    all-pairs evaluation exactly.
    """
    pct = float(percentile)
    if not 0.0 < pct <= 100.0:
        raise InvalidParameterError(f"percentile must be in (0, 100], got {percentile!r}")
    p = _as_binary(pred, "pred")
    g = _as_binary(gt, "gt")
    _match(p, g)
    if not p.any() or not g.any():
        raise UndefinedMetricError("hausdorff distance is undefined for an empty mask")
    pooled = np.concatenate([_directed_distances(p, g), _directed_distances(g, p)])
    if pct == 100.0:
        return float(pooled.max())
    return float(np.percentile(pooled, pct))


def skeletonize(mask) -> BinaryMask:
    """Thin to an 8-connected 1-pixel-wide skeleton; idempotent."""
    m = _as_binary(mask, "mask")
    return thin(BinaryMask(m))


def cl_dice(pred, gt) -> float:
    """Centerline overlap score, topology-sensitive.

    Harmonic mean of skeleton-of-pred precision against gt and
    skeleton-of-gt sensitivity against pred. Both masks empty scores 1;
    an empty skeleton against a non-empty counterpart scores 0.
    """
    p = _as_binary(pred, "pred")
    g = _as_binary(gt, "gt")
    _match(p, g)
    if not p.any() and not g.any():
        return 1.0
    sp = skeletonize(p).as_bool()
    sg = skeletonize(g).as_bool()
    if not sp.any() or not sg.any():
        return 0.0
    tprec = int((sp & g).sum()) / int(sp.sum())
    tsens = int((sg & p).sum()) / int(sg.sum())
    if tprec + tsens == 0.0:
        return 0.0
    return 2.0 * tprec * tsens / (tprec + tsens)


@dataclass(frozen=True)
class ClassTargets:
    """One-hot targets for the three discriminator classes.

    a: images with real tubes, b: clean images, c: synthetic images.
    """

    a: tuple = (1.0, 0.0, 0.0)
    b: tuple = (0.0, 1.0, 0.0)
    c: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        vecs = []
        for name in ("a", "b", "c"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != (3,) or not np.isin(v, (0.0, 1.0)).all() or v.sum() != 1.0:
                raise InvalidParameterError(f"target {name} must be a one-hot 3-vector")
            vecs.append(tuple(v.tolist()))
            object.__setattr__(self, name, vecs[-1])
        if len({v for v in vecs}) != 3:
            raise InvalidParameterError("class targets must be pairwise distinct")


def _batch3(arr, name: str) -> np.ndarray:
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 1:
        a = a[None]
    if a.ndim != 2 or a.shape[1] != 3 or a.shape[0] == 0:
        raise InvalidParameterError(f"{name} must be a non-empty batch of 3-vectors")
    if not np.all(np.isfinite(a)):
        raise InvalidParameterError(f"{name} contains non-finite values")
    return a


def _mse(batch: np.ndarray, target) -> float:
    return float(((batch - np.asarray(target)) ** 2).mean())


def lsgan_losses(d_real, d_clean, d_synth, targets: ClassTargets = ClassTargets()) -> tuple[float, float]:
    """Three-class least-squares adversarial losses.

    loss_D pulls each class's discriminator outputs to its own one-hot
    target; loss_G pulls outputs on synthetic images toward the
    real-tube class. Squared errors average over vector components and
    batch; each class term carries weight 1/3.
    """
    dr = _batch3(d_real, "d_real")
    dc = _batch3(d_clean, "d_clean")
    ds = _batch3(d_synth, "d_synth")
    loss_d = (_mse(dr, targets.a) + _mse(dc, targets.b) + _mse(ds, targets.c)) / 3.0
    loss_g = _mse(ds, targets.a) / 3.0
    return loss_d, loss_g


def minimax_value(d_on_real, d_on_fake) -> float:
    """Classical two-player objective: E[log D(x)] + E[log(1 - D(G(z)))]."""
    r = np.asarray(d_on_real, dtype=np.float64).ravel()
    f = np.asarray(d_on_fake, dtype=np.float64).ravel()
    if r.size == 0 or f.size == 0:
        raise InvalidParameterError("need at least one probability per side")
    for name, v in (("d_on_real", r), ("d_on_fake", f)):
        if not np.all((v > 0.0) & (v < 1.0)):
            raise InvalidParameterError(f"{name} values must lie strictly inside (0, 1)")
    return float(np.log(r).mean() + np.log1p(-f).mean())


SEG_LOSSES = ("bce", "dice", "bce+dice")


def cycle_loss(reconstructed, original, pred_mask, mask, seg_loss: str = "bce+dice") -> float:
    """L1 reconstruction error plus a segmentation loss on the mask."""
    rec = _as_prob(reconstructed, "reconstructed")
    orig = _as_prob(original, "original")
    _match(rec, orig)
    if seg_loss not in SEG_LOSSES:
        raise InvalidParameterError(f"seg_loss must be one of {SEG_LOSSES}, got {seg_loss!r}")
    l1 = float(np.abs(rec - orig).mean())
    if seg_loss == "bce":
        seg = bce_loss(pred_mask, mask)
    elif seg_loss == "dice":
        seg = dice_loss(pred_mask, mask)
    else:
        seg = bce_loss(pred_mask, mask) + dice_loss(pred_mask, mask)
    return l1 + seg


@dataclass(frozen=True)
class MetricsReport:
    """Named scalar scores for one prediction/ground-truth pair.

    ``hausdorff``/``hausdorff95`` are None when undefined (an empty
    mask on either side).
    """

    dice: float
    soft_dice: float
    cl_dice: float
    precision: float
    recall: float
    hausdorff: float = None
    hausdorff95: float = None

    def to_dict(self) -> dict:
        return {
            "dice": self.dice,
            "soft-dice": self.soft_dice,
            "cl-dice": self.cl_dice,
            "precision": self.precision,
            "recall": self.recall,
            "hausdorff": self.hausdorff,
            "hausdorff95": self.hausdorff95,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @staticmethod
    def field_names() -> tuple:
        return ("dice", "soft-dice", "cl-dice", "precision", "recall", "hausdorff", "hausdorff95")

    def format_table(self) -> str:
        rows = [(k, v) for k, v in self.to_dict().items()]
        width = max(len(k) for k, _ in rows)
        lines = []
        for k, v in rows:
            val = "undefined" if v is None else f"{v:.6f}"
            lines.append(f"{k.ljust(width)}  {val}")
        return "\n".join(lines)


def evaluate_pair(pred_prob, gt, threshold: float = 0.5) -> MetricsReport:
    """All metrics for one soft prediction against a binary mask."""
    p = _as_prob(pred_prob, "pred")
    g = _as_binary(gt, "gt")
    _match(p, g)
    if not 0.0 < float(threshold) <= 1.0:
        raise InvalidParameterError(f"threshold must be in (0, 1], got {threshold!r}")
    hard = p >= float(threshold)
    prec, rec = precision_recall(hard, g)
    try:
        hd = hausdorff(hard, g, 100.0)
        hd95 = hausdorff(hard, g, 95.0)
    except UndefinedMetricError:
        hd = None
        hd95 = None
    return MetricsReport(
        dice=dice(hard, g),
        soft_dice=soft_dice(p, g),
        cl_dice=cl_dice(hard, g),
        precision=prec,
        recall=rec,
        hausdorff=hd,
        hausdorff95=hd95,
    )
