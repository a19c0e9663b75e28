"""Squared-error losses on post-sigmoid outputs.

Both losses differentiate with respect to the outputs themselves; the chain
rule through the output nonlinearity lives in :mod:`hierdag.model`.
Batched variants average over samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hierdag.errors import IndexOutOfRange, LengthMismatch


@dataclass(frozen=True)
class LossValue:
    value: float
    gradient: np.ndarray


def hierarchical_loss(enc, mask, out) -> LossValue:
    """Masked squared error ``sum_s mask_s * (enc_s - out_s)**2``."""
    enc = np.asarray(enc, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    out = np.asarray(out, dtype=np.float64)
    if not (enc.shape == mask.shape == out.shape) or enc.ndim != 1:
        raise LengthMismatch(
            f"encoding, mask and output lengths differ: {enc.shape}, {mask.shape}, {out.shape}"
        )
    diff = out - enc
    return LossValue(float(np.sum(mask * diff * diff)), 2.0 * mask * diff)


def onehot_loss(target: int, out) -> LossValue:
    """Flat baseline: squared error against a one-hot target over the classes."""
    out = np.asarray(out, dtype=np.float64)
    if not 0 <= target < out.shape[-1]:
        raise IndexOutOfRange(f"target {target} outside [0, {out.shape[-1]})")
    diff = out.copy()
    diff[target] -= 1.0
    return LossValue(float(np.sum(diff * diff)), 2.0 * diff)


def hierarchical_loss_batch(enc, mask, out) -> tuple[float, np.ndarray]:
    """Mean masked loss over a batch of shape ``(B, |S|)``; gradient already
    divided by ``B``."""
    if not (enc.shape == mask.shape == out.shape):
        raise LengthMismatch(f"batch shapes differ: {enc.shape}, {mask.shape}, {out.shape}")
    b = out.shape[0]
    diff = out - enc
    per_sample = np.sum(mask * diff * diff, axis=1)
    return float(per_sample.mean()), (2.0 / b) * mask * diff


def onehot_loss_batch(targets, out) -> tuple[float, np.ndarray]:
    targets = np.asarray(targets, dtype=np.int64)
    b, k = out.shape
    if targets.shape != (b,):
        raise LengthMismatch(f"{targets.shape[0]} targets for {b} outputs")
    if targets.size and (targets.min() < 0 or targets.max() >= k):
        raise IndexOutOfRange(f"targets must lie in [0, {k})")
    diff = out.copy()
    diff[np.arange(b), targets] -= 1.0
    per_sample = np.sum(diff * diff, axis=1)
    return float(per_sample.mean()), (2.0 / b) * diff
