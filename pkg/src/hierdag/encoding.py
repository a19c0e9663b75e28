"""Hierarchical label encoding and loss mask."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hierdag.hierarchy import Hierarchy


def encode_label(h: Hierarchy, y: int) -> np.ndarray:
    """Binary vector over all nodes: 1 at ``y`` and at every ancestor of ``y``."""
    enc = h.ancestors[y].astype(np.float64)
    enc[y] = 1.0
    return enc


def loss_mask(h: Hierarchy, y: int) -> np.ndarray:
    """Binary vector selecting the estimator components trained for label ``y``.

    A node is selected if it is ``y`` itself or if one of its parents is
    ``y`` or an ancestor of ``y``. That is ``y``, its children, and every
    sibling along the path to the roots.
    """
    on_path = h.ancestors[y].copy()
    on_path[y] = True
    mask = (h.parent_matrix & on_path[None, :]).any(axis=1)
    mask[y] = True
    return mask.astype(np.float64)


@dataclass(frozen=True)
class TargetTable:
    """Encodings and masks for every labeled class, computed once.

    Row ``k`` belongs to ``classes[k]``; ``row_of`` maps a node id to its row.
    """

    classes: np.ndarray
    encodings: np.ndarray
    masks: np.ndarray
    row_of: dict

    @classmethod
    def for_hierarchy(cls, h: Hierarchy) -> "TargetTable":
        classes = np.asarray(h.labeled, dtype=np.int64)
        n = len(h)
        enc = np.zeros((len(classes), n))
        mask = np.zeros((len(classes), n))
        for k, y in enumerate(classes):
            enc[k] = encode_label(h, int(y))
            mask[k] = loss_mask(h, int(y))
        enc.setflags(write=False)
        mask.setflags(write=False)
        return cls(classes, enc, mask, {int(y): k for k, y in enumerate(classes)})

    def rows(self, labels) -> np.ndarray:
        return np.fromiter((self.row_of[int(y)] for y in labels), dtype=np.int64, count=len(labels))
