"""Recursive marginalization of conditional node scores and single-class
prediction.

All functions accept either one score vector of shape ``(|S|,)`` or a batch
of shape ``(B, |S|)``.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from hierdag.errors import EmptyCandidateSet, LengthMismatch
from hierdag.hierarchy import Hierarchy

# below this, products of (1 - p) are accumulated in log space
_LOG_SWITCH = 1e-12


class PredictionMode(str, Enum):
    MLNP = "mlnp"  # candidates restricted to the labeled classes
    ANP = "anp"  # any node, inner nodes and roots included

    def __str__(self) -> str:
        return self.value


def _as_batch(h: Hierarchy, scores) -> tuple[np.ndarray, bool]:
    a = np.asarray(scores, dtype=np.float64)
    single = a.ndim == 1
    if single:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != len(h):
        raise LengthMismatch(f"expected scores over {len(h)} nodes, got shape {np.shape(scores)}")
    return a, single


def _none_of(q: np.ndarray) -> np.ndarray:
    """Row-wise product of the complement factors ``q`` along axis 1."""
    if q.shape[1] == 0:
        return np.ones(q.shape[0])
    if (q < _LOG_SWITCH).any():
        with np.errstate(divide="ignore"):
            return np.exp(np.sum(np.log(q), axis=1))
    return np.prod(q, axis=1)


def noisy_or(probs: np.ndarray) -> np.ndarray:
    """Probability that at least one of independent events occurs, row-wise."""
    return 1.0 - _none_of(1.0 - probs)


def marginals(h: Hierarchy, cond) -> np.ndarray:
    """Marginal node probabilities from conditional scores.

    Roots are fixed to 1. Every other node gets its conditional score times
    the noisy-OR of its parents' marginals. One pass in topological order.
    """
    c, single = _as_batch(h, cond)
    marg = np.empty_like(c)
    for s in h.topo_order:
        ps = h.parent_list(s)
        if not ps:
            marg[:, s] = 1.0
        elif len(ps) == 1:
            # noisy-OR of one parent is the parent itself; skip 1 - (1 - p) rounding
            marg[:, s] = c[:, s] * marg[:, ps[0]]
        else:
            marg[:, s] = c[:, s] * noisy_or(marg[:, list(ps)])
    return marg[0] if single else marg


def prediction_scores(h: Hierarchy, cond, marg=None) -> np.ndarray:
    """Joint score of "node holds and none of its children hold".

    The child factor uses the conditional scores of the children.
    """
    c, single = _as_batch(h, cond)
    if marg is None:
        m = marginals(h, c)
    else:
        m, _ = _as_batch(h, marg)
    score = np.empty_like(c)
    for s in range(len(h)):
        kids = h.child_list(s)
        score[:, s] = m[:, s] * _none_of(1.0 - c[:, list(kids)])
    return score[0] if single else score


def candidates(h: Hierarchy, mode) -> np.ndarray:
    mode = PredictionMode(mode)
    if mode is PredictionMode.MLNP:
        cand = np.asarray(h.labeled, dtype=np.int64)
    else:
        cand = np.arange(len(h), dtype=np.int64)
    if cand.size == 0:
        raise EmptyCandidateSet(f"no candidate nodes for mode {mode}")
    return cand


def predict_with_scores(h: Hierarchy, cond, mode=PredictionMode.MLNP):
    """Predicted node ids and their scores. Ties go to the smallest node id."""
    cand = candidates(h, mode)
    c, single = _as_batch(h, cond)
    score = prediction_scores(h, c)[:, cand]
    # np.argmax returns the first maximum and cand is ascending
    best = np.argmax(score, axis=1)
    pred = cand[best]
    value = score[np.arange(len(best)), best]
    if single:
        return int(pred[0]), float(value[0])
    return pred, value


def predict(h: Hierarchy, cond, mode=PredictionMode.MLNP):
    return predict_with_scores(h, cond, mode)[0]
