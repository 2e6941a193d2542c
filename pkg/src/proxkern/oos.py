"""Out-of-sample extension of corrected models.

New objects never trigger a refit: the fitted ``w_star`` and, for
dissimilarity-born models, the frozen centering statistics are applied to
the new rows of raw proximities against the landmarks.
"""

from __future__ import annotations

import numpy as np

from .corrections import CorrectedModel
from .nystrom import center_dissimilarity_rows


def extend_similarities(
    model: CorrectedModel, s_new: np.ndarray, self_block: bool = False
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Corrected similarities between t new points and the fitted rows.

    ``s_new`` holds raw (uncorrected, already centered if the model is
    dissimilarity-born) similarities between the new points and the m
    landmarks.  Returns the t x N block ``s_new @ w_star @ cross.T``; with
    ``self_block=True`` also returns the t x t block among the new points.
    Rows of the training cross block reproduce their corrected_block rows
    exactly.
    """
    s_new = np.atleast_2d(np.asarray(s_new, dtype=np.float64))
    if s_new.shape[1] != model.m:
        raise ValueError(f"query rows have width {s_new.shape[1]}, model has m={model.m}")
    projected = s_new @ model.w_star
    block = projected @ model.cross.T
    if self_block:
        return block, projected @ s_new.T
    return block


def extend_dissimilarities(
    model: CorrectedModel, d_new: np.ndarray, self_block: bool = False
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Corrected similarities for new squared dissimilarity rows.

    Each row is centered with the training statistics frozen at fit time
    (per-landmark column sums, approximated grand sum and the training
    count), then extended like a similarity query.
    """
    if model.stats is None:
        raise ValueError(
            "model carries no centering statistics (similarity-born); "
            "use extend_similarities"
        )
    d_new = np.atleast_2d(np.asarray(d_new, dtype=np.float64))
    s_new = center_dissimilarity_rows(d_new, model.stats)
    return extend_similarities(model, s_new, self_block=self_block)


def extend_features(model: CorrectedModel, prox_new: np.ndarray) -> np.ndarray:
    """Feature-space form of the extension: rows in the map ``F = S R``.

    The corrected similarity between any two extended objects is the dot
    product of their feature rows.  Requires the model's feature factor,
    which exists for clip and flip (and any psd corrected spectrum).
    """
    if model.r is None:
        raise ValueError(f"mode {model.mode!r} left negative directions; no real feature map")
    prox_new = np.atleast_2d(np.asarray(prox_new, dtype=np.float64))
    if model.stats is not None:
        prox_new = center_dissimilarity_rows(prox_new, model.stats)
    if prox_new.shape[1] != model.m:
        raise ValueError(f"query rows have width {prox_new.shape[1]}, model has m={model.m}")
    return prox_new @ model.r
