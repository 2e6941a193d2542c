"""Eigenvalue corrections and the corrected kernel model.

A corrected model evaluates

    S_star[i, j] = cross[i] @ w_star @ cross[j]^T

where ``w_star`` re-expresses the corrected spectrum ``A*`` over the raw
landmark proximities, so new objects only need their proximities to the
landmarks.  For clip and flip the corrected matrix is positive
semi-definite and ``w_star = R R^T`` provides an explicit feature map
``F = cross @ R`` with ``F F^T = S_star``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import DataError, Kind
from .eigencore import DEFAULT_PINV_TOL, pinv_sym, sym_eig
from .nystrom import (
    CenteringStats,
    EigenModel,
    NystromFactors,
    as_row_oracle,
    nystrom_double_center,
    nystrom_eig_indefinite,
    nystrom_factors,
    select_landmarks,
)

MODES = ("clip", "flip", "shift", "none")

# condition estimate of the corrected landmark core above which the model is flagged
ILL_CONDITION_LIMIT = 1e12
# round-off floor when converting corrected similarities back to dissimilarities
CLAMP_TOL = 1e-9


def correct_eigenvalues(values: np.ndarray, mode: str) -> np.ndarray:
    """Apply an eigenvalue correction.

    flip takes absolute values, clip zeroes the negative ones, shift adds
    ``|min|`` to every eigenvalue when the minimum is negative, and none is
    the identity.
    """
    values = np.asarray(values, dtype=np.float64)
    if mode == "flip":
        return np.abs(values)
    if mode == "clip":
        return np.clip(values, 0.0, None)
    if mode == "shift":
        if values.size and values.min() < 0:
            return values + abs(values.min())
        return values.copy()
    if mode == "none":
        return values.copy()
    raise ValueError(f"unknown correction mode {mode!r}; expected one of {MODES}")


@dataclass
class CorrectedModel:
    """Corrected kernel over landmark proximities, ready for block evaluation."""

    landmarks: np.ndarray
    cross: np.ndarray  # uncorrected N x m similarity block of the fitted rows
    w_star: np.ndarray  # m x m corrected core inverse
    mode: str
    r: np.ndarray | None  # m x k factor with r @ r.T = w_star, None if indefinite
    stats: CenteringStats | None = None  # present for dissimilarity-born models
    ill_conditioned: bool = False

    @property
    def m(self) -> int:
        return len(self.landmarks)

    @property
    def n(self) -> int:
        return self.cross.shape[0]


def build_corrected_model(
    eig: EigenModel,
    cross: np.ndarray,
    core: np.ndarray,
    landmarks: np.ndarray,
    mode: str,
    stats: CenteringStats | None = None,
    rel_tol: float = DEFAULT_PINV_TOL,
) -> CorrectedModel:
    """Assemble a corrected model from an eigendecomposition and its blocks.

    The eigenvectors factor through the cross block as ``C = cross @ T``
    (T is ``eig.row_map``), so the corrected matrix re-expressed over raw
    landmark proximities is exactly

        C A* C^T = cross @ (T A* T^T) @ cross^T,   w_star = T A* T^T.

    Inverting the corrected landmark block ``C_mm A* C_mm^T`` gives the same
    w_star when that block is invertible, but a pseudo-inverse turns the
    singular clipped spectrum into an oblique projection and breaks the
    identity, so the factored form is used throughout.  Severe rank
    deficiency of ``C_mm = core @ T`` is still flagged on the model.
    """
    if mode not in MODES:
        raise ValueError(f"unknown correction mode {mode!r}; expected one of {MODES}")
    cross = np.asarray(cross, dtype=np.float64)
    core = np.asarray(core, dtype=np.float64)
    a_star = correct_eigenvalues(eig.values, mode)
    w_star = eig.row_map @ (a_star[:, None] * eig.row_map.T)
    w_star = (w_star + w_star.T) / 2.0
    c_mm = core @ eig.row_map
    sv = np.linalg.svd(c_mm, compute_uv=False) if c_mm.size else np.zeros(0)
    ill = bool(sv.size and sv.max() > 0 and sv.max() > ILL_CONDITION_LIMIT * sv.min())
    r = _feature_factor(w_star, rel_tol)
    return CorrectedModel(
        landmarks=np.asarray(landmarks, dtype=np.int64),
        cross=cross,
        w_star=w_star,
        mode=mode,
        r=r,
        stats=stats,
        ill_conditioned=ill,
    )


def _feature_factor(w_star: np.ndarray, rel_tol: float) -> np.ndarray | None:
    """Factor ``w_star = R R^T`` keeping the positive directions.

    Returns None when residual negative directions remain (possible for
    mode none on indefinite data), in which case no real feature map exists.
    """
    q, omega = sym_eig(w_star)
    scale = np.abs(omega).max() if omega.size else 0.0
    if scale == 0.0:
        return np.zeros((w_star.shape[0], 0))
    if omega.min() < -rel_tol * scale:
        return None
    keep = omega > rel_tol * scale
    return q[:, keep] * np.sqrt(omega[keep])


def corrected_block(model: CorrectedModel, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Entries of the corrected similarity matrix at ``rows x cols``."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    return model.cross[rows] @ model.w_star @ model.cross[cols].T


def corrected_to_dissimilarity(
    model: CorrectedModel, rows: np.ndarray, cols: np.ndarray
) -> np.ndarray:
    """Corrected squared dissimilarities ``D*_ij = S*_ii + S*_jj - 2 S*_ij``.

    Round-off negatives are clamped to zero.  For clip and flip the corrected
    matrix is psd, so a structurally negative result signals an internal
    inconsistency and raises.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    row_proj = model.cross[rows] @ model.w_star
    col_proj = model.cross[cols] @ model.w_star
    diag_rows = np.einsum("ij,ij->i", row_proj, model.cross[rows])
    diag_cols = np.einsum("ij,ij->i", col_proj, model.cross[cols])
    block = row_proj @ model.cross[cols].T
    d = diag_rows[:, None] + diag_cols[None, :] - 2.0 * block
    diag_scale = max(
        np.abs(diag_rows).max() if diag_rows.size else 0.0,
        np.abs(diag_cols).max() if diag_cols.size else 0.0,
    )
    scale = max(np.abs(block).max() if block.size else 0.0, diag_scale)
    floor = -CLAMP_TOL * scale
    if d.size and d.min() < floor and model.mode in ("clip", "flip"):
        i, j = np.unravel_index(int(d.argmin()), d.shape)
        raise ValueError(
            f"corrected dissimilarity {d[i, j]} at ({int(rows[i])}, {int(cols[j])}) is negative "
            f"under {model.mode}; corrected similarities should be psd"
        )
    return np.where(d > floor, np.clip(d, 0.0, None), d)


def fit_corrected_model(
    source,
    kind: Kind | None = None,
    m: int | None = None,
    mode: str = "flip",
    seed: int = 0,
    landmarks: np.ndarray | None = None,
    rel_tol: float = DEFAULT_PINV_TOL,
) -> CorrectedModel:
    """End-to-end pipeline: landmarks, factorization, centering, correction.

    For squared dissimilarities the raw blocks are centered first via
    ``nystrom_double_center`` and the centering statistics travel with the
    model so new dissimilarity rows can be extended later.  For similarities
    the raw blocks are corrected directly.  Total cost O(N m^2 + m^3).
    """
    oracle = as_row_oracle(source)
    if kind is None:
        kind = source.kind if hasattr(source, "kind") else Kind.SIMILARITY
    if landmarks is None:
        if m is None:
            raise ValueError("pass either m or an explicit landmark list")
        landmarks = select_landmarks(oracle.n, m, seed)
    factors = nystrom_factors(oracle, landmarks, kind=kind, rel_tol=rel_tol)
    return fit_corrected_model_from_factors(factors, mode, rel_tol=rel_tol)


def fit_corrected_model_from_factors(
    factors: NystromFactors, mode: str, rel_tol: float = DEFAULT_PINV_TOL
) -> CorrectedModel:
    """Correct pre-built landmark factors (dissimilarities are centered first)."""
    if factors.kind is Kind.SQUARED_DISSIMILARITY:
        s_core, s_cross, stats = nystrom_double_center(
            factors.cross, factors.core, rel_tol=rel_tol
        )
    else:
        s_core, s_cross, stats = factors.core, factors.cross, None
    sim_factors = NystromFactors(
        kind=Kind.SIMILARITY,
        landmarks=factors.landmarks,
        cross=s_cross,
        core=s_core,
        core_pinv=pinv_sym(s_core, rel_tol),
    )
    eig = nystrom_eig_indefinite(sim_factors, rel_tol=rel_tol)
    return build_corrected_model(
        eig, s_cross, s_core, factors.landmarks, mode, stats=stats, rel_tol=rel_tol
    )


# ---------------------------------------------------------------------------
# serialization: "PCM1" container
#
# magic "PCM1", flag byte (bit 0: stats present, bit 1: feature factor
# present, bit 2: ill-conditioned), mode byte (index into MODES), then
# u64 n, m, k, followed by the landmark indices (u64), cross (n*m f64),
# w_star (m*m f64), feature factor (m*k f64 if present) and, if stats are
# present, u64 stats_n, f64 g, s (m f64) and the dissimilarity core pinv
# (m*m f64).  All values little-endian.
# ---------------------------------------------------------------------------

_PCM_MAGIC = b"PCM1"
_PCM_HEADER = struct.Struct("<4sBBQQQ")


def save_model(model: CorrectedModel, path: str | Path) -> None:
    """Serialize a corrected model to the versioned PCM1 container."""
    k = model.r.shape[1] if model.r is not None else 0
    flags = 0
    if model.stats is not None:
        flags |= 1
    if model.r is not None:
        flags |= 2
    if model.ill_conditioned:
        flags |= 4
    with open(path, "wb") as fh:
        fh.write(
            _PCM_HEADER.pack(_PCM_MAGIC, flags, MODES.index(model.mode), model.n, model.m, k)
        )
        fh.write(np.ascontiguousarray(model.landmarks, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(model.cross, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.w_star, dtype="<f8").tobytes())
        if model.r is not None:
            fh.write(np.ascontiguousarray(model.r, dtype="<f8").tobytes())
        if model.stats is not None:
            fh.write(struct.pack("<Qd", model.stats.n, model.stats.g))
            fh.write(np.ascontiguousarray(model.stats.s, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(model.stats.core_pinv, dtype="<f8").tobytes())


def load_model(path: str | Path) -> CorrectedModel:
    raw = Path(path).read_bytes()
    if len(raw) < _PCM_HEADER.size:
        raise DataError(f"{path}: truncated PCM header")
    magic, flags, mode_idx, n, m, k = _PCM_HEADER.unpack_from(raw)
    if magic != _PCM_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {_PCM_MAGIC!r}")
    if mode_idx >= len(MODES):
        raise DataError(f"{path}: unknown mode byte {mode_idx}")
    off = _PCM_HEADER.size

    def take(count, dtype):
        nonlocal off
        width = np.dtype(dtype).itemsize * count
        if off + width > len(raw):
            raise DataError(f"{path}: truncated PCM payload")
        out = np.frombuffer(raw, dtype=dtype, count=count, offset=off)
        off += width
        return out

    landmarks = take(m, "<u8").astype(np.int64)
    cross = take(n * m, "<f8").reshape(n, m).copy()
    w_star = take(m * m, "<f8").reshape(m, m).copy()
    r = take(m * k, "<f8").reshape(m, k).copy() if flags & 2 else None
    stats = None
    if flags & 1:
        stats_n, g = struct.unpack_from("<Qd", raw, off)
        off += struct.calcsize("<Qd")
        s = take(m, "<f8").copy()
        core_pinv = take(m * m, "<f8").reshape(m, m).copy()
        stats = CenteringStats(s=s, g=g, n=int(stats_n), core_pinv=core_pinv)
    return CorrectedModel(
        landmarks=landmarks,
        cross=cross,
        w_star=w_star,
        mode=MODES[mode_idx],
        r=r,
        stats=stats,
        ill_conditioned=bool(flags & 4),
    )
