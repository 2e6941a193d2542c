"""Landmark (Nystrom) factorization of symmetric proximity matrices.

The approximation of a symmetric matrix ``K`` from ``m`` landmark columns is

    K_hat = K[:, L] @ pinv(K[L, L]) @ K[:, L].T

Everything in this module touches only the ``N x m`` cross block, never the
full matrix, which is what makes the pipelines linear in N:

* ``nystrom_factors`` builds the blocks from a matrix or a row oracle.
* ``nystrom_eig_psd`` / ``nystrom_eig_indefinite`` compute the orthonormal
  eigendecomposition of ``K_hat`` in O(N m^2).
* ``nystrom_double_center`` converts approximated squared dissimilarities
  into centered similarities in O(N m + m^3), returning the centering
  statistics needed later for out-of-sample queries.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dataio import DataError, Kind, ProximityMatrix
from .eigencore import DEFAULT_PINV_TOL, Signature, pinv_sym, signature_of, sym_eig


class RowOracle:
    """Row access to a symmetric matrix that may never be materialized.

    Wraps either a dense array or a callable ``row(i) -> ndarray`` of length
    ``n``.  Every fetched entry is counted, so callers can assert linear
    access patterns.
    """

    def __init__(self, row_fn: Callable[[int], np.ndarray], n: int):
        self._row_fn = row_fn
        self.n = n
        self.entries_touched = 0

    @classmethod
    def from_matrix(cls, values: np.ndarray) -> "RowOracle":
        values = np.asarray(values, dtype=np.float64)
        return cls(lambda i: values[i], values.shape[0])

    def row(self, i: int) -> np.ndarray:
        r = np.asarray(self._row_fn(int(i)), dtype=np.float64)
        if r.shape != (self.n,):
            raise ValueError(f"row oracle returned shape {r.shape}, expected ({self.n},)")
        self.entries_touched += self.n
        return r


@dataclass
class NystromFactors:
    """Blocks of the landmark factorization of a symmetric source."""

    kind: Kind
    landmarks: np.ndarray  # m global indices
    cross: np.ndarray  # N x m
    core: np.ndarray  # m x m, symmetric
    core_pinv: np.ndarray  # m x m

    @property
    def n(self) -> int:
        return self.cross.shape[0]

    @property
    def m(self) -> int:
        return len(self.landmarks)


@dataclass
class EigenModel:
    """Orthonormal eigendecomposition of an approximated matrix.

    ``vectors`` is N x k with orthonormal columns, ``values`` the matching
    eigenvalues (descending).  ``row_map`` is the m x k linear map with
    ``vectors = cross @ row_map``; it evaluates eigenvector coordinates for
    any object from its landmark proximities, in particular for landmarks
    that are not part of the fitted row set.
    """

    vectors: np.ndarray
    values: np.ndarray
    signature: Signature
    row_map: np.ndarray


@dataclass
class CenteringStats:
    """Training-set statistics that fix the centering of new dissimilarity rows."""

    s: np.ndarray  # per-landmark column sums over the fitted rows
    g: float  # approximated grand sum
    n: int  # number of fitted rows
    core_pinv: np.ndarray = field(repr=False)  # pinv of the dissimilarity core


def select_landmarks(n: int, m: int, seed: int = 0) -> np.ndarray:
    """Draw m distinct indices uniformly without replacement."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    return np.sort(np.random.default_rng(seed).choice(n, size=m, replace=False))


def as_row_oracle(source: ProximityMatrix | np.ndarray | RowOracle) -> RowOracle:
    if isinstance(source, RowOracle):
        return source
    if isinstance(source, ProximityMatrix):
        return RowOracle.from_matrix(source.values)
    return RowOracle.from_matrix(np.asarray(source, dtype=np.float64))


def nystrom_factors(
    source: ProximityMatrix | np.ndarray | RowOracle,
    landmarks: np.ndarray,
    kind: Kind | None = None,
    rel_tol: float = DEFAULT_PINV_TOL,
) -> NystromFactors:
    """Build the landmark blocks, touching only ``N * m`` source entries.

    The cross block is assembled from the m landmark rows (the source is
    symmetric, so landmark rows equal landmark columns).
    """
    if kind is None:
        kind = source.kind if isinstance(source, ProximityMatrix) else Kind.SIMILARITY
    oracle = as_row_oracle(source)
    landmarks = np.asarray(landmarks, dtype=np.int64)
    if landmarks.size == 0:
        raise ValueError("need at least one landmark")
    if landmarks.min() < 0 or landmarks.max() >= oracle.n:
        raise ValueError("landmark index out of range")
    if len(np.unique(landmarks)) != len(landmarks):
        raise ValueError("landmark indices must be distinct")
    rows = np.stack([oracle.row(i) for i in landmarks])  # m x N
    if not np.isfinite(rows).all():
        i, j = np.argwhere(~np.isfinite(rows))[0]
        raise DataError(f"non-finite entry at ({int(landmarks[i])}, {int(j)})")
    cross = rows.T.copy()
    core = cross[landmarks]
    core = (core + core.T) / 2.0
    return NystromFactors(kind, landmarks, cross, core, pinv_sym(core, rel_tol))


def reconstruct_block(f: NystromFactors, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Entries of ``K_hat`` at ``rows x cols`` in O(|rows| |cols| m)."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    return f.cross[rows] @ f.core_pinv @ f.cross[cols].T


def nystrom_eig_psd(f: NystromFactors, rel_tol: float = DEFAULT_PINV_TOL) -> EigenModel:
    """Orthonormal eigendecomposition of a psd approximated matrix in O(N m^2).

    With ``core = U L U^T`` the approximation factors as ``B B^T`` where
    ``B = cross U L^{-1/2}``; diagonalizing the small ``B^T B = V A V^T``
    yields ``K_hat = C A C^T`` with ``C = B V A^{-1/2}`` orthonormal.
    """
    u, lam = sym_eig(f.core)
    scale = np.abs(lam).max() if lam.size else 0.0
    if scale == 0.0:
        return _empty_model(f)
    if lam.min() < -rel_tol * scale:
        raise ValueError(
            "core has negative eigenvalues; use nystrom_eig_indefinite for indefinite sources"
        )
    keep = lam > rel_tol * scale
    if not keep.any():
        return _empty_model(f)
    t1 = u[:, keep] / np.sqrt(lam[keep])  # m x k1, B = cross @ t1
    return _orthonormalize(f.cross, t1, rel_tol, psd=True)


def nystrom_eig_indefinite(f: NystromFactors, rel_tol: float = DEFAULT_PINV_TOL) -> EigenModel:
    """Eigendecomposition of an arbitrary symmetric approximated matrix.

    Squaring removes the sign problem: ``K_hat^2 = cross S cross^T`` with the
    psd middle matrix ``S = core_pinv (cross^T cross) core_pinv``, so the
    psd routine applies and yields orthonormal eigenvectors ``C`` shared by
    ``K_hat^2`` and ``K_hat``.  The eigenvalues of ``K_hat`` are recovered
    from the small matrix ``M = C^T K_hat C``; re-diagonalizing M keeps the
    result exact even when +v/-v eigenvalue pairs collide in the square.
    """
    g = f.cross.T @ f.cross
    mid = f.core_pinv @ g @ f.core_pinv
    mid = (mid + mid.T) / 2.0
    u, lam = sym_eig(mid)
    scale = lam.max() if lam.size else 0.0
    if scale <= 0.0:
        return _empty_model(f)
    keep = lam > rel_tol * scale
    t1 = u[:, keep] * np.sqrt(lam[keep])  # m x k1, K_hat^2 = (cross@t1)(cross@t1)^T
    model = _orthonormalize(f.cross, t1, rel_tol, psd=False)
    if model.values.size == 0:
        return model
    c = model.vectors
    kc = f.cross @ (f.core_pinv @ (f.cross.T @ c))  # K_hat @ C in O(N m k)
    small = c.T @ kc
    small = (small + small.T) / 2.0
    w, sig_vals = sym_eig(small)
    vectors = c @ w
    row_map = model.row_map @ w
    signature = signature_of(sig_vals)
    signature = Signature(signature.p, signature.q, signature.z + f.m - len(sig_vals))
    return EigenModel(vectors, sig_vals, signature, row_map)


def _orthonormalize(cross: np.ndarray, t1: np.ndarray, rel_tol: float, psd: bool) -> EigenModel:
    """Shared tail of the linear-time decompositions.

    Given ``B = cross @ t1`` with ``target = B B^T``, produce orthonormal
    ``C = B V A^{-1/2}`` and the eigenvalues A of the target.  Eigenvalues
    of the squared spectrum below ``rel_tol^2 * max`` are dropped to avoid
    amplifying noise through the inverse square root.
    """
    m = cross.shape[1]
    b = cross @ t1
    a, v = np.linalg.eigh(b.T @ b)
    order = np.argsort(a)[::-1]
    a, v = a[order], v[:, order]
    amax = a.max() if a.size else 0.0
    if amax <= 0.0:
        return EigenModel(
            np.zeros((cross.shape[0], 0)), np.zeros(0), Signature(0, 0, m), np.zeros((m, 0))
        )
    cutoff = (rel_tol * amax) if psd else (rel_tol**2 * amax)
    keep = a > cutoff
    t2 = v[:, keep] / np.sqrt(a[keep])
    vectors = b @ t2
    row_map = t1 @ t2
    values = a[keep]
    sig = Signature(len(values), 0, m - len(values))
    return EigenModel(vectors, values, sig, row_map)


def _empty_model(f: NystromFactors) -> EigenModel:
    return EigenModel(
        np.zeros((f.n, 0)), np.zeros(0), Signature(0, 0, f.m), np.zeros((f.m, 0))
    )


# factors container: magic "PNF1", kind byte, u64 n and m, landmark indices
# (u64), cross (n*m f64) and core (m*m f64), all little-endian; the core
# pseudo-inverse is recomputed on load
_PNF_MAGIC = b"PNF1"
_PNF_HEADER = struct.Struct("<4sBQQ")


def save_factors(f: NystromFactors, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_PNF_HEADER.pack(_PNF_MAGIC, f.kind.value, f.n, f.m))
        fh.write(np.ascontiguousarray(f.landmarks, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(f.cross, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(f.core, dtype="<f8").tobytes())


def load_factors(path, rel_tol: float = DEFAULT_PINV_TOL) -> NystromFactors:
    raw = open(path, "rb").read()
    if len(raw) < _PNF_HEADER.size:
        raise DataError(f"{path}: truncated factors header")
    magic, kind_byte, n, m = _PNF_HEADER.unpack_from(raw)
    if magic != _PNF_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {_PNF_MAGIC!r}")
    expect = _PNF_HEADER.size + 8 * (m + n * m + m * m)
    if len(raw) != expect:
        raise DataError(f"{path}: payload is {len(raw)} bytes, expected {expect}")
    off = _PNF_HEADER.size
    landmarks = np.frombuffer(raw, dtype="<u8", count=m, offset=off).astype(np.int64)
    off += 8 * m
    cross = np.frombuffer(raw, dtype="<f8", count=n * m, offset=off).reshape(n, m).copy()
    off += 8 * n * m
    core = np.frombuffer(raw, dtype="<f8", count=m * m, offset=off).reshape(m, m).copy()
    return NystromFactors(Kind(kind_byte), landmarks, cross, core, pinv_sym(core, rel_tol))


def nystrom_double_center(
    d_cross: np.ndarray,
    d_core: np.ndarray,
    landmarks: np.ndarray | None = None,
    rel_tol: float = DEFAULT_PINV_TOL,
) -> tuple[np.ndarray, np.ndarray, CenteringStats]:
    """Center approximated squared dissimilarities at linear cost.

    Implements the block form of double centering applied to the landmark
    approximation of D.  With ``s_j = sum_k d_cross[k, j]`` (exact column
    sums over the fitted rows), ``g = s @ pinv(d_core) @ s`` (approximated
    grand sum) and ``t = d_cross @ pinv(d_core) @ s`` (approximated row
    sums):

        S_core  = -0.5 * (d_core  - 1 s^T / N - s 1^T / N + g / N^2)
        S_cross = -0.5 * (d_cross - 1 s^T / N - t 1^T / N + g / N^2)

    Only the summands involving g and t differ from exact double centering;
    the cross block itself and the column-sum term are exact.  Cost is
    O(N m + m^3).  Returns the two blocks plus the statistics needed to
    center out-of-sample rows with the same fixed training quantities.
    """
    d_cross = np.asarray(d_cross, dtype=np.float64)
    d_core = np.asarray(d_core, dtype=np.float64)
    n, m = d_cross.shape
    if d_core.shape != (m, m):
        raise ValueError(f"core shape {d_core.shape} does not match cross width {m}")
    if landmarks is not None:
        landmarks = np.asarray(landmarks, dtype=np.int64)
        if not np.array_equal(d_cross[landmarks], d_core):
            raise ValueError("landmark rows of d_cross must equal d_core")
    core_pinv = pinv_sym(d_core, rel_tol)
    s = d_cross.sum(axis=0)
    g = float(s @ core_pinv @ s)
    stats = CenteringStats(s=s, g=g, n=n, core_pinv=core_pinv)
    s_core = -0.5 * (d_core - s[None, :] / n - s[:, None] / n + g / n**2)
    s_core = (s_core + s_core.T) / 2.0
    s_cross = center_dissimilarity_rows(d_cross, stats)
    return s_core, s_cross, stats


def center_dissimilarity_rows(d_rows: np.ndarray, stats: CenteringStats) -> np.ndarray:
    """Center rows of squared dissimilarities to landmarks using fixed statistics.

    Applies the same formula as the cross block of ``nystrom_double_center``,
    so rows already seen at fit time reproduce their fitted values exactly.
    """
    d_rows = np.asarray(d_rows, dtype=np.float64)
    if d_rows.ndim != 2 or d_rows.shape[1] != len(stats.s):
        raise ValueError(f"expected rows of width {len(stats.s)}, got shape {d_rows.shape}")
    n = stats.n
    t = d_rows @ (stats.core_pinv @ stats.s)
    return -0.5 * (d_rows - stats.s[None, :] / n - t[:, None] / n + stats.g / n**2)
