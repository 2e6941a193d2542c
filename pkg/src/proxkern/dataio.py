"""Reading, writing and generating proximity matrices.

Two on-disk formats are supported:

PMX (binary)
    magic ``b"PMX1"``, one kind byte (0 = similarity, 1 = squared
    dissimilarity), an unsigned little-endian 64-bit count ``n``, followed
    by ``n*n`` little-endian float64 values in row-major order.  The format
    is bit-exact: a write/read round trip reproduces the array exactly.

CSV (text)
    plain comma-separated values with ``.`` as decimal separator, one matrix
    row per line, no header.  Values are emitted with 17 significant digits,
    so a round trip is exact to within 1e-15 relative.  CSV carries no kind
    flag; the caller must supply it.

Label files hold one integer class id per line.  Class ids are normalized
to the contiguous range ``0..C-1`` on load.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_PMX_MAGIC = b"PMX1"
_PMX_HEADER = struct.Struct("<4sBQ")
# rectangular sibling of PMX for query/result blocks (rows x cols payload)
_PMB_MAGIC = b"PMB1"
_PMB_HEADER = struct.Struct("<4sBQQ")

# relative asymmetry above this triggers the symmetrization warning flag
_ASYM_WARN = 1e-9
# relative slack for "zero" diagonal entries of squared dissimilarities
_DIAG_TOL = 1e-12


class DataError(Exception):
    """Raised for malformed files or matrices that violate format invariants."""


class Kind(enum.Enum):
    SIMILARITY = 0
    SQUARED_DISSIMILARITY = 1


@dataclass
class ProximityMatrix:
    """A dense symmetric proximity matrix tagged with its interpretation.

    ``values`` is an ``n x n`` float64 array.  For squared dissimilarities
    the diagonal is zero and all entries are nonnegative.  ``asymmetric``
    records whether symmetrization changed the input noticeably.
    """

    kind: Kind
    values: np.ndarray
    asymmetric: bool = field(default=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise DataError(f"matrix must be square, got shape {self.values.shape}")
        _check_finite(self.values)
        if self.kind is Kind.SQUARED_DISSIMILARITY:
            diag = np.abs(np.diag(self.values))
            scale = np.abs(self.values).max() if self.values.size else 0.0
            if diag.size and diag.max() > _DIAG_TOL * max(scale, 1.0):
                i = int(diag.argmax())
                raise DataError(
                    f"squared dissimilarity matrix has nonzero diagonal at ({i}, {i}): "
                    f"{self.values[i, i]}"
                )
            if self.values.size and self.values.min() < 0:
                i, j = np.unravel_index(int(self.values.argmin()), self.values.shape)
                raise DataError(
                    f"squared dissimilarity matrix has negative entry at ({i}, {j}): "
                    f"{self.values[i, j]}"
                )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_values(cls, kind: Kind, values: np.ndarray) -> "ProximityMatrix":
        """Build a matrix from possibly slightly asymmetric data.

        The input is symmetrized as ``(a + a.T) / 2``.  If the maximum
        asymmetry exceeds ``1e-9 * max|value|`` the result is flagged.
        """
        a = np.asarray(values, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DataError(f"matrix must be square, got shape {a.shape}")
        _check_finite(a)
        asym = np.abs(a - a.T).max() if a.size else 0.0
        scale = np.abs(a).max() if a.size else 0.0
        flagged = bool(scale > 0 and asym > _ASYM_WARN * scale)
        sym = (a + a.T) / 2.0
        return cls(kind=kind, values=sym, asymmetric=flagged)


def _check_finite(a: np.ndarray) -> None:
    bad = ~np.isfinite(a)
    if bad.any():
        idx = np.argwhere(bad)[0]
        coord = tuple(int(x) for x in idx)
        raise DataError(f"non-finite entry at {coord}")


def read_matrix(path: str | Path, fmt: str = "pmx", kind: Kind | None = None) -> ProximityMatrix:
    """Read a proximity matrix from ``path``.

    ``fmt`` is ``"pmx"`` or ``"csv"``.  The PMX header carries the kind;
    for CSV it must be passed explicitly.
    """
    path = Path(path)
    if fmt == "pmx":
        return _read_pmx(path)
    if fmt == "csv":
        if kind is None:
            raise DataError("CSV files carry no kind flag; pass kind explicitly")
        return _read_csv(path, kind)
    raise DataError(f"unknown matrix format {fmt!r}")


def write_matrix(m: ProximityMatrix, path: str | Path, fmt: str = "pmx") -> None:
    """Write ``m`` to ``path`` in the given format."""
    path = Path(path)
    if fmt == "pmx":
        with open(path, "wb") as fh:
            fh.write(_PMX_HEADER.pack(_PMX_MAGIC, m.kind.value, m.n))
            fh.write(np.ascontiguousarray(m.values, dtype="<f8").tobytes())
    elif fmt == "csv":
        with open(path, "w") as fh:
            for row in m.values:
                fh.write(",".join("%.17g" % v for v in row))
                fh.write("\n")
    else:
        raise DataError(f"unknown matrix format {fmt!r}")


def _read_pmx(path: Path) -> ProximityMatrix:
    raw = path.read_bytes()
    if len(raw) < _PMX_HEADER.size:
        raise DataError(f"{path}: truncated PMX header")
    magic, kind_byte, n = _PMX_HEADER.unpack_from(raw)
    if magic != _PMX_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {_PMX_MAGIC!r}")
    if kind_byte not in (0, 1):
        raise DataError(f"{path}: unknown kind byte {kind_byte}")
    expect = _PMX_HEADER.size + 8 * n * n
    if len(raw) != expect:
        raise DataError(f"{path}: payload is {len(raw)} bytes, expected {expect}")
    values = np.frombuffer(raw, dtype="<f8", offset=_PMX_HEADER.size).reshape(n, n)
    return ProximityMatrix.from_values(Kind(kind_byte), values.copy())


def _read_csv(path: Path, kind: Kind) -> ProximityMatrix:
    rows = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                j = next(k for k, f in enumerate(fields) if not _parses(f))
                raise DataError(f"{path}: unparseable value at ({i}, {j}): {fields[j]!r}") from None
    if not rows:
        raise DataError(f"{path}: empty CSV matrix")
    n = len(rows)
    widths = {len(r) for r in rows}
    if widths != {n}:
        bad = next(i for i, r in enumerate(rows) if len(r) != n)
        raise DataError(f"{path}: row {bad} has {len(rows[bad])} fields, expected {n}")
    return ProximityMatrix.from_values(kind, np.array(rows, dtype=np.float64))


def _parses(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_block(block: np.ndarray, path: str | Path, kind: Kind = Kind.SIMILARITY) -> None:
    """Write a rectangular block in the PMB format (PMX with two dimensions)."""
    block = np.atleast_2d(np.asarray(block, dtype=np.float64))
    with open(path, "wb") as fh:
        fh.write(_PMB_HEADER.pack(_PMB_MAGIC, kind.value, block.shape[0], block.shape[1]))
        fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def read_block(path: str | Path) -> tuple[np.ndarray, Kind]:
    """Read a rectangular PMB block; also accepts square PMX files."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] == _PMX_MAGIC:
        m = _read_pmx(path)
        return m.values, m.kind
    if len(raw) < _PMB_HEADER.size:
        raise DataError(f"{path}: truncated PMB header")
    magic, kind_byte, rows, cols = _PMB_HEADER.unpack_from(raw)
    if magic != _PMB_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {_PMB_MAGIC!r} or {_PMX_MAGIC!r}")
    if kind_byte not in (0, 1):
        raise DataError(f"{path}: unknown kind byte {kind_byte}")
    expect = _PMB_HEADER.size + 8 * rows * cols
    if len(raw) != expect:
        raise DataError(f"{path}: payload is {len(raw)} bytes, expected {expect}")
    block = np.frombuffer(raw, dtype="<f8", offset=_PMB_HEADER.size).reshape(rows, cols)
    _check_finite(block)
    return block.copy(), Kind(kind_byte)


def read_labels(path: str | Path) -> np.ndarray:
    """Read one integer class id per line and normalize ids to ``0..C-1``."""
    path = Path(path)
    raw = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                raw.append(int(line))
            except ValueError:
                raise DataError(f"{path}: bad label on line {i + 1}: {line!r}") from None
    labels = np.asarray(raw, dtype=np.int64)
    _, normalized = np.unique(labels, return_inverse=True)
    return normalized.astype(np.int64)


def write_labels(labels: np.ndarray, path: str | Path) -> None:
    with open(path, "w") as fh:
        for v in labels:
            fh.write(f"{int(v)}\n")


# Ball generator defaults.  The radius gap, box size and dimension are tuned
# together: the class signal (carried by the radius difference) must sit in
# a leading negative eigendirection of the centered similarity matrix, while
# the positive spectrum stays uninformative.  Near-equal radii bury the
# signal below the broad negative spectrum coupled to the mean radius; wide
# boxes let it leak into positive directions through the row-sum terms.
# Five dimensions keep the dense packing feasible for rejection sampling.
DEFAULT_RADIUS_A = 0.2
DEFAULT_RADIUS_B = 0.8
DEFAULT_DIM = 5
BOX_FACTOR = 6.0
_MAX_REJECTION_ATTEMPTS = 10**6


def ball_centers(
    n_per_class: int,
    dim: int = DEFAULT_DIM,
    radius_a: float = DEFAULT_RADIUS_A,
    radius_b: float = DEFAULT_RADIUS_B,
    box: float | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Place two classes of non-overlapping balls uniformly in ``[0, box]^dim``.

    Class 0 gets ``radius_a``, class 1 gets ``radius_b``.  A candidate
    center is rejected while it overlaps any already placed ball (center
    distance at most the radius sum).  Returns centers, radii and labels;
    deterministic for a fixed seed.
    """
    if radius_a <= 0 or radius_b <= 0:
        raise ValueError("radii must be positive")
    if n_per_class < 1:
        raise ValueError("n_per_class must be at least 1")
    if box is None:
        box = BOX_FACTOR * (radius_a + radius_b)
    rng = np.random.default_rng(seed)
    n = 2 * n_per_class
    radii = np.concatenate([np.full(n_per_class, radius_a), np.full(n_per_class, radius_b)])
    centers = np.empty((n, dim))
    placed = 0
    attempts = 0
    while placed < n:
        attempts += 1
        if attempts > _MAX_REJECTION_ATTEMPTS:
            raise ValueError(
                f"ball placement exceeded {_MAX_REJECTION_ATTEMPTS} attempts; "
                f"box={box} is too small for {n} balls"
            )
        c = rng.uniform(0.0, box, size=dim)
        if placed:
            d = np.linalg.norm(centers[:placed] - c, axis=1)
            if (d <= radii[:placed] + radii[placed]).any():
                continue
        centers[placed] = c
        placed += 1
    labels = np.concatenate(
        [np.zeros(n_per_class, dtype=np.int64), np.ones(n_per_class, dtype=np.int64)]
    )
    return centers, radii, labels


def ball_surface_row(centers: np.ndarray, radii: np.ndarray, i: int) -> np.ndarray:
    """Row i of the squared surface distance matrix, computed on the fly."""
    d = np.linalg.norm(centers - centers[i], axis=1) - radii - radii[i]
    row = d**2
    row[i] = 0.0
    return row


def ball_dataset(
    n_per_class: int,
    dim: int = DEFAULT_DIM,
    radius_a: float = DEFAULT_RADIUS_A,
    radius_b: float = DEFAULT_RADIUS_B,
    box: float | None = None,
    seed: int = 0,
) -> tuple[ProximityMatrix, np.ndarray]:
    """Generate squared surface distances between randomly placed balls.

    The entry for balls i, j is ``(||c_i - c_j|| - r_i - r_j)**2`` with a
    zero diagonal; the overlap rejection in ``ball_centers`` keeps all
    off-diagonal entries strictly positive.  Returns the squared
    dissimilarity matrix and the 0/1 label vector.
    """
    centers, radii, labels = ball_centers(n_per_class, dim, radius_a, radius_b, box, seed)
    diff = centers[:, None, :] - centers[None, :, :]
    center_dist = np.sqrt((diff**2).sum(axis=-1))
    surface = center_dist - radii[:, None] - radii[None, :]
    values = surface**2
    np.fill_diagonal(values, 0.0)
    values = (values + values.T) / 2.0
    return ProximityMatrix(Kind.SQUARED_DISSIMILARITY, values), labels
