"""Dataset ingestion, preprocessing, groundtruth calibration, and pair sampling.

File formats:

* CSV: UTF-8, comma separated, one row per vector, optional header line
  (detected by any non-numeric field in the first line). Blank lines are
  skipped. Parse failures name the offending line.
* Binary vectors ("RSHV1"): magic b"RSHV1", then N and d as unsigned 64-bit
  little-endian, then N*d float32 values, row-major little-endian. Parse
  failures name the byte offset.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dataset, FormatError, PairSet, RankHashError, ValidationError

__all__ = [
    "PcaBasis",
    "GroundTruth",
    "load_csv",
    "load_fvec",
    "save_fvec",
    "center_and_normalize",
    "apply_center_and_normalize",
    "row_normalize",
    "fit_pca",
    "apply_pca",
    "calibrate_groundtruth",
    "calibrate_pair_threshold",
    "groundtruth_from_labels",
    "make_pairs",
    "make_pairs_from_labels",
    "synth_clusters",
    "split_dataset",
]

_VEC_MAGIC = b"RSHV1"


def load_csv(path) -> Dataset:
    """Load a CSV of feature rows; ids are assigned 0..N-1 in file order."""
    text = Path(path).read_text(encoding="utf-8")
    rows = []
    width = None
    header_skipped = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if not rows and not header_skipped:
            try:
                rows.append([float(f) for f in fields])
                width = len(fields)
                continue
            except ValueError:
                header_skipped = True
                continue
        if width is not None and len(fields) != width:
            raise FormatError(
                f"line {lineno}: expected {width} fields, got {len(fields)}"
            )
        try:
            parsed = [float(f) for f in fields]
        except ValueError as exc:
            raise FormatError(f"line {lineno}: non-numeric field ({exc})") from exc
        if width is None:
            width = len(fields)
        rows.append(parsed)
    if not rows:
        raise FormatError("no data rows found")
    return Dataset.from_features(np.asarray(rows, dtype=np.float64))


def load_fvec(path) -> Dataset:
    """Load an RSHV1 binary vector file; ids are assigned 0..N-1."""
    data = Path(path).read_bytes()
    if len(data) < len(_VEC_MAGIC):
        raise FormatError(f"truncated header at offset {len(data)}")
    if data[: len(_VEC_MAGIC)] != _VEC_MAGIC:
        raise FormatError(f"bad magic {data[:len(_VEC_MAGIC)]!r} at offset 0")
    pos = len(_VEC_MAGIC)
    if len(data) < pos + 16:
        raise FormatError(f"truncated count header at offset {len(data)}")
    n, d = struct.unpack_from("<QQ", data, pos)
    pos += 16
    expected = pos + n * d * 4
    if len(data) < expected:
        raise FormatError(
            f"truncated payload at offset {len(data)}: expected {expected} bytes total"
        )
    if len(data) > expected:
        raise FormatError(f"unexpected trailing bytes at offset {expected}")
    if n < 1 or d < 1:
        raise FormatError(f"invalid shape N={n}, d={d} at offset 5")
    feats = np.frombuffer(data, dtype="<f4", count=n * d, offset=pos).reshape(n, d)
    return Dataset.from_features(feats.astype(np.float64))


def save_fvec(data: Dataset, path) -> None:
    """Write a dataset in RSHV1 form (values rounded to float32)."""
    blob = bytearray()
    blob += _VEC_MAGIC
    blob += struct.pack("<QQ", data.n, data.dim)
    blob += data.features.astype("<f4").tobytes(order="C")
    Path(path).write_bytes(bytes(blob))


def row_normalize(data: Dataset) -> Dataset:
    """Scale every row to unit Euclidean norm; zero rows stay zero."""
    norms = np.linalg.norm(data.features, axis=1)
    safe = np.where(norms == 0, 1.0, norms)
    return Dataset(data.features / safe[:, None], data.ids)


def center_and_normalize(data: Dataset) -> tuple[Dataset, np.ndarray]:
    """Subtract the per-dimension mean, then unit-normalize each row.

    Returns the transformed dataset and the mean vector, which must be reused
    verbatim to transform query-side data.
    """
    mean = data.features.mean(axis=0)
    return apply_center_and_normalize(data, mean), mean


def apply_center_and_normalize(data: Dataset, mean) -> Dataset:
    """Apply a stored training mean, then unit-normalize each row."""
    mean = np.asarray(mean, dtype=np.float64)
    if mean.shape != (data.dim,):
        raise ValidationError("mean length must match the feature dimension")
    return row_normalize(Dataset(data.features - mean, data.ids))


@dataclass(frozen=True)
class PcaBasis:
    """Orthonormal projection basis: row k is the k-th principal direction."""

    mean: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64, copy=True)
        comps = np.array(self.components, dtype=np.float64, copy=True)
        if mean.ndim != 1 or comps.ndim != 2 or comps.shape[1] != mean.shape[0]:
            raise ValidationError("components must be (m, d) with a length-d mean")
        m, d = comps.shape
        if m < 1 or m > d:
            raise ValidationError("component count must satisfy 1 <= m <= d")
        gram = comps @ comps.T
        if np.max(np.abs(gram - np.eye(m))) > 1e-8:
            raise ValidationError("components must be orthonormal within 1e-8")
        mean.setflags(write=False)
        comps.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comps)

    @property
    def m(self) -> int:
        return self.components.shape[0]


def fit_pca(data: Dataset, m: int) -> PcaBasis:
    """Top-m eigenvectors of the sample covariance, eigenvalues descending.

    Each component's sign is fixed so its largest-magnitude entry is
    positive, making the basis deterministic.
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValidationError("m must be an integer >= 1")
    if m > min(data.n, data.dim):
        raise ValidationError(f"m={m} exceeds min(N, d) = {min(data.n, data.dim)}")
    mean = data.features.mean(axis=0)
    centered = data.features - mean
    cov = centered.T @ centered / max(data.n - 1, 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")[: int(m)]
    comps = evecs.T[order].copy()
    for row in comps:
        lead = np.argmax(np.abs(row))
        if row[lead] < 0:
            row *= -1.0
    return PcaBasis(mean, comps)


def apply_pca(basis: PcaBasis, data: Dataset) -> Dataset:
    """Project rows onto the basis: (x - mean) @ components.T."""
    if data.dim != basis.mean.shape[0]:
        raise ValidationError("dataset dimension does not match the basis")
    return Dataset((data.features - basis.mean) @ basis.components.T, data.ids)


@dataclass(frozen=True)
class GroundTruth:
    """Per-query neighbor id lists; threshold is None for label-derived truth."""

    neighbor_lists: tuple
    threshold: float | None

    def __post_init__(self):
        lists = tuple(np.asarray(lst, dtype=np.int64) for lst in self.neighbor_lists)
        for lst in lists:
            if lst.ndim != 1 or np.unique(lst).size != lst.size:
                raise ValidationError("neighbor lists must be 1-D and duplicate-free")
        object.__setattr__(self, "neighbor_lists", lists)

    @property
    def mean_count(self) -> float:
        return float(np.mean([len(lst) for lst in self.neighbor_lists]))


def _sq_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # Squared Euclidean distances between rows of A and rows of B.
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.maximum(sq, 0.0)


def calibrate_groundtruth(db: Dataset, queries: Dataset, target_avg: float) -> GroundTruth:
    """Distance-threshold groundtruth with a calibrated neighbor budget.

    The threshold is the (target_avg * Q)-th smallest of all query-to-database
    distances, so the mean neighbor list length comes out within one of
    target_avg. Neighbor lists hold database ids at distance <= threshold.
    """
    if db.dim != queries.dim:
        raise ValidationError("database and query dimensions differ")
    target_avg = float(target_avg)
    if not np.isfinite(target_avg) or target_avg < 1:
        raise ValidationError("target_avg must be >= 1")
    dists = np.sqrt(_sq_distances(queries.features, db.features))
    rank = int(round(target_avg * queries.n))
    if rank > dists.size:
        raise ValidationError(
            f"target_avg {target_avg} needs {rank} pooled distances, only {dists.size} exist"
        )
    pooled = np.sort(dists.ravel())
    threshold = float(pooled[rank - 1])
    lists = tuple(db.ids[dists[q] <= threshold] for q in range(queries.n))
    return GroundTruth(lists, threshold)


def calibrate_pair_threshold(data: Dataset, target_avg: float) -> float:
    """Within-set distance threshold giving each point about target_avg
    neighbors, self-pairs excluded."""
    target_avg = float(target_avg)
    if not np.isfinite(target_avg) or target_avg < 1:
        raise ValidationError("target_avg must be >= 1")
    if data.n < 2:
        raise ValidationError("need at least two points")
    iu, ju = np.triu_indices(data.n, k=1)
    dists = np.sqrt(_sq_distances(data.features, data.features))[iu, ju]
    rank = int(round(target_avg * data.n / 2.0))
    if rank < 1 or rank > dists.size:
        raise ValidationError(
            f"target_avg {target_avg} needs {rank} pair distances, only {dists.size} exist"
        )
    return float(np.sort(dists)[rank - 1])


def groundtruth_from_labels(db_ids, db_labels, query_labels) -> GroundTruth:
    """Class-label groundtruth: a query's neighbors are all database points
    sharing its label."""
    db_ids = np.asarray(db_ids, dtype=np.int64)
    db_labels = np.asarray(db_labels)
    query_labels = np.asarray(query_labels)
    if db_ids.shape != db_labels.shape or db_ids.ndim != 1 or query_labels.ndim != 1:
        raise ValidationError("ids and labels must be 1-D arrays of matching length")
    lists = tuple(db_ids[db_labels == lab] for lab in query_labels)
    return GroundTruth(lists, None)


def _sample_pairs(iu, ju, pos_mask, max_pairs, pos_fraction, rng) -> PairSet:
    if not isinstance(max_pairs, (int, np.integer)) or max_pairs < 1:
        raise ValidationError("max_pairs must be an integer >= 1")
    if not 0 < pos_fraction < 1:
        raise ValidationError("pos_fraction must lie strictly between 0 and 1")
    pos_idx = np.flatnonzero(pos_mask)
    neg_idx = np.flatnonzero(~pos_mask)
    budget = min(int(max_pairs), iu.size)
    n_pos = min(int(round(budget * pos_fraction)), pos_idx.size)
    n_neg = min(budget - n_pos, neg_idx.size)
    n_pos = min(budget - n_neg, pos_idx.size)
    take_pos = rng.choice(pos_idx, size=n_pos, replace=False) if n_pos else np.empty(0, np.int64)
    take_neg = rng.choice(neg_idx, size=n_neg, replace=False) if n_neg else np.empty(0, np.int64)
    chosen = np.concatenate([take_pos, take_neg]).astype(np.int64)
    order = np.lexsort((ju[chosen], iu[chosen]))
    chosen = chosen[order]
    return PairSet(iu[chosen], ju[chosen], pos_mask[chosen].astype(np.int64))


def make_pairs(db: Dataset, gt_threshold: float, max_pairs: int, pos_fraction: float,
               rng: np.random.Generator) -> PairSet:
    """Sample supervised pairs without replacement from all row pairs.

    A pair is similar (s=1) when its Euclidean distance is <= gt_threshold.
    Sampling targets pos_fraction similar pairs, falling back to whatever is
    available; pairs come out in canonical sorted order.
    """
    if db.n < 2:
        raise ValidationError("need at least two points to form pairs")
    iu, ju = np.triu_indices(db.n, k=1)
    dists = np.sqrt(_sq_distances(db.features, db.features))[iu, ju]
    return _sample_pairs(iu, ju, dists <= float(gt_threshold), max_pairs, pos_fraction, rng)


def make_pairs_from_labels(labels, max_pairs: int, pos_fraction: float,
                           rng: np.random.Generator) -> PairSet:
    """Sample supervised pairs with s=1 exactly when labels agree."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size < 2:
        raise ValidationError("labels must be a 1-D array with at least two entries")
    iu, ju = np.triu_indices(labels.size, k=1)
    return _sample_pairs(iu, ju, labels[iu] == labels[ju], max_pairs, pos_fraction, rng)


def synth_clusters(n_clusters: int, per_cluster: int, d: int, separation: float,
                   noise_sigma: float, rng: np.random.Generator) -> tuple[Dataset, np.ndarray]:
    """Gaussian blobs around centers at pairwise distance >= separation.

    Centers are drawn so their typical pairwise distance is close to
    `separation` (candidates violating the minimum are rejected), making the
    parameter the actual scale of cluster separation rather than a loose
    bound. Rows are cluster-major (cluster 0 first). Returns the dataset and
    the integer cluster label of each row.
    """
    if n_clusters < 1 or per_cluster < 1 or d < 1:
        raise ValidationError("n_clusters, per_cluster, and d must be >= 1")
    separation = float(separation)
    noise_sigma = float(noise_sigma)
    if separation < 0 or noise_sigma < 0:
        raise ValidationError("separation and noise_sigma must be >= 0")
    # i.i.d. N(0, s^2 I) centers have E||c1 - c2||^2 = 2 d s^2
    scale = separation / np.sqrt(2.0 * d) if separation > 0 else 1.0
    centers = []
    attempts = 0
    while len(centers) < n_clusters:
        attempts += 1
        if attempts > 1000 * n_clusters:
            raise RankHashError("could not place cluster centers at the requested separation")
        cand = rng.standard_normal(d) * scale
        if all(np.linalg.norm(cand - c) >= separation for c in centers):
            centers.append(cand)
    centers = np.stack(centers)
    labels = np.repeat(np.arange(n_clusters, dtype=np.int64), per_cluster)
    noise = rng.standard_normal((n_clusters * per_cluster, d)) * noise_sigma
    return Dataset.from_features(centers[labels] + noise), labels


def split_dataset(data: Dataset, n_train: int, n_query: int,
                  rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    """Disjoint random split keeping original ids."""
    if n_train < 1 or n_query < 1:
        raise ValidationError("split sizes must be >= 1")
    if n_train + n_query > data.n:
        raise ValidationError(
            f"split needs {n_train + n_query} rows, dataset has {data.n}"
        )
    perm = rng.permutation(data.n)
    return data.subset(perm[:n_train]), data.subset(perm[n_train : n_train + n_query])
