"""Core domain types, deterministic randomness, and model serialization.

A hash model is a stack of projection matrices. Each matrix W maps an input
vector x to K projection values W @ x, and the index of the largest value is
the emitted symbol, so a model with L matrices turns x into a length-L code
over the alphabet {0, ..., K-1}. Everything in this module is immutable after
construction and safe to share across threads or processes.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "RankHashError",
    "ValidationError",
    "FormatError",
    "Dataset",
    "PairSet",
    "Hyperparams",
    "HashModel",
    "seeded_rng",
    "child_seed",
    "init_projection",
    "save_model",
    "load_model",
    "MAX_SEED",
]


class RankHashError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(RankHashError):
    """An input violates a documented invariant."""


class FormatError(RankHashError):
    """A file or byte stream cannot be parsed."""


MAX_SEED = 2**64 - 1

# Serialized model layout (all integers little-endian):
#   magic "RSHM1" | u16 version | u32 K | u32 L | u32 d | u8 flags
#   | f64 rho, lam, eta, tol, eps_min | u32 epochs | u64 seed
#   | L*K*d f64 projections (row-major) | L f64 weights if flags & 1
_MODEL_MAGIC = b"RSHM1"
_MODEL_VERSION = 1
_FLAG_WEIGHTS = 1


def seeded_rng(seed: int) -> np.random.Generator:
    """Return the package-wide deterministic generator (PCG64) for a seed.

    The generator family is fixed so that identical seeds reproduce identical
    streams across runs and platforms.
    """
    _check_seed(seed, "seed")
    return np.random.Generator(np.random.PCG64(seed))


def child_seed(seed: int, index: int) -> int:
    """Derive an independent child seed from (seed, index).

    Uses SHA-256 so the derivation is stable across platforms and Python
    versions. Child streams for distinct indices are independent, which lets
    per-bit training run in any order (or in parallel) with serial results.
    """
    _check_seed(seed, "seed")
    if not isinstance(index, (int, np.integer)):
        raise ValidationError("index must be an integer")
    digest = hashlib.sha256(b"rankhash:%d:%d" % (seed, index)).digest()
    return int.from_bytes(digest[:8], "little")


def _check_seed(seed, name: str) -> None:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValidationError(f"{name} must be an integer")
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValidationError(f"{name} must be in [0, 2**64)")


def init_projection(K: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a fresh K x d projection matrix with standard normal entries."""
    if not isinstance(K, (int, np.integer)) or K < 2:
        raise ValidationError("K must be at least 2; argmax over a single projection is constant")
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValidationError("d must be at least 1")
    return rng.standard_normal((int(K), int(d)))


def _frozen_array(values, dtype) -> np.ndarray:
    out = np.array(values, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix plus stable integer row identities."""

    features: np.ndarray
    ids: np.ndarray

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float64, copy=True)
        if feats.ndim != 2:
            raise ValidationError("features must be a 2-D array")
        n, d = feats.shape
        if n < 1 or d < 1:
            raise ValidationError("features must have at least one row and one column")
        if not np.all(np.isfinite(feats)):
            raise ValidationError("features must be finite")
        ids = np.array(self.ids, dtype=np.int64, copy=True)
        if ids.shape != (n,):
            raise ValidationError("ids must be a 1-D array with one entry per row")
        if np.unique(ids).size != n:
            raise ValidationError("ids must be unique")
        feats.setflags(write=False)
        ids.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_features(cls, features) -> "Dataset":
        features = np.asarray(features, dtype=np.float64)
        return cls(features, np.arange(features.shape[0], dtype=np.int64))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> "Dataset":
        """Select rows (keeping their ids) as a new Dataset."""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.features[rows], self.ids[rows])


@dataclass(frozen=True)
class PairSet:
    """Supervised pairs (i, j, s): row indices with s=1 similar, s=0 dissimilar.

    Pairs are canonical (i < j) and duplicate-free. Indices refer to rows of
    the dataset the pairs were sampled from, not to Dataset ids.
    """

    i: np.ndarray
    j: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        i = _frozen_array(self.i, np.int64)
        j = _frozen_array(self.j, np.int64)
        s = _frozen_array(self.s, np.int64)
        if not (i.ndim == j.ndim == s.ndim == 1) or not (i.shape == j.shape == s.shape):
            raise ValidationError("i, j, s must be 1-D arrays of equal length")
        if i.size:
            if i.min() < 0:
                raise ValidationError("pair indices must be non-negative")
            if not np.all(i < j):
                raise ValidationError("pairs must be canonical with i < j")
            if not np.all((s == 0) | (s == 1)):
                raise ValidationError("s must contain only 0 or 1")
            if np.unique(np.stack([i, j], axis=1), axis=0).shape[0] != i.size:
                raise ValidationError("pairs must be duplicate-free")
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "s", s)

    def __len__(self) -> int:
        return self.i.size


@dataclass(frozen=True)
class Hyperparams:
    """Training hyperparameters shared by the batch and sequential trainers.

    rho weighs similar pairs that land on different symbols, lam weighs
    dissimilar pairs that collide. eta is the base learning rate (decayed per
    epoch), epochs the per-bit cap, tol the relative-objective stopping
    threshold, and eps_min the clamp applied to per-bit weighted error rates
    in the sequential trainer.
    """

    K: int
    L: int
    rho: float = 1.0
    lam: float = 1.0
    eta: float = 0.1
    epochs: int = 50
    tol: float = 1e-4
    seed: int = 0
    eps_min: float = 1e-4

    def __post_init__(self):
        if not isinstance(self.K, (int, np.integer)) or self.K < 2:
            raise ValidationError("K must be an integer >= 2")
        if not isinstance(self.L, (int, np.integer)) or self.L < 1:
            raise ValidationError("L must be an integer >= 1")
        for name in ("rho", "lam", "eta", "tol", "eps_min"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating)) or isinstance(value, bool):
                raise ValidationError(f"{name} must be a real number")
            if not np.isfinite(value):
                raise ValidationError(f"{name} must be finite")
            object.__setattr__(self, name, float(value))
        if self.rho < 0:
            raise ValidationError("rho must be >= 0")
        if self.lam < 0:
            raise ValidationError("lam must be >= 0")
        if self.eta <= 0:
            raise ValidationError("eta must be > 0")
        if self.tol < 0:
            raise ValidationError("tol must be >= 0")
        if not 0 < self.eps_min < 0.5:
            raise ValidationError("eps_min must lie strictly between 0 and 0.5")
        if not isinstance(self.epochs, (int, np.integer)) or self.epochs < 1:
            raise ValidationError("epochs must be an integer >= 1")
        _check_seed(self.seed, "seed")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "epochs", int(self.epochs))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class HashModel:
    """L projection matrices, optional per-bit fusion weights, and the
    hyperparameters they were trained with."""

    projections: np.ndarray
    weights: np.ndarray | None
    hyper: Hyperparams

    def __post_init__(self):
        proj = np.array(self.projections, dtype=np.float64, copy=True)
        if proj.ndim != 3:
            raise ValidationError("projections must have shape (L, K, d)")
        L, K, d = proj.shape
        if L < 1 or K < 2 or d < 1:
            raise ValidationError("projections must satisfy L >= 1, K >= 2, d >= 1")
        if not np.all(np.isfinite(proj)):
            raise ValidationError("projections must be finite")
        if K != self.hyper.K or L != self.hyper.L:
            raise ValidationError("projection shape must match hyper.K and hyper.L")
        proj.setflags(write=False)
        object.__setattr__(self, "projections", proj)
        if self.weights is not None:
            w = np.array(self.weights, dtype=np.float64, copy=True)
            if w.shape != (L,):
                raise ValidationError("weights must be a length-L vector")
            if not np.all(np.isfinite(w)):
                raise ValidationError("weights must be finite")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    @property
    def L(self) -> int:
        return self.projections.shape[0]

    @property
    def K(self) -> int:
        return self.projections.shape[1]

    @property
    def d(self) -> int:
        return self.projections.shape[2]


def save_model(model: HashModel, path=None) -> bytes:
    """Serialize a model to the package's binary format.

    Returns the bytes; also writes them to `path` when given. The format is
    self-describing (magic, version, shape header) and round-trips bit-exactly.
    """
    if not isinstance(model, HashModel):
        raise ValidationError("save_model expects a HashModel")
    h = model.hyper
    flags = _FLAG_WEIGHTS if model.weights is not None else 0
    blob = bytearray()
    blob += _MODEL_MAGIC
    blob += struct.pack("<H", _MODEL_VERSION)
    blob += struct.pack("<III", model.K, model.L, model.d)
    blob += struct.pack("<B", flags)
    blob += struct.pack("<dddddIQ", h.rho, h.lam, h.eta, h.tol, h.eps_min, h.epochs, h.seed)
    blob += model.projections.astype("<f8").tobytes(order="C")
    if model.weights is not None:
        blob += model.weights.astype("<f8").tobytes()
    data = bytes(blob)
    if path is not None:
        Path(path).write_bytes(data)
    return data


def load_model(source) -> HashModel:
    """Parse a model from bytes or from a file path.

    Raises FormatError naming the byte offset for malformed or truncated
    input; never returns a partially parsed model.
    """
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        raise ValidationError("load_model expects bytes or a path")

    pos = 0

    def take(count: int, what: str) -> bytes:
        nonlocal pos
        if pos + count > len(data):
            raise FormatError(
                f"truncated model: need {count} bytes for {what} at offset {pos}, "
                f"have {len(data) - pos}"
            )
        chunk = data[pos : pos + count]
        pos += count
        return chunk

    magic = take(len(_MODEL_MAGIC), "magic")
    if magic != _MODEL_MAGIC:
        raise FormatError(f"bad magic {magic!r} at offset 0, expected {_MODEL_MAGIC!r}")
    (version,) = struct.unpack("<H", take(2, "version"))
    if version != _MODEL_VERSION:
        raise FormatError(f"unsupported model format version {version} at offset 5")
    K, L, d = struct.unpack("<III", take(12, "shape header"))
    if K < 2 or L < 1 or d < 1:
        raise FormatError(f"invalid shape header K={K}, L={L}, d={d} at offset 7")
    (flags,) = struct.unpack("<B", take(1, "flags"))
    if flags & ~_FLAG_WEIGHTS:
        raise FormatError(f"unknown flag bits {flags:#x} at offset 19")
    rho, lam, eta, tol, eps_min, epochs, seed = struct.unpack(
        "<dddddIQ", take(52, "hyperparameter block")
    )
    proj_bytes = take(L * K * d * 8, "projection payload")
    projections = np.frombuffer(proj_bytes, dtype="<f8").reshape(L, K, d)
    weights = None
    if flags & _FLAG_WEIGHTS:
        weights = np.frombuffer(take(L * 8, "weight payload"), dtype="<f8")
    if pos != len(data):
        raise FormatError(f"unexpected trailing bytes at offset {pos}")
    try:
        hyper = Hyperparams(
            K=K, L=L, rho=rho, lam=lam, eta=eta, epochs=int(epochs),
            tol=tol, seed=int(seed), eps_min=eps_min,
        )
        return HashModel(projections, weights, hyper)
    except ValidationError as exc:
        raise FormatError(f"model payload violates invariants: {exc}") from exc
