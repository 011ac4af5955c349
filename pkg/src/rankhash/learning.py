"""Pairwise surrogate loss and the online trainers.

The empirical error of a code bit charges rho for a similar pair (s=1) whose
symbols differ and lam for a dissimilar pair (s=0) whose symbols collide.
Because the hash is an argmax, that error is not differentiable; training
instead minimizes a convex-in-the-max upper bound per pair:

    max_{k,l} [ y_i[k] + y_j[l] + e(k, l, s) ] - y_i[h_i] - y_j[h_j]

with y = W @ x and h the emitted symbols. The maximizing (k, l), found by
`loss_adjusted_inference`, is the error-adjusted competitor; the online step
moves the rows of W so the emitted symbols beat it.

`train_rsh` learns all L projection matrices independently from derived
child seeds. `train_srsh` learns them sequentially, reweighting pairs after
each bit the way boosting does, and returns per-bit fusion weights theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    Dataset,
    HashModel,
    Hyperparams,
    PairSet,
    ValidationError,
    child_seed,
    init_projection,
    seeded_rng,
)

__all__ = [
    "AdjustedArgmax",
    "ObjectiveValues",
    "BitTrace",
    "TrainLog",
    "pair_error",
    "loss_adjusted_inference",
    "surrogate_pair",
    "pair_gradient_step",
    "objective",
    "boost_step",
    "train_rsh",
    "train_rsh_bit",
    "train_srsh",
]


def _check_penalties(rho: float, lam: float) -> tuple[float, float]:
    rho = float(rho)
    lam = float(lam)
    if not (np.isfinite(rho) and rho >= 0):
        raise ValidationError("rho must be finite and >= 0")
    if not (np.isfinite(lam) and lam >= 0):
        raise ValidationError("lam must be finite and >= 0")
    return rho, lam


def _check_similarity(s) -> int:
    if isinstance(s, bool) or (not isinstance(s, (int, np.integer))):
        raise ValidationError("s must be the integer 0 or 1")
    s = int(s)
    if s not in (0, 1):
        raise ValidationError("s must be the integer 0 or 1")
    return s


def pair_error(hi: int, hj: int, s: int, rho: float, lam: float) -> float:
    """Misranking cost of one coded pair: rho if a similar pair splits,
    lam if a dissimilar pair collides, else 0."""
    s = _check_similarity(s)
    rho, lam = _check_penalties(rho, lam)
    if s == 1:
        return rho if hi != hj else 0.0
    return lam if hi == hj else 0.0


class AdjustedArgmax(NamedTuple):
    gi_star: int
    gj_star: int
    value: float


def _adjusted_matrix(yi: np.ndarray, yj: np.ndarray, s: int, rho: float, lam: float) -> np.ndarray:
    # m[k, l] = yi[k] + yj[l] + (lam*(1-s) if k == l else rho*s)
    m = np.add.outer(yi, yj)
    kk = np.arange(yi.shape[0])
    diag = m[kk, kk].copy()
    m += rho * s
    m[kk, kk] = diag + lam * (1 - s)
    return m


def loss_adjusted_inference(yi, yj, s: int, rho: float, lam: float) -> AdjustedArgmax:
    """Maximize projection score plus pair error over all K x K symbol pairs.

    Returns the lexicographically smallest maximizer (row-major scan) and the
    attained value. O(K^2).
    """
    s = _check_similarity(s)
    rho, lam = _check_penalties(rho, lam)
    yi = np.asarray(yi, dtype=np.float64)
    yj = np.asarray(yj, dtype=np.float64)
    if yi.ndim != 1 or yi.shape != yj.shape or yi.shape[0] < 2:
        raise ValidationError("yi and yj must be 1-D vectors of equal length K >= 2")
    m = _adjusted_matrix(yi, yj, s, rho, lam)
    K = yi.shape[0]
    flat = int(np.argmax(m))
    gi, gj = flat // K, flat % K
    return AdjustedArgmax(gi, gj, float(m[gi, gj]))


def surrogate_pair(W, xi, xj, s: int, rho: float, lam: float) -> float:
    """Upper bound on `pair_error` for one pair under projections W.

    Equals the adjusted maximum minus the scores of the emitted symbols;
    always >= the actual pair error and >= 0.
    """
    W = np.asarray(W, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    xj = np.asarray(xj, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] < 2:
        raise ValidationError("W must be a (K, d) matrix with K >= 2")
    if xi.shape != (W.shape[1],) or xj.shape != (W.shape[1],):
        raise ValidationError("xi and xj must match the projection input dimension")
    yi = W @ xi
    yj = W @ xj
    adj = loss_adjusted_inference(yi, yj, s, rho, lam)
    # grouped so the bound collapses to exactly 0.0 when both losses are 0:
    # the matrix cell at the emitted symbols holds this same single-rounded sum
    return adj.value - (float(yi[np.argmax(yi)]) + float(yj[np.argmax(yj)]))


def pair_gradient_step(W, xi, xj, s: int, hyper: Hyperparams, weight: float = 1.0) -> np.ndarray:
    """One online update from a single pair.

    Adds eta * weight * x to the row of each emitted symbol and subtracts it
    from the row of the adjusted competitor, per point. Returns W unchanged
    (same object) when emitted symbols and competitors coincide.
    """
    W = np.asarray(W, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    xj = np.asarray(xj, dtype=np.float64)
    weight = float(weight)
    if not (np.isfinite(weight) and weight > 0):
        raise ValidationError("weight must be finite and > 0")
    yi = W @ xi
    yj = W @ xj
    hi = int(np.argmax(yi))
    hj = int(np.argmax(yj))
    adj = loss_adjusted_inference(yi, yj, s, hyper.rho, hyper.lam)
    if adj.gi_star == hi and adj.gj_star == hj:
        return W
    step = hyper.eta * weight
    out = W.copy()
    if adj.gi_star != hi:
        out[hi] += step * xi
        out[adj.gi_star] -= step * xi
    if adj.gj_star != hj:
        out[hj] += step * xj
        out[adj.gj_star] -= step * xj
    return out


class ObjectiveValues(NamedTuple):
    surrogate: float
    empirical: float


def _objective_arrays(X, pi, pj, ps, W, rho, lam) -> tuple[float, float]:
    # Vectorized sum of surrogate_pair and pair_error over all pairs, with
    # the same per-entry float operations as the scalar paths.
    Y = X @ W.T
    yi = Y[pi]
    yj = Y[pj]
    K = W.shape[0]
    kk = np.arange(K)
    m = yi[:, :, None] + yj[:, None, :]
    diag = m[:, kk, kk].copy()
    sf = ps.astype(np.float64)
    m += (rho * sf)[:, None, None]
    m[:, kk, kk] = diag + (lam * (1.0 - sf))[:, None]
    value = m.reshape(m.shape[0], -1).max(axis=1)
    surrogate = value - (yi.max(axis=1) + yj.max(axis=1))
    hi = yi.argmax(axis=1)
    hj = yj.argmax(axis=1)
    empirical = np.where(ps == 1, rho * (hi != hj), lam * (hi == hj))
    return float(surrogate.sum()), float(empirical.sum())


def objective(data: Dataset, pairs: PairSet, W, hyper: Hyperparams) -> ObjectiveValues:
    """Total surrogate and total empirical error of one projection matrix."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape != (hyper.K, data.dim):
        raise ValidationError("W must have shape (hyper.K, data.dim)")
    X, pi, pj, ps = _prepare(data, pairs, hyper, require_pairs=True)
    surrogate, empirical = _objective_arrays(X, pi, pj, ps, W, hyper.rho, hyper.lam)
    return ObjectiveValues(surrogate, empirical)


@dataclass
class BitTrace:
    """Per-bit training record: objective traces plus, for the sequential
    trainer, the weighted error rate, fusion weight, and pair-weight state."""

    bit: int
    objective_trace: list[float]
    empirical_trace: list[float]
    eps: float | None = None
    theta: float | None = None
    alpha_sum: float | None = None
    alpha_min: float | None = None


@dataclass
class TrainLog:
    bits: list[BitTrace] = field(default_factory=list)


def _prepare(data: Dataset, pairs: PairSet, hyper: Hyperparams, require_pairs: bool):
    if require_pairs and len(pairs) == 0:
        raise ValidationError("training requires at least one pair")
    if len(pairs) and int(pairs.j.max()) >= data.n:
        raise ValidationError("pair indices exceed the dataset size")
    return data.features, pairs.i, pairs.j, pairs.s


def _train_bit(X, pi, pj, ps, hyper: Hyperparams, bit_seed: int, alpha=None):
    """Online training of one projection matrix.

    Epochs visit the pairs in a freshly shuffled order with step size
    eta / (1 + epoch); training stops at the epoch cap or when the relative
    change of the surrogate objective between epochs drops below tol.
    """
    rng = seeded_rng(bit_seed)
    K = hyper.K
    W = init_projection(K, X.shape[1], rng)
    rho, lam = hyper.rho, hyper.lam
    omega, emp = _objective_arrays(X, pi, pj, ps, W, rho, lam)
    surr_trace = [omega]
    emp_trace = [emp]
    kk = np.arange(K)
    m = np.empty((K, K), dtype=np.float64)
    for epoch in range(hyper.epochs):
        base_step = hyper.eta / (1.0 + epoch)
        order = rng.permutation(pi.size)
        for t in order:
            i = pi[t]
            j = pj[t]
            s = ps[t]
            xi = X[i]
            xj = X[j]
            yi = W @ xi
            yj = W @ xj
            hi = int(yi.argmax())
            hj = int(yj.argmax())
            np.add.outer(yi, yj, out=m)
            if s:
                diag = m[kk, kk].copy()
                m += rho
                m[kk, kk] = diag
            else:
                m[kk, kk] += lam
            flat = int(m.argmax())
            gi = flat // K
            gj = flat - gi * K
            if gi == hi and gj == hj:
                continue
            step = base_step if alpha is None else base_step * alpha[t]
            if gi != hi:
                W[hi] += step * xi
                W[gi] -= step * xi
            if gj != hj:
                W[hj] += step * xj
                W[gj] -= step * xj
        omega_new, emp_new = _objective_arrays(X, pi, pj, ps, W, rho, lam)
        surr_trace.append(omega_new)
        emp_trace.append(emp_new)
        if abs(omega_new - omega) / max(abs(omega), 1e-12) < hyper.tol:
            break
        omega = omega_new
    return W, surr_trace, emp_trace


def train_rsh(data: Dataset, pairs: PairSet, hyper: Hyperparams, log: TrainLog | None = None) -> HashModel:
    """Learn L projection matrices independently.

    Bit l trains from child_seed(hyper.seed, l), so results do not depend on
    the order bits are trained in, and identical seeds reproduce identical
    models bit for bit.
    """
    X, pi, pj, ps = _prepare(data, pairs, hyper, require_pairs=True)
    mats = []
    for l in range(hyper.L):
        W, surr, emp = _train_bit(X, pi, pj, ps, hyper, child_seed(hyper.seed, l))
        mats.append(W)
        if log is not None:
            log.bits.append(BitTrace(bit=l, objective_trace=surr, empirical_trace=emp))
    return HashModel(np.stack(mats), None, hyper)


def train_rsh_bit(data: Dataset, pairs: PairSet, hyper: Hyperparams, bit_seed: int) -> np.ndarray:
    """Train a single projection matrix from an explicit seed.

    `train_rsh` is exactly this, run once per bit with derived child seeds.
    """
    X, pi, pj, ps = _prepare(data, pairs, hyper, require_pairs=True)
    W, _, _ = _train_bit(X, pi, pj, ps, hyper, bit_seed)
    return W


def boost_step(alpha, norm_err, eps_min: float):
    """One boosting-style reweighting round.

    norm_err holds per-pair errors normalized to [0, 1]. The weighted error
    rate eps is clamped to [eps_min, 1 - eps_min], theta = ln((1 - eps) / eps),
    and weights scale by exp(theta * norm_err), then rescale so their total is
    preserved. Returns (new_alpha, eps, theta).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    norm_err = np.asarray(norm_err, dtype=np.float64)
    if alpha.ndim != 1 or alpha.shape != norm_err.shape or alpha.size == 0:
        raise ValidationError("alpha and norm_err must be 1-D arrays of equal nonzero length")
    if alpha.min() <= 0:
        raise ValidationError("alpha must be strictly positive")
    if norm_err.min() < 0 or norm_err.max() > 1:
        raise ValidationError("norm_err must lie in [0, 1]")
    if not 0 < eps_min < 0.5:
        raise ValidationError("eps_min must lie strictly between 0 and 0.5")
    total = float(alpha.sum())
    eps = float((alpha * norm_err).sum() / total)
    eps = min(max(eps, eps_min), 1.0 - eps_min)
    theta = math.log((1.0 - eps) / eps)
    out = alpha * np.exp(theta * norm_err)
    out *= total / out.sum()
    return out, eps, theta


def train_srsh(data: Dataset, pairs: PairSet, hyper: Hyperparams, log: TrainLog | None = None) -> HashModel:
    """Learn L projection matrices sequentially with pair reweighting.

    Every pair starts at weight 1. Bit l trains with the current weights
    multiplying its update steps; afterwards the weighted error rate of its
    final code determines the fusion weight theta_l and the weights of erring
    pairs grow by exp(theta_l * normalized error), rescaled so the total
    weight stays equal to the pair count. The returned model carries the
    theta values for weighted ranking.
    """
    X, pi, pj, ps = _prepare(data, pairs, hyper, require_pairs=True)
    alpha = np.ones(pi.size, dtype=np.float64)
    emax = max(hyper.rho, hyper.lam)
    mats = []
    thetas = []
    for l in range(hyper.L):
        W, surr, emp = _train_bit(X, pi, pj, ps, hyper, child_seed(hyper.seed, l), alpha=alpha)
        Y = X @ W.T
        hi = Y[pi].argmax(axis=1)
        hj = Y[pj].argmax(axis=1)
        err = np.where(ps == 1, hyper.rho * (hi != hj), hyper.lam * (hi == hj))
        norm_err = err / emax if emax > 0 else np.zeros(pi.size)
        alpha, eps, theta = boost_step(alpha, norm_err, hyper.eps_min)
        mats.append(W)
        thetas.append(theta)
        if log is not None:
            log.bits.append(
                BitTrace(
                    bit=l,
                    objective_trace=surr,
                    empirical_trace=emp,
                    eps=eps,
                    theta=theta,
                    alpha_sum=float(alpha.sum()),
                    alpha_min=float(alpha.min()),
                )
            )
    return HashModel(np.stack(mats), np.asarray(thetas), hyper)
