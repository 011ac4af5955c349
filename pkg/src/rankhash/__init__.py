"""Learned rank-order hashing with baselines and retrieval evaluation.

The package trains hash functions that encode a vector by the index of its
largest learned projection, one symbol per projection matrix. Codes support
hash-table lookup and Hamming/weighted kNN retrieval, evaluated against
data-agnostic winner-take-all and random-hyperplane baselines at equal
packed-bit budgets.
"""

from .core import (
    Dataset,
    FormatError,
    HashModel,
    Hyperparams,
    PairSet,
    RankHashError,
    ValidationError,
    child_seed,
    init_projection,
    load_model,
    save_model,
    seeded_rng,
)
from .data import (
    GroundTruth,
    PcaBasis,
    apply_center_and_normalize,
    apply_pca,
    calibrate_groundtruth,
    calibrate_pair_threshold,
    center_and_normalize,
    fit_pca,
    groundtruth_from_labels,
    load_csv,
    load_fvec,
    make_pairs,
    make_pairs_from_labels,
    row_normalize,
    save_fvec,
    split_dataset,
    synth_clusters,
)
from .evaluation import (
    HashTable,
    RetrievalResult,
    aggregate_runs,
    average_precision,
    build_table,
    knn_hamming,
    knn_weighted,
    lookup,
    pr_curve_by_radius,
    precision,
    recall,
    symbol_hamming,
    weighted_similarity,
)
from .hashers import (
    LshSpec,
    WtaSpec,
    code_bit_length,
    encode_dataset,
    lsh_as_rsh,
    lsh_encode,
    make_lsh_spec,
    make_wta_spec,
    pack_code,
    rsh_encode,
    symbol_bits,
    unpack_code,
    wta_as_rsh,
    wta_encode,
)
from .learning import (
    AdjustedArgmax,
    BitTrace,
    ObjectiveValues,
    TrainLog,
    boost_step,
    loss_adjusted_inference,
    objective,
    pair_error,
    pair_gradient_step,
    surrogate_pair,
    train_rsh,
    train_rsh_bit,
    train_srsh,
)

__version__ = "0.1.0"
