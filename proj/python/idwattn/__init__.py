"""Prototype networks with distance-based attention.

Thin wrapper around the compiled core: score functions, softmax and
inverse-distance weighting, the prototype / fc-relu architectures, AMSGrad
training with cosine annealing, two-moons and MNIST data handling, and
closed-form low-impact model editing by prototype injection.
"""

from idwattn._core import (
    AugmentResult,
    Dataset,
    EpochRecord,
    Error,
    FcReluNet,
    PrototypeNet,
    ScoreKind,
    TrainConfig,
    TrainLog,
    attend,
    compute_eta,
    cosine_lr,
    cross_entropy,
    evaluate,
    gen_moons,
    idw_weights,
    init_fc_relu_net,
    init_prototype_net,
    inject,
    load_mnist,
    load_model,
    pairwise_sq_dist,
    score,
    sigma_weights,
    softmax_rows,
    subset,
    train,
    voronoi_limit,
    __version__,
)

__all__ = [
    "AugmentResult",
    "Dataset",
    "EpochRecord",
    "Error",
    "FcReluNet",
    "PrototypeNet",
    "ScoreKind",
    "TrainConfig",
    "TrainLog",
    "attend",
    "compute_eta",
    "cosine_lr",
    "cross_entropy",
    "evaluate",
    "gen_moons",
    "idw_weights",
    "init_fc_relu_net",
    "init_prototype_net",
    "inject",
    "load_mnist",
    "load_model",
    "pairwise_sq_dist",
    "score",
    "sigma_weights",
    "softmax_rows",
    "subset",
    "train",
    "voronoi_limit",
    "__version__",
]
