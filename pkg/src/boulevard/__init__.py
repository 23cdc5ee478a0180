"""Boulevard: averaged, honest, subsampled gradient boosting with a kernel-ridge limit.

Features:
- Completely randomized and greedy (gradient-adaptive) tree structures with
  leaf-size, diameter and depth constraints
- Boulevard boosting with truncation, rescaled predictions and tail snapshots
- Random forest, GBT and SGBT baselines sharing the same tree machinery
- Random forest kernel estimation (Monte Carlo, exhaustive, from an ensemble)
  and the kernel ridge fixed point Boulevard converges to
- Reproduction intervals and Kolmogorov-Smirnov normality checks
- A stochastic contraction simulation lab
- An experiment bench with tidy CSV output, manifests and a JSONL run ledger

Quick Start:
    import numpy as np
    from boulevard import BoulevardConfig, boulevard_fit, boulevard_predict

    X = np.random.default_rng(0).random((500, 5))
    Y = X[:, 0] + 3 * X[:, 1]
    model = boulevard_fit(X, Y, BoulevardConfig(n_trees=200))
    boulevard_predict(model, X[0])
"""

__version__ = "0.1.0"

from .boosting import boulevard_fit, boulevard_predict, tail_snapshot_fit
from .models.config import BoulevardConfig, StructureConstraints, StructureMode

__all__ = [
    "BoulevardConfig",
    "StructureConstraints",
    "StructureMode",
    "boulevard_fit",
    "boulevard_predict",
    "tail_snapshot_fit",
    "__version__",
]
