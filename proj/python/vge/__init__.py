"""Variance-gated ensemble uncertainty."""

from ._vge import (
    VgeError,
    aucc,
    decompose,
    ece,
    epjs,
    epkl,
    gate,
    gradcheck,
    kendall,
    moments,
    roc_auc_fpr95,
    run_axioms,
    score,
    spearman,
    train_demo,
    vgmu,
    vgn_backward,
    vgn_forward,
)

__all__ = [
    "VgeError",
    "aucc",
    "decompose",
    "ece",
    "epjs",
    "epkl",
    "gate",
    "gradcheck",
    "kendall",
    "moments",
    "roc_auc_fpr95",
    "run_axioms",
    "score",
    "spearman",
    "train_demo",
    "vgmu",
    "vgn_backward",
    "vgn_forward",
]
