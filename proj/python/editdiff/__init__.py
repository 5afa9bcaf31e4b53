"""Edit-based discrete diffusion for protein sequences."""

from ._core import (
    DivergenceError,
    EmptySequenceError,
    Error,
    FormatError,
    Model,
    Profile,
    blosum_kernel,
    edit_script,
    evolve,
    forward_noise,
    generate,
    indel_score,
    spearman,
    substitution_score,
    train,
    transition_matrix,
)

__all__ = [
    "DivergenceError",
    "EmptySequenceError",
    "Error",
    "FormatError",
    "Model",
    "Profile",
    "blosum_kernel",
    "edit_script",
    "evolve",
    "forward_noise",
    "generate",
    "indel_score",
    "spearman",
    "substitution_score",
    "train",
    "transition_matrix",
]
