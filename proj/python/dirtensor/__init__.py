"""Python bindings for the dirtensor C++ core."""

from ._dirtensor import (
    anchor_words,
    c1_constant,
    c2_constant,
    contraction_experiment,
    desk_instance,
    diagonal_from_moments,
    identifiability_probe,
    kruskal_rank,
    lda_density,
    lda_from_mixture_marginals,
    linear_moments,
    mixture_density,
    mixture_from_lda_marginals,
    moment_tensor,
    moment_tensor_from_diagonals,
    monte_carlo_linear_moments,
    tv_distance,
    wasserstein,
)

__all__ = [
    "anchor_words",
    "c1_constant",
    "c2_constant",
    "contraction_experiment",
    "desk_instance",
    "diagonal_from_moments",
    "identifiability_probe",
    "kruskal_rank",
    "lda_density",
    "lda_from_mixture_marginals",
    "linear_moments",
    "mixture_density",
    "mixture_from_lda_marginals",
    "moment_tensor",
    "moment_tensor_from_diagonals",
    "monte_carlo_linear_moments",
    "tv_distance",
    "wasserstein",
]
