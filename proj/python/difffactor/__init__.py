"""Commutator factorization of torus diffeomorphisms with replayable certificates."""

from ._difffactor import (
    BasinError,
    ConvergenceError,
    Error,
    FormatError,
    InvalidArgument,
    TorusDiffeo,
    bounds,
    decompose,
    factor,
    generate_random_diffeo,
    n_lower,
    solve_cohomological,
    verify,
)

__all__ = [
    "BasinError",
    "ConvergenceError",
    "Error",
    "FormatError",
    "InvalidArgument",
    "TorusDiffeo",
    "bounds",
    "decompose",
    "factor",
    "generate_random_diffeo",
    "n_lower",
    "solve_cohomological",
    "verify",
]
