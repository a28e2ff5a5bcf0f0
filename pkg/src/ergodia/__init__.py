"""Operator calculus for shift endomorphisms on finite cylinder algebras."""
from .symspace import (
    DEFAULT_TOL,
    Bernoulli,
    CylFn,
    Density,
    DepthError,
    Markov,
    Measure,
    MeasureError,
    ShiftModel,
    admissible_words,
    cyl_mass,
    fiber_system,
    inner,
    is_sigma_inv_measurable,
    measure_from_config,
    norm,
)
from .kernels import BACKEND

__version__ = "0.1.0"
