"""Verification lab for the regularity of the sample mean conditioned on its fluctuations."""

from .errors import (
    CondMeanError,
    ConvergenceError,
    DegenerateSampleError,
    EmptyFiberError,
    InsufficientMassError,
    OutOfSupportError,
    PreconditionError,
    SamplingError,
)
from .fiber import (
    FiberSegment,
    conditional_interval_prob_uniform,
    fiber_from_offsets,
    fiber_length_brute_force,
    fiber_lengths,
    fiber_through,
    sample_extremes,
)
from .mc import McEstimate, estimate_event_prob, estimate_event_probs, sample_iid, wilson_interval
from .regularity import (
    LambdaFunction,
    continuity_modulus_uniform,
    gaussian_interval_bound,
    interval_hit_prob,
    smooth_theorem_bound,
    theorem_bound_uniform,
)
from .sample import (
    MeanFluctDecomp,
    SampleVector,
    SmoothDensity,
    StandardGaussian,
    Uniform,
    decompose,
    helmert_transform,
    reconstruct,
)

__version__ = "0.1.0"
