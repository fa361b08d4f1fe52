"""Particle Monte Carlo library for lagged ratio estimation of dominant
eigenvalues, with an exact finite-state oracle and a walker engine."""

from ._kernels import BACKEND as kernel_backend
from .engine import Population, init_population, mutation, selection, step
from .estimators import (EstimateReport, LaggedAccumulator, StepRecord,
                         batch_means_variance, independent_ratio,
                         standard_estimator)
from .fk_core import (Eigentriple, FiniteFkModel, MeasureVector,
                      exact_eta_sequence, exact_particle_expectation,
                      lag_limit, phi_map, power_iteration, q_apply)
from .models import (FiniteModelSampler, GuidedHOModel,
                     HarmonicOscillatorModel, finite_adapter)
from .rng import RngStream, StreamRole

__version__ = "0.1.0"
