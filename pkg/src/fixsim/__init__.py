"""Fixation probabilities and times for two-strategy games in finite populations."""

__version__ = "0.1.0"

from .errors import (BelowN0, CapExceeded, ConfigError, DegenerateInput, DomainError, DomainExit,
                     DominanceViolated, FixsimError, InvalidPopulation, NotPD, NumericalError,
                     SingularSystem, Subcritical)
from .game import (DominanceCertificate, GameSpec, PopulationPoint, certify_dominance, drift,
                   drift_via_heterozygosity, find_N0, fitness, fitness_ratio, heterozygosity,
                   offspring_mean, payoffs, success_prob)
from .chains import (ChainKernel, KernelKind, McEstimate, RngStream, Trajectory, empirical_time_cdf,
                     monte_carlo_fixation, simulate, verify_stochastic_monotonicity)
from .exact import (FixationVector, check_one_step_martingale, moran_closed_form,
                    moran_closed_form_vector, parameter_sensitivity, solve_fixation)
from .bounds import (BoundReport, PDTightness, TightnessKind, classify_pd_tightness,
                     moran_fixation_bounds, moran_limit, wf_fixation_bounds, wf_limit)
from .branching import (extinction_cdf_bounds, extinction_cdf_exact, fixation_time_window,
                        max_exceedance_bound, simulate_bp, solve_q, theta_eta)
from .coupling import (FiniteDistribution, coupled_wf_bp_simulate, estimate_C0, maximal_coupling_sample,
                       mismatch_probability, monotone_triple_paths, monotone_triple_simulate, tv_distance)
from .fitting import FitResult, fit_qn
