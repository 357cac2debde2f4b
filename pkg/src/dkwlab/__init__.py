"""dkwlab: a simulation laboratory for uniform empirical-CDF deviation
bounds over finite classes of linear functionals."""

__version__ = "0.1.0"

from .laws import (Law1D, discrete_law, ecdf_law, laplace_law, pareto_law,
                   rademacher_law, std_normal_cdf, std_normal_law,
                   two_sparse_projection_law, uniform_coord_law)
from .models import (LazySample, SampleBatch, VectorModel,
                     oracle_projection_law, sample, splitmix64)
from .ecdf import (DeviationReport, Ecdf, build_ecdf, ecdf_quantile,
                   grid_deviation, ks_sup_deviation, pointwise_deviation,
                   sup_distance_between_ecdfs)
from .classes import (ClassDeviationReport, DirectionSet, class_sup_ks,
                      dense_directions, pointwise_class_deviation, project,
                      read_directions, sparse_directions, write_directions)
from .complexity import (AdmissibleSequence, ComplexityReport,
                         complexity_report, covering_number,
                         entropy_functionals, gamma_upper,
                         greedy_admissible_sequence, packing_number,
                         sudakov_lower_formula)
from .constructions import (CounterexampleScenario, atom_scenario,
                            heavy_tail_scenario, run_counterexample_trials,
                            spiked_set, variance_scenario)
from .estimators import (EstimateRecord, MonotonePhi, quantile_integral,
                         trimmed_mean, w1_between_ecdfs, w1_empirical_vs_law)
from .checks import (InequalityCheck, check_grid_continuity,
                     check_level_set_symmetric_difference,
                     check_perturbation_stability, check_subexp_tail)
from .harness import (ExperimentConfig, run_experiment, scaling_sweep,
                      validate_config)
