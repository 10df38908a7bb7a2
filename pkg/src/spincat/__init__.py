"""Superposition sizes of spin-cluster cat states.

Quantifies how macroscopic a superposition of two molecular-nanomagnet
eigenstates is, by two complementary measures: the quantum Fisher
information of the best collective observable (in units of the cluster's
total spin), and the number of disjoint spin subsets that can each tell the
two components apart by a local measurement.
"""

from .basis import (BudgetExceeded, EmptySector, SectorBasis, SpinCluster,
                    SpinSite, enumerate_sector, format_half_integer,
                    sector_dimension)
from .correlations import (CorrelationData, Superposition,
                           correlations_of_state,
                           correlations_of_superposition,
                           export_correlations_csv,
                           staggered_magnetization_stats,
                           sublattice_spin_stats)
from .distinguishability import (DlmOptions, Infeasible, PartitionResult,
                                 SubsetTooLarge, d_lm,
                                 discrimination_probability, mask_sites,
                                 reduced_density_matrix, subset_mask)
from .fisher import (DirectionField, FisherOptions, FisherResult, d_rfi,
                     fisher_max, ideal_collinear_states,
                     ideal_ferrimagnet_sizes, maximize_fisher,
                     psi_max_states, staggered_field, variance_of_field)
from .models import (ClosedFormSizes, ModelRegistryEntry, V15Composite,
                     build_cr7ni, build_fe4, build_fe8, build_ideal_variant,
                     build_mn6_family, build_mn12, build_v15_effective,
                     chirality_states, chirality_z_operator,
                     closed_form_sizes, compose_v15_correlations,
                     compose_v15_state, hexagon_ground,
                     polarized_triangle_states, registry)
from .operators import (DMCoupling, ExchangeCoupling, ModelFormatError,
                        SpinModel, build_exchange_hamiltonian,
                        model_from_json, model_to_json, single_spin_operator,
                        subset_spin_squared, total_spin_squared)
from .pipeline import (AnalysisResult, RunConfig, grid, plm_sweep,
                       ring_scaling, run_analysis, table1)
from .solver import (AmbiguousMultiplet, NoConvergence, QuantumState,
                     SolverOptions, expectation_s_squared,
                     ground_state_in_sector)
from .version import VERSION

__version__ = VERSION
