"""Co-prime L-shaped frequency diverse array radar toolkit.

Joint estimation of elevation, azimuth, range and velocity from the
space-frequency-time difference coarray of a co-prime L-shaped FDA.
"""
from .geometry import (Cadis, Cna, Coprime, CoprimePair, Gna, IndexSet, LagProfile,
                       MultiCoset, Nested, SchemeSpec, SuperNested, Uniform,
                       contiguous_bound, difference_profile, generate_index_set,
                       lag_counts, scheme_from_dict)
from .scene import (C, FeasibilityReport, RadarConfig, Target, TargetScene,
                    ValidationError, check_assumptions, check_feasibility, max_targets,
                    min_resources, random_scene, resolution_bins, table_config,
                    two_target_scene, unambiguous_limits, validate_scene)
from .signal import (CoarrayError, CoarrayVectors, SnapshotSet, analytic_covariance,
                     coarray_from_snapshots, extract_coarray, manifold,
                     sample_covariance, steering, synthesize, virtual_steering)
from .ccing import (CCingError, DegenerateSceneError, EstimateSet,
                    InconsistentSubspaceError, RankDeficiencyError, ccing)
from .crb import CrbReport, SingularCovarianceError, crb, crb_exists, fim, noise_for_snr
from .altdesigns import (CouplingModel, OccupancySpec, coupling_leakage, coupling_matrix,
                         coupling_table, dwell_occupancy, occupancy_rate, occupancy_sweep)
from .experiments import (ExperimentSpec, MetricsRow, apply_snr, hit_rate, power_spread_scene,
                          rmse, rows_from_csv, rows_to_csv, run_montecarlo)

__version__ = '0.1.0'
