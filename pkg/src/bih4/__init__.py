"""Numerical laboratory for 1-d fourth-order Schrodinger operators H = Delta^2 + V.

Classifies the zero-energy threshold (regular / first- or second-kind
resonance / eigenvalue), computes low-energy resolvent behavior, evaluates
e^{-itH}P_ac via Stone's formula, and verifies dispersive decay rates and the
exact operator identities of the threshold analysis at desk scale.
"""

from .grid import (GridFunction, WeightedGrid, build_grid, from_callable,
                   graded_gauss_grid, grid_hash, inner_product, norm)
from .kernels import (MINUS, PLUS, ResolventSign, coefficient, eval_Gk, eval_R0,
                      expansion_remainder, free_propagator, taylor_kernel,
                      taylor_split_check)
from .operators import (Op, Subspace, adjoint, apply, compose, discretize_kernel,
                        feshbach_invert, multiplier, nullspace, projector_onto)
from .oscillatory import (DyadicPartition, build_partition, lemma21_bound_check,
                          low_sum_check, oscillatory_integral)
from .potentials import (PotentialSpec, bump, decay_report, from_samples, gaussian,
                         load_potential_file, make_remark16_eigenvalue,
                         make_remark16_resonance, power_law,
                         resonance_slope_family, scaled)
from .propagator import (DecayFitReport, StoneEvaluator, conservation_check,
                         decay_fit, stone_kernel, strichartz_norm)
from .resolvent import SingularityFit, build_M, invert_M, rv_kernel, singularity_order
from .resonance import (ResonanceClass, SChain, ThresholdData, build_s_chain,
                        build_threshold, classify, reconstruct_resonance,
                        table1_residuals, tune_to_resonance)

__version__ = "0.1.0"
