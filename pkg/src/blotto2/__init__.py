"""Solvers for two-level soldier-allocation games.

Players first split a soldier budget across battlefields, then play a
zero-sum subgame in each one. This package covers the discrete and
continuous variants under sum and min aggregation: sequence-form LPs,
regret-matching self-play, projected subgradient ascent over budget splits,
instance generation, and independent verification oracles.
"""

from .ascent import Allocation, AscentConfig, run_psa
from .builders import (build_lp_one_sided_linear_continuous,
                       build_lp_one_sided_min_discrete, build_lp_two_sided_sum,
                       extract_equilibrium)
from .flowdag import (SequenceStrategy, TwoLevelSeqStrategy, best_response,
                      bilinear_utility, build_dag)
from .instances import (gen_log_security, gen_random_parametric,
                        gen_soft_blotto_double, read_instance, write_instance)
from .learning import LearnConfig, SelfPlayResult, saddle_point_gap, self_play
from .lp import LpModel, SimplexStall, export_lp_text, parse_lp_text, solve_lp
from .matrixgame import solve_matrix_game, subgame_at
from .model import (BattlefieldSpec, BlottoInstance, DenseTensor,
                    ParametricMatrix, SchemaError, validate_instance)

__version__ = "0.1.0"
