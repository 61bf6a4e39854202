"""adxsim: a seedable ad-exchange simulator with a GA weight optimizer.

The exchange serves user visits to category-matched adverts either through a
six-variable weighted ranking function or a generalized second-price auction,
tracks spam and click-fraud, applies economic penalties and expulsion rules,
and optimizes the ranking weights with a genetic algorithm against simulated
income minus penalties.
"""

from .accounting import (PenaltyBreakdown, PenaltyCoefficients,
                         adx_performance, compute_penalties, record_click)
from .domain import (Advert, Advertiser, AdNetwork, ClickRecord, Publisher,
                     Visit, WorldConfig, WorldState, generate_world,
                     world_to_json)
from .experiments import (ExperimentResult, ExperimentSpec, SummaryStats,
                          emit_report, run_experiment, run_exp1_income,
                          run_exp1_ga_vs_gsp, run_exp2, run_grid)
from .ga import (GAConfig, GenerationRecord, OptimizeResult,
                 crossover_double_point, decode, encode, fitness, mutate,
                 optimize, repair, select_roulette)
from .governance import ExpulsionEvent, RuleThresholds, checkpoint
from .selection import (AdvertContext, WeightVector, ad_rank, ad_value,
                        advertiser_satisfaction, an_satisfaction,
                        campaign_cost, fraud_publisher_score, select_asf,
                        select_gsp, spam_score)
from .simulation import (SimulationConfig, SimulationReport, candidates,
                         next_visit, serve, simulate, simulate_traced)

__version__ = "0.1.0"
