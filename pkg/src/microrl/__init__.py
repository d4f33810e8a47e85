"""Parameter-sharing multi-agent Sarsa(lambda) for small-scale unit micromanagement.

A deterministic 2D combat simulator, a 93-dimensional sector encoder, a
shared 93-100-9 ReLU action-value network trained by gradient-descent
Sarsa(lambda), and harnesses for transfer, curricula and evaluation.
"""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .errors import (  # noqa: E402
    CheckpointError, ConfigError, DomainError, MicroRLError, NumericDivergenceError, ProtocolError,
    ShapeError, TransferError,
)
from .units import (  # noqa: E402
    GOLIATH, MARINE, UNIT_CLASSES, ZEALOT, ZERGLING, CombatAction, ScriptedPolicy, Side, UnitClass,
    Winner, unit_class,
)
from .sim import ScenarioSpec, SimState, StepOutcome, TerrainObstacle, UnitOutcome, reset, step  # noqa: E402
from .encoder import OBS_DIM, encode, encode_state, terrain_distance_value, unit_distance_value  # noqa: E402
from .qnet import QNetwork, forward, grad_q, init, load_checkpoint, save_checkpoint  # noqa: E402
from .trainer import (  # noqa: E402
    PSMAGDS, CombatEnv, EpisodeStats, RewardConfig, TrainerConfig, epsilon_at, hitpoint_ratio_rho,
    select_action, shaped_reward, train,
)
from .scenarios import bundled_scenario, bundled_scenarios, load_scenario  # noqa: E402
from .evaluate import EvalReport, evaluate, training_curve  # noqa: E402
from .curriculum import (  # noqa: E402
    CurriculumPlan, RunManifest, bundled_plans, compare_scratch_vs_transfer, evaluate_generalization,
    load_plan, run_curriculum,
)

__all__ = [name for name in dir() if not name.startswith("_")]
