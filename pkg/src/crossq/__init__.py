"""Cross Q-learning research kit.

K-network Q-learning where each network's TD target is evaluated by a
randomly chosen peer, together with the estimator theory behind it,
tabular and deep variants, native environments, and a reproducible
experiment harness.
"""

__version__ = "0.1.0"

from .agents import (
    AgentConfig,
    EpsilonSchedule,
    QEnsemble,
    dueling_aggregate,
    epsilon_at,
    select_action,
    td_targets,
    train_step,
)
from .config import (
    ExperimentConfig,
    TabularConfig,
    load_config,
    load_tabular_config,
    parse_config,
    serialize_config,
)
from .envs import CartPoleEnv, CartPoleState, MdpEnv, StepResult, mdp_env_step
from .errors import (
    ConfigError,
    CrossQError,
    EstimationError,
    InsufficientDataError,
    ProtocolError,
    ShapeError,
)
from .estimators import (
    ActionSamples,
    BUILTIN_SPECS,
    DistributionSpec,
    cross_estimate,
    double_estimate,
    estimator_bias_mc,
    exact_expected_estimate,
    single_max_estimate,
)
from .harness import (
    MetricsLog,
    evaluate_policy,
    named_rng,
    q_probe,
    run_experiment,
    write_metrics,
)
from .nn import (
    AdamState,
    ForwardCache,
    MlpParams,
    adam_init,
    adam_step,
    gradient_check_suite,
    mlp_backward,
    mlp_forward,
    mlp_init,
)
from .replay import Batch, ReplayBuffer, Transition
from .tabular import (
    FiniteMdp,
    LearningSchedule,
    chain_mdp,
    cross_q_step,
    double_q_step,
    noisy_bench_mdp,
    one_state_mdp,
    q_step,
    run_tabular,
    value_iteration,
)
