"""Bi-directional robust header compression: simulator, learned compressor,
baselines, and experiment harness."""

from .core import (
    ACTIONS,
    ACTION_COUNT,
    CompressorAction,
    DecompressorState,
    HeaderLengths,
    HeaderType,
    SourceDynamics,
    SourceState,
    action_from_index,
    decompressor_step,
    header_length,
    is_decode_success,
    source_step,
)
from .channels import (
    GilbertElliotConfig,
    HmmChannelConfig,
    HmmState,
    ObsNoiseConfig,
    ge_init,
    ge_stationary,
    ge_step,
    ge_trajectory,
    ge_transmission,
    hmm_init,
    hmm_step,
    hmm_trajectory,
    hmm_transmission,
    observe_channel_ge,
    observe_channel_hmm,
    observe_transmission,
)
from .env import (
    EnvConfig,
    Observation,
    Policy,
    RohcEnv,
    StepOutcome,
    Trace,
    as_seed_sequence,
    run_episode,
)
from .mlp import (
    MlpConfig,
    MlpParams,
    batch_td_loss_grad,
    copy_params,
    forward,
    forward_batch,
    init_params,
    load_params,
    save_params,
    sgd_step,
    td_loss_grad,
)
from .agent import (
    AgentConfig,
    AgentPolicy,
    EncoderSpec,
    HistoryWindow,
    ReplayMemory,
    TrainingResult,
    encode,
    load_checkpoint,
    run_training,
    save_checkpoint,
    select_action,
    td_target,
    train_step,
)
from .baselines import (
    FixedPolicy,
    KtConfig,
    KtPolicy,
    OracleResult,
    RandomPolicy,
    discounted_return,
    exact_oracle,
    kt_policy,
    mc_discounted_value,
)
from .harness import (
    MetricsReport,
    PRESETS,
    compute_metrics,
    default_config,
    load_config,
    make_agent_config,
    make_env_config,
    make_kt_config,
    parse_config,
    run_experiment,
    adapt_experiment,
    evaluate_policy,
)

__version__ = "0.1.0"
