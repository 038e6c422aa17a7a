"""Double-deep-Q compressor agent.

The policy input is a sliding window over the last delay + extra + 1
observations and the delay + extra actions between them, one-hot encoded
(the fading channel's envelope observation stays real-valued).  Training
follows the usual pattern: epsilon-greedy rollouts into a FIFO replay
memory, a block of minibatch SGD steps after every episode, then the target
network is refreshed from the online one and epsilon decays.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import ACTION_COUNT, ACTIONS, CompressorAction
from .env import PAD_ACTION, Observation, Policy, RohcEnv, EnvConfig, as_seed_sequence
from .mlp import (
    MlpConfig,
    MlpParams,
    batch_td_loss_grad,
    forward,
    forward_batch,
    init_params,
    load_params,
    params_lerp,
    save_params,
    sgd_step,
)


@dataclass(frozen=True)
class AgentConfig:
    discount: float = 0.95
    learning_rate: float = 1e-4
    learning_rate_final: float | None = None
    epsilon_init: float = 1.0
    epsilon_decay: float = 0.995
    epsilon_floor: float = 0.05
    batch_size: int = 64
    replay_capacity: int = 100_000
    grad_steps: int = 200
    multi_step: int = 1
    explore_start_slots: int = 0
    target_tau: float = 1.0
    history_extra: int = 4
    hidden_width: int = 2048
    depth: int = 4
    double_argmax: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must lie in (0, 1)")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.learning_rate_final is not None and not (
            0.0 < self.learning_rate_final <= self.learning_rate
        ):
            raise ValueError(
                "learning_rate_final must lie in (0, learning_rate]"
            )
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ValueError("epsilon_decay must lie in (0, 1]")
        if not 0.0 <= self.epsilon_floor <= 1.0:
            raise ValueError("epsilon_floor must lie in [0, 1]")
        if self.batch_size < 1 or self.replay_capacity < 1:
            raise ValueError("batch_size and replay_capacity must be positive")
        if self.batch_size > self.replay_capacity:
            raise ValueError("batch_size must not exceed replay_capacity")
        if self.grad_steps < 0 or self.history_extra < 0:
            raise ValueError("grad_steps and history_extra must be >= 0")
        if self.multi_step < 1:
            raise ValueError("multi_step must be >= 1")
        if self.explore_start_slots < 0:
            raise ValueError("explore_start_slots must be >= 0")
        if not 0.0 < self.target_tau <= 1.0:
            raise ValueError("target_tau must lie in (0, 1]")
        if self.hidden_width < 1 or self.depth < 2:
            raise ValueError("hidden_width must be >= 1 and depth >= 2")


@dataclass(frozen=True)
class EncoderSpec:
    """Fixed layout of the encoded history window."""

    hmm: bool
    w: int
    delay: int
    extra: int

    @classmethod
    def for_env(cls, env_cfg: EnvConfig, agent_cfg: AgentConfig) -> "EncoderSpec":
        return cls(env_cfg.is_hmm, env_cfg.w, env_cfg.delay, agent_cfg.history_extra)

    @property
    def obs_slots(self) -> int:
        return self.delay + self.extra + 1

    @property
    def action_slots(self) -> int:
        return self.delay + self.extra

    @property
    def per_obs(self) -> int:
        channel_bits = 1 if self.hmm else 2
        return 2 + channel_bits + (self.w + 3) + (self.delay + 1)

    @property
    def input_len(self) -> int:
        return self.obs_slots * self.per_obs + self.action_slots * ACTION_COUNT

    @property
    def pad_observation(self) -> Observation:
        z_h = 0.0 if self.hmm else 0
        return Observation(0, z_h, -1, (1,) * (self.delay + 1))


@dataclass(frozen=True)
class HistoryWindow:
    """Most-recent-first tuples of the observations and actions in scope."""

    observations: tuple[Observation, ...]
    actions: tuple[CompressorAction, ...]

    @classmethod
    def initial(cls, first_obs: Observation, spec: EncoderSpec) -> "HistoryWindow":
        pads = (spec.pad_observation,) * (spec.obs_slots - 1)
        return cls((first_obs,) + pads, (PAD_ACTION,) * spec.action_slots)

    def push(self, obs: Observation, action: CompressorAction) -> "HistoryWindow":
        if self.actions:
            acts = (action,) + self.actions[:-1]
        else:
            acts = self.actions
        return HistoryWindow((obs,) + self.observations[:-1], acts)


def encode(window: HistoryWindow, spec: EncoderSpec) -> np.ndarray:
    """Flatten a window to the network input, oldest slot first.

    Per observation: one-hot arrival flag, channel state (one-hot for
    Gilbert-Elliot, raw envelope for the fading channel), one-hot feedback
    field over {-1, 0..w+1}, then the compressibility bits.  Per action:
    one-hot over the six actions.
    """
    x = np.zeros(spec.input_len)
    off = 0
    span = spec.delay + 1
    for obs in reversed(window.observations):
        x[off + (1 if obs.z_t else 0)] = 1.0
        off += 2
        if spec.hmm:
            x[off] = obs.z_h
            off += 1
        else:
            x[off + (1 if obs.z_h else 0)] = 1.0
            off += 2
        x[off + obs.z_d + 1] = 1.0
        off += spec.w + 3
        x[off : off + span] = obs.source_window
        off += span
    for action in reversed(window.actions):
        x[off + action.index] = 1.0
        off += ACTION_COUNT
    return x


class ReplayMemory:
    """Bounded FIFO of transitions with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._data: list = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._data)

    def push(self, item) -> None:
        if len(self._data) < self.capacity:
            self._data.append(item)
        else:
            self._data[self._next] = item
            self._next = (self._next + 1) % self.capacity

    def items(self) -> list:
        """Contents oldest first."""
        if len(self._data) < self.capacity:
            return list(self._data)
        return self._data[self._next :] + self._data[: self._next]

    def sample(self, batch_size: int, rng) -> list:
        if not self._data:
            raise ValueError("cannot sample from an empty memory")
        idx = rng.integers(len(self._data), size=batch_size)
        return [self._data[i] for i in idx]


def mlp_config_for(spec: EncoderSpec, agent_cfg: AgentConfig) -> MlpConfig:
    hidden = (agent_cfg.hidden_width,) * (agent_cfg.depth - 1)
    return MlpConfig((spec.input_len,) + hidden + (ACTION_COUNT,))


def select_action(params: MlpParams, x, epsilon: float, rng) -> int:
    """Epsilon-greedy over the action values; greedy ties break low."""
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(ACTION_COUNT))
    return int(np.argmax(forward(params, x)))


def td_target(target_params: MlpParams, reward: float, next_x, discount: float) -> float:
    """Bootstrapped target from the frozen network."""
    return float(reward + discount * np.max(forward(target_params, next_x)))


def train_step(
    params: MlpParams,
    target_params: MlpParams,
    batch,
    eta: float,
    discount: float,
    double_argmax: bool = False,
):
    """One minibatch SGD step on the mean squared TD error.

    batch entries are (x, action index, reward, next x).  The frozen
    network scores the next window; with double_argmax the online network
    picks the next action and the frozen one evaluates it.
    """
    x = np.stack([b[0] for b in batch])
    actions = np.array([b[1] for b in batch], dtype=int)
    rewards = np.array([b[2] for b in batch], dtype=float)
    next_x = np.stack([b[3] for b in batch])
    # Five-field transitions carry their own bootstrap discount (multi-step
    # blocks of varying length); four-field ones use the scalar.
    disc = np.array([b[4] if len(b) > 4 else discount for b in batch])

    q_next = forward_batch(target_params, next_x)
    if double_argmax:
        pick = np.argmax(forward_batch(params, next_x), axis=1)
        bootstrap = q_next[np.arange(len(batch)), pick]
    else:
        bootstrap = q_next.max(axis=1)
    targets = rewards + disc * bootstrap

    loss, grads = batch_td_loss_grad(params, x, actions, targets)
    return sgd_step(params, grads, eta), loss


@dataclass
class TrainingResult:
    params: MlpParams
    episode_rewards: list[float] = field(default_factory=list)
    episode_efficiency: list[float] = field(default_factory=list)
    episode_feedback_rate: list[float] = field(default_factory=list)
    episode_epsilon: list[float] = field(default_factory=list)


def run_training(
    env_cfg: EnvConfig,
    agent_cfg: AgentConfig,
    episodes: int,
    seed,
    env_schedule=None,
) -> TrainingResult:
    """Full training loop.

    env_schedule optionally remaps the environment config between episodes:
    a sequence of (episode index, EnvConfig) pairs, applied when that
    episode begins, with the network and replay memory carried across.
    """
    switches = dict()
    if env_schedule:
        for ep, cfg in env_schedule:
            switches[int(ep)] = cfg

    root = as_seed_sequence(seed)
    init_ss, explore_ss, replay_ss, episode_root = root.spawn(4)
    explore_rng = np.random.default_rng(explore_ss)
    replay_rng = np.random.default_rng(replay_ss)
    episode_seeds = episode_root.spawn(episodes) if episodes else []

    spec = EncoderSpec.for_env(env_cfg, agent_cfg)
    params = init_params(mlp_config_for(spec, agent_cfg), np.random.default_rng(init_ss))
    target = params.copy()
    memory = ReplayMemory(agent_cfg.replay_capacity)
    epsilon = agent_cfg.epsilon_init
    result = TrainingResult(params)

    cfg = env_cfg
    for episode in range(episodes):
        if episode in switches:
            cfg = switches[episode]
            spec_now = EncoderSpec.for_env(cfg, agent_cfg)
            if spec_now != spec:
                raise ValueError("schedule must not change the encoded input layout")
        env = RohcEnv(cfg)
        obs = env.reset(episode_seeds[episode])
        window = HistoryWindow.initial(obs, spec)
        x = encode(window, spec)

        total_reward = 0.0
        successes = 0
        bits = 0
        feedbacks = 0
        # Transitions are stored as multi-step blocks: (window, first action,
        # discounted reward sum, bootstrap window, bootstrap discount).  A
        # block ends after multi_step slots, or early at the first non-greedy
        # action -- bootstrapping there keeps exploration's windfalls out of
        # the reward sum for the action being scored.
        pending: list = []

        def flush(count: int, boot_x) -> None:
            # Emit the oldest `count` blocks, each bootstrapping at boot_x.
            # A block's return spans every reward still pending for it.
            for _ in range(count):
                ret = 0.0
                for k in range(len(pending) - 1, -1, -1):
                    ret = pending[k][2] + agent_cfg.discount * ret
                x0, a0, _ = pending.pop(0)
                memory.push((x0, a0, ret, boot_x, agent_cfg.discount ** (len(pending) + 1)))

        for slot in range(cfg.horizon):
            # Exploring starts: reset-adjacent windows recur only once per
            # episode, so force uniform actions there to keep every action
            # head covered.
            eps_now = 1.0 if slot < agent_cfg.explore_start_slots else epsilon
            q_here = forward(params, x)
            if eps_now > 0.0 and explore_rng.random() < eps_now:
                a_idx = int(explore_rng.integers(ACTION_COUNT))
            else:
                a_idx = int(np.argmax(q_here))
            if pending and a_idx != int(np.argmax(q_here)):
                flush(len(pending), x)
            outcome = env.step(ACTIONS[a_idx])
            window = window.push(outcome.observation, ACTIONS[a_idx])
            x_next = encode(window, spec)
            pending.append((x, a_idx, outcome.reward))
            if len(pending) == agent_cfg.multi_step:
                flush(1, x_next)
            x = x_next

            total_reward += outcome.reward
            diag = outcome.diagnostics
            successes += int(diag.decode_success)
            bits += cfg.lengths.payload_bits + cfg.lengths.header_bits(diag.applied_header)
            feedbacks += diag.penalized_feedback

        lr = agent_cfg.learning_rate
        if agent_cfg.learning_rate_final is not None and episodes > 1:
            # Geometric anneal: early episodes move fast, late ones polish.
            ratio = agent_cfg.learning_rate_final / agent_cfg.learning_rate
            lr = agent_cfg.learning_rate * ratio ** (episode / (episodes - 1))
        # The stored return already covers multi_step slots, so the
        # bootstrap term is discounted by gamma**multi_step.
        boot = agent_cfg.discount**agent_cfg.multi_step
        for _ in range(agent_cfg.grad_steps):
            if len(memory) == 0:
                break
            batch = memory.sample(agent_cfg.batch_size, replay_rng)
            params, _ = train_step(
                params,
                target,
                batch,
                lr,
                boot,
                agent_cfg.double_argmax,
            )
            if agent_cfg.target_tau < 1.0:
                target = params_lerp(target, params, agent_cfg.target_tau)
        if agent_cfg.target_tau >= 1.0:
            target = params.copy()

        horizon = max(cfg.horizon, 1)
        result.episode_rewards.append(total_reward / horizon)
        result.episode_efficiency.append(
            cfg.lengths.payload_bits * successes / bits if bits else 0.0
        )
        result.episode_feedback_rate.append(feedbacks / horizon)
        result.episode_epsilon.append(epsilon)
        epsilon = max(epsilon * agent_cfg.epsilon_decay, agent_cfg.epsilon_floor)

    result.params = params
    return result


class AgentPolicy(Policy):
    """Rollout wrapper around a trained network; epsilon 0 means greedy."""

    def __init__(self, params: MlpParams, spec: EncoderSpec, epsilon: float = 0.0):
        self.params = params
        self.spec = spec
        self.epsilon = epsilon
        self._rng = None
        self._window = None
        self._prev_action = None

    def reset(self, rng) -> None:
        self._rng = rng
        self._window = None
        self._prev_action = None

    def act(self, obs: Observation) -> CompressorAction:
        if self._window is None:
            self._window = HistoryWindow.initial(obs, self.spec)
        else:
            self._window = self._window.push(obs, self._prev_action)
        x = encode(self._window, self.spec)
        idx = select_action(self.params, x, self.epsilon, self._rng)
        self._prev_action = ACTIONS[idx]
        return ACTIONS[idx]


def save_checkpoint(path, params: MlpParams, agent_cfg: AgentConfig, episode: int, epsilon: float) -> None:
    """Parameter dump plus a JSON sidecar describing how it was trained."""
    save_params(params, path)
    meta = {
        "agent": asdict(agent_cfg),
        "episode": episode,
        "epsilon": epsilon,
        "widths": list(params.widths),
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path):
    """Returns (params, AgentConfig, metadata dict)."""
    params = load_params(path)
    with open(str(path) + ".json") as fh:
        meta = json.load(fh)
    agent_cfg = AgentConfig(**meta["agent"])
    if list(params.widths) != meta["widths"]:
        raise ValueError("checkpoint metadata does not match parameter shapes")
    return params, agent_cfg, meta


__all__ = [
    "AgentConfig",
    "AgentPolicy",
    "EncoderSpec",
    "HistoryWindow",
    "ReplayMemory",
    "TrainingResult",
    "encode",
    "load_checkpoint",
    "mlp_config_for",
    "run_training",
    "save_checkpoint",
    "select_action",
    "td_target",
    "train_step",
]
