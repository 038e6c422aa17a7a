"""Discrete-time compression loop with a shared delay d on the downlink
observations and the feedback path.

Timing convention, with t the compressor's slot clock: the packet handed to
the channel during slot t is the action chosen d slots ago, so each step
advances the channel and the decompressor one slot behind the compressor by
d.  The observation returned by step(t) is the slot t+1 observation: the
arrival flag and channel state it reports belong to the packet just decoded
(slots t-d+1 on the receiver clock), the compressibility window spans slots
t+1 down to t+1-d, and the feedback field carries the decompressor level
just computed whenever the action taken at slot t+1-d asked for it (at
d = 0 the request made this very slot, the earliest that can deliver).

The reward for slot t pays the bandwidth share of the packet decoded this
step and charges the feedback request made d+1 slots ago.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .channels import (
    GilbertElliotConfig,
    HmmChannelConfig,
    ObsNoiseConfig,
    ge_init,
    ge_step,
    ge_transmission,
    hmm_init,
    hmm_step,
    hmm_transmission,
    observe_channel_ge,
    observe_channel_hmm,
    observe_transmission,
)
from .core import (
    CompressorAction,
    DecompressorState,
    HeaderLengths,
    HeaderType,
    SourceDynamics,
    SourceState,
    decompressor_step,
    is_decode_success,
    source_step,
)

PAD_ACTION = CompressorAction(HeaderType.IR, False)
NO_FEEDBACK = -1


@dataclass(frozen=True)
class EnvConfig:
    lengths: HeaderLengths
    channel: GilbertElliotConfig | HmmChannelConfig
    noise: ObsNoiseConfig
    source: SourceDynamics
    w: int = 5
    delay: int = 4
    feedback_penalty: float = 0.01
    discount: float = 0.95
    horizon: int = 2000

    def __post_init__(self) -> None:
        if self.w < 1:
            raise ValueError("w must be >= 1")
        if self.delay < 0:
            raise ValueError("delay must be >= 0")
        if self.feedback_penalty < 0.0:
            raise ValueError("feedback_penalty must be >= 0")
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must lie in (0, 1)")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")

    @property
    def is_hmm(self) -> bool:
        return isinstance(self.channel, HmmChannelConfig)


@dataclass(frozen=True)
class Observation:
    """What the compressor sees at the top of a slot.

    z_t: noisy arrival flag of the packet decoded d slots back.
    z_h: noisy channel state (0/1 flip for Gilbert-Elliot, real-valued
         noisy envelope for the fading channel), same delay.
    z_d: decompressor level delivered by the feedback path, or -1 when no
         feedback is due this slot.
    source_window: the last delay+1 compressibility bits, most recent first
         (these are compressor-side and arrive undelayed).
    """

    z_t: int
    z_h: float
    z_d: int
    source_window: tuple[int, ...]


@dataclass(frozen=True)
class StepDiagnostics:
    decode_success: bool
    applied_header: HeaderType
    decomp_state: int
    tx_ok: int
    source_bit: int
    penalized_feedback: int


@dataclass(frozen=True)
class StepOutcome:
    observation: Observation
    reward: float
    diagnostics: StepDiagnostics


class RohcEnv:
    """Single compressor/decompressor pair over one channel.

    Instances are single-threaded; all randomness flows through the
    generator created at reset, so (config, seed) pins every trajectory.
    """

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self._rng = None
        self._clock = 0

    @property
    def clock(self) -> int:
        return self._clock

    @property
    def decompressor_value(self) -> int:
        return self._decomp.value

    def reset(self, seed=None) -> Observation:
        cfg = self.cfg
        self._rng = np.random.default_rng(seed)
        self._clock = 0
        self._decomp = DecompressorState.no_context(cfg.w)
        self._source = SourceState((1,) * cfg.source.order, cfg.source)
        self._src_window = deque([1] * (cfg.delay + 1), maxlen=cfg.delay + 1)
        self._actions = deque([PAD_ACTION] * (cfg.delay + 1), maxlen=cfg.delay + 2)
        if cfg.is_hmm:
            self._channel = hmm_init(cfg.channel, self._rng)
            z_h = observe_channel_hmm(
                self._channel.envelope, cfg.channel.obs_noise_var, self._rng
            )
        else:
            self._channel = ge_init(cfg.channel, self._rng)
            z_h = observe_channel_ge(self._channel, cfg.noise.eps_h, self._rng)
        z_t = observe_transmission(0, cfg.noise.eps_t, self._rng)
        return Observation(z_t, z_h, NO_FEEDBACK, tuple(self._src_window))

    def step(self, action: CompressorAction) -> StepOutcome:
        cfg = self.cfg
        if self._rng is None:
            raise RuntimeError("reset the environment before stepping")
        if self._clock >= cfg.horizon:
            raise RuntimeError(f"episode horizon {cfg.horizon} exhausted")
        rng = self._rng

        self._actions.appendleft(action)
        evicted = self._actions.pop()      # the action taken d+1 slots back
        applied = self._actions[-1]        # the action taken d slots back

        if cfg.is_hmm:
            self._channel, envelope = hmm_step(self._channel, cfg.channel, rng)
            tx_ok = hmm_transmission(envelope, cfg.channel, rng)
            z_h = observe_channel_hmm(envelope, cfg.channel.obs_noise_var, rng)
        else:
            self._channel = ge_step(self._channel, cfg.channel, rng)
            tx_ok = ge_transmission(self._channel, applied.header, cfg.channel, rng)
            z_h = observe_channel_ge(self._channel, cfg.noise.eps_h, rng)

        src_bit = self._src_window[cfg.delay]
        self._decomp = decompressor_step(self._decomp, applied.header, tx_ok, src_bit)
        success = is_decode_success(self._decomp)

        length = cfg.lengths
        reward = 0.0
        if success:
            reward = length.payload_bits / (
                length.payload_bits + length.header_bits(applied.header)
            )
        reward -= cfg.feedback_penalty * int(evicted.request_feedback)

        self._source, new_bit = source_step(self._source, rng)
        self._src_window.appendleft(new_bit)

        fb_request = self._actions[cfg.delay - 1 if cfg.delay >= 1 else 0]
        z_d = self._decomp.value if fb_request.request_feedback else NO_FEEDBACK
        z_t = observe_transmission(tx_ok, cfg.noise.eps_t, rng)

        obs = Observation(z_t, z_h, z_d, tuple(self._src_window))
        self._clock += 1
        return StepOutcome(
            obs,
            reward,
            StepDiagnostics(
                success,
                applied.header,
                self._decomp.value,
                tx_ok,
                src_bit,
                int(evicted.request_feedback),
            ),
        )


class Policy:
    """Minimal rollout interface: reset once per episode, then act on each
    observation in turn.  Stateful policies keep their history themselves."""

    def reset(self, rng) -> None:  # pragma: no cover - trivial default
        pass

    def act(self, obs: Observation) -> CompressorAction:
        raise NotImplementedError


_TRACE_COLUMNS = (
    "t",
    "alpha_C",
    "alpha_F",
    "z_T",
    "z_H",
    "z_D",
    "sigma_S",
    "sigma_D",
    "sigma_T",
    "reward",
    "decode_success",
)


class Trace:
    """Per-slot record of one episode.

    Columns follow the slot-t reward bookkeeping: alpha_C is the header of
    the packet decoded during slot t, alpha_F the feedback flag charged at
    slot t (the request from d+1 slots back), z_* the observation the
    policy acted on at slot t, sigma_* the receiver-side quantities of the
    decode that landed this slot.
    """

    def __init__(self):
        self.t: list[int] = []
        self.alpha_c: list[int] = []
        self.alpha_f: list[int] = []
        self.z_t: list[int] = []
        self.z_h: list[float] = []
        self.z_d: list[int] = []
        self.sigma_s: list[int] = []
        self.sigma_d: list[int] = []
        self.sigma_t: list[int] = []
        self.reward: list[float] = []
        self.decode_success: list[int] = []

    def __len__(self) -> int:
        return len(self.t)

    def append(self, t: int, obs: Observation, outcome: StepOutcome) -> None:
        d = outcome.diagnostics
        self.t.append(t)
        self.alpha_c.append(int(d.applied_header))
        self.alpha_f.append(d.penalized_feedback)
        self.z_t.append(obs.z_t)
        self.z_h.append(obs.z_h)
        self.z_d.append(obs.z_d)
        self.sigma_s.append(d.source_bit)
        self.sigma_d.append(d.decomp_state)
        self.sigma_t.append(d.tx_ok)
        self.reward.append(outcome.reward)
        self.decode_success.append(int(d.decode_success))

    @staticmethod
    def _fmt(x) -> str:
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        return format(float(x), ".9g")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(_TRACE_COLUMNS) + "\n")
            for i in range(len(self)):
                row = (
                    self.t[i],
                    self.alpha_c[i],
                    self.alpha_f[i],
                    self.z_t[i],
                    self.z_h[i],
                    self.z_d[i],
                    self.sigma_s[i],
                    self.sigma_d[i],
                    self.sigma_t[i],
                    self.reward[i],
                    self.decode_success[i],
                )
                fh.write(",".join(self._fmt(x) for x in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Trace":
        trace = cls()
        with open(path, newline="") as fh:
            header = fh.readline().strip()
            if tuple(header.split(",")) != _TRACE_COLUMNS:
                raise ValueError(f"unexpected trace header: {header!r}")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != len(_TRACE_COLUMNS):
                    raise ValueError(f"malformed trace row: {line!r}")
                trace.t.append(int(parts[0]))
                trace.alpha_c.append(int(parts[1]))
                trace.alpha_f.append(int(parts[2]))
                trace.z_t.append(int(parts[3]))
                try:
                    zh: float = int(parts[4])
                except ValueError:
                    zh = float(parts[4])
                trace.z_h.append(zh)
                trace.z_d.append(int(parts[5]))
                trace.sigma_s.append(int(parts[6]))
                trace.sigma_d.append(int(parts[7]))
                trace.sigma_t.append(int(parts[8]))
                trace.reward.append(float(parts[9]))
                trace.decode_success.append(int(parts[10]))
        return trace


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Accept raw entropy or an already-built SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def run_episode(policy: Policy, cfg: EnvConfig, seed) -> Trace:
    """Roll one full-horizon episode; deterministic given (cfg, seed) and a
    deterministic policy."""
    env_ss, policy_ss = as_seed_sequence(seed).spawn(2)
    env = RohcEnv(cfg)
    obs = env.reset(env_ss)
    policy.reset(np.random.default_rng(policy_ss))
    trace = Trace()
    for t in range(cfg.horizon):
        action = policy.act(obs)
        outcome = env.step(action)
        trace.append(t, obs, outcome)
        obs = outcome.observation
    return trace
