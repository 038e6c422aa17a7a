"""Channel models and observation noise.

Two channel families drive packet loss:

* a two-state Gilbert-Elliot chain (good/bad) with per-state success
  probabilities, and
* a hidden-Markov Rayleigh fading channel whose in-phase and quadrature
  gains are unit-variance Gaussian processes with autocovariance
  rho**|lag|; the envelope sqrt(I**2 + Q**2) sets the per-packet success
  probability through a std-normal threshold test.

The Gaussian processes reduce exactly to first-order recursions
a[t] = rho * a[t-1] + sqrt(1 - rho**2) * w[t], which is what hmm_step runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import HeaderType


@dataclass(frozen=True)
class GilbertElliotConfig:
    """Good/bad channel chain.

    mean_bad_duration is the expected sojourn in the bad state (1/p_good
    escape rate is derived from it together with eps_b).  Note the derived
    chain has stationary bad-state probability 1 - eps_b.  header_scale
    optionally rescales the success probability per header type.
    """

    mean_bad_duration: float
    eps_b: float
    good_success: float
    bad_success: float
    header_scale: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        if not 0.0 <= self.bad_success <= self.good_success <= 1.0:
            raise ValueError("need 0 <= bad_success <= good_success <= 1")
        if len(self.header_scale) != 3 or any(s < 0 for s in self.header_scale):
            raise ValueError("header_scale must be three nonnegative factors")
        p01 = self.bad_to_good
        p10 = self.good_to_bad
        if not (0.0 < p01 <= 1.0 and 0.0 < p10 <= 1.0):
            raise ValueError(
                f"derived transition probabilities out of range: "
                f"bad->good {p01}, good->bad {p10}"
            )

    @property
    def bad_to_good(self) -> float:
        raw = (1.0 / self.mean_bad_duration) / (1.0 / self.eps_b - 1.0)
        # at eps_b = l_b/(l_b+1) the exact value is 1; absorb rounding overshoot
        if 1.0 < raw < 1.0 + 1e-9:
            return 1.0
        return raw

    @property
    def good_to_bad(self) -> float:
        return 1.0 / self.mean_bad_duration


def ge_stationary(cfg: GilbertElliotConfig) -> float:
    """Stationary probability of the bad state."""
    p01 = cfg.bad_to_good
    p10 = cfg.good_to_bad
    return p10 / (p01 + p10)


def ge_init(cfg: GilbertElliotConfig, rng) -> int:
    """Draw an initial state from the stationary distribution (1 = good)."""
    return 0 if rng.random() < ge_stationary(cfg) else 1


def ge_step(state: int, cfg: GilbertElliotConfig, rng) -> int:
    """One chain transition.  state is 1 (good) or 0 (bad)."""
    if state == 0:
        return 1 if rng.random() < cfg.bad_to_good else 0
    return 0 if rng.random() < cfg.good_to_bad else 1


def ge_trajectory(cfg: GilbertElliotConfig, n: int, rng, init: int | None = None) -> np.ndarray:
    """n chain states after the initial one.  Draws the same uniform stream
    as ge_step applied n times, so results match the scalar path exactly."""
    state = ge_init(cfg, rng) if init is None else init
    p01 = cfg.bad_to_good
    p10 = cfg.good_to_bad
    u = rng.random(n)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        if state == 0:
            state = 1 if u[i] < p01 else 0
        else:
            state = 0 if u[i] < p10 else 1
        out[i] = state
    return out


def ge_transmission(state: int, header: HeaderType, cfg: GilbertElliotConfig, rng) -> int:
    """Sample the packet arrival flag given the channel state and header."""
    base = cfg.good_success if state == 1 else cfg.bad_success
    p = min(1.0, max(0.0, base * cfg.header_scale[HeaderType(header)]))
    return 1 if rng.random() < p else 0


@dataclass(frozen=True)
class HmmChannelConfig:
    """Rayleigh fading channel with correlated Gaussian gains.

    correlation is the one-step autocorrelation rho of each gain process,
    order is how many past gain values the channel state retains, tx_power
    scales the envelope before the success threshold test, obs_noise_var is
    the variance of the additive noise on envelope observations.
    """

    correlation: float
    order: int
    tx_power: float
    obs_noise_var: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.correlation < 1.0:
            raise ValueError("correlation must lie in [0, 1)")
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.tx_power <= 0.0:
            raise ValueError("tx_power must be positive")
        if self.obs_noise_var < 0.0:
            raise ValueError("obs_noise_var must be nonnegative")


@dataclass(frozen=True)
class HmmState:
    """Last `order` in-phase and quadrature gain values, most recent first."""

    inphase: tuple[float, ...]
    quadrature: tuple[float, ...]

    @property
    def envelope(self) -> float:
        return math.hypot(self.inphase[0], self.quadrature[0])


def hmm_step(state: HmmState, cfg: HmmChannelConfig, rng) -> tuple[HmmState, float]:
    """Advance both gain processes one step and return the new envelope."""
    rho = cfg.correlation
    innov = math.sqrt(1.0 - rho * rho)
    ai = rho * state.inphase[0] + innov * rng.standard_normal()
    aq = rho * state.quadrature[0] + innov * rng.standard_normal()
    new = HmmState((ai,) + state.inphase[:-1], (aq,) + state.quadrature[:-1])
    return new, math.hypot(ai, aq)


def hmm_init(cfg: HmmChannelConfig, rng) -> HmmState:
    """Independent standard normal histories, then a burn-in of 10 * order
    steps so the retained window comes from the joint law."""
    state = HmmState(
        tuple(rng.standard_normal() for _ in range(cfg.order)),
        tuple(rng.standard_normal() for _ in range(cfg.order)),
    )
    for _ in range(10 * cfg.order):
        state, _ = hmm_step(state, cfg, rng)
    return state


def hmm_trajectory(
    cfg: HmmChannelConfig, n: int, rng, state: HmmState | None = None
) -> tuple[HmmState, np.ndarray, np.ndarray]:
    """Run n steps; returns (final state, envelopes, in-phase gains)."""
    if state is None:
        state = hmm_init(cfg, rng)
    env = np.empty(n)
    inph = np.empty(n)
    for i in range(n):
        state, e = hmm_step(state, cfg, rng)
        env[i] = e
        inph[i] = state.inphase[0]
    return state, env, inph


def hmm_transmission(envelope: float, cfg: HmmChannelConfig, rng) -> int:
    """Packet arrives when tx_power * envelope clears a std normal draw, so
    P(arrival | envelope) = Phi(tx_power * envelope)."""
    return 1 if cfg.tx_power * envelope > rng.standard_normal() else 0


def success_probability(envelope: float, cfg: HmmChannelConfig) -> float:
    """Closed form Phi(tx_power * envelope) for the threshold test."""
    return 0.5 * (1.0 + math.erf(cfg.tx_power * envelope / math.sqrt(2.0)))


@dataclass(frozen=True)
class ObsNoiseConfig:
    """Flip probabilities for the binary observations of the arrival flag
    and (Gilbert-Elliot only) the channel state."""

    eps_t: float
    eps_h: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.eps_t < 0.5:
            raise ValueError("eps_t must lie in [0, 0.5)")
        if not 0.0 <= self.eps_h < 0.5:
            raise ValueError("eps_h must lie in [0, 0.5)")


def observe_transmission(tx_ok: int, eps_t: float, rng) -> int:
    """Arrival flag seen through a binary symmetric channel."""
    flip = rng.random() < eps_t
    return (1 - tx_ok) if flip else tx_ok


def observe_channel_ge(state: int, eps_h: float, rng) -> int:
    """Good/bad state seen through a binary symmetric channel."""
    flip = rng.random() < eps_h
    return (1 - state) if flip else state


def observe_channel_hmm(envelope: float, obs_noise_var: float, rng) -> float:
    """Envelope plus additive Gaussian noise."""
    return envelope + math.sqrt(obs_noise_var) * rng.standard_normal()
