"""Compare the non-learning policies on a lossy two-state channel.

Fixed headers bracket the problem: always-IR is robust but pays 80 bits a
packet, always-CO3 is cheap but collapses once the decompressor slides out
of full context.  The window-threshold policy converts feedback into
context knowledge; sweeping its request probability traces the efficiency
vs feedback-cost curve the learned agent has to beat.
"""

import numpy as np

from bdrohc.baselines import FixedPolicy, KtConfig, KtPolicy, RandomPolicy
from bdrohc.channels import GilbertElliotConfig, ObsNoiseConfig
from bdrohc.core import HeaderLengths, HeaderType, SourceDynamics
from bdrohc.env import EnvConfig, run_episode
from bdrohc.harness import compute_metrics

cfg = EnvConfig(
    lengths=HeaderLengths(20, 60, 15, 1),
    channel=GilbertElliotConfig(5.0, 0.2, 0.9, 0.1),
    noise=ObsNoiseConfig(0.1, 0.1),
    source=SourceDynamics.first_order(1.0, 0.1),
    w=5,
    delay=4,
    horizon=2000,
)

SEEDS = range(5)


def averaged(policy_factory):
    effs, fbs, rewards = [], [], []
    for seed in SEEDS:
        trace = run_episode(policy_factory(), cfg, seed)
        m = compute_metrics(trace, cfg.lengths)
        effs.append(m.transmission_efficiency)
        fbs.append(m.feedback_rate)
        rewards.append(m.mean_reward)
    return np.mean(effs), np.mean(fbs), np.mean(rewards)


print(f"{'policy':<22} {'efficiency':>10} {'feedback':>9} {'reward':>8}")
rows = [
    ("always IR", lambda: FixedPolicy(HeaderType.IR)),
    ("always CO7", lambda: FixedPolicy(HeaderType.CO7)),
    ("always CO3", lambda: FixedPolicy(HeaderType.CO3)),
    ("uniform random", RandomPolicy),
]
for p in (0.0, 0.05, 0.2, 0.5, 1.0):
    rows.append(
        (f"threshold, p={p:g}", lambda p=p: KtPolicy(KtConfig(w=cfg.w, feedback_prob=p)))
    )
for name, factory in rows:
    eff, fb, reward = averaged(factory)
    print(f"{name:<22} {eff:>10.4f} {fb:>9.4f} {reward:>8.4f}")

print(
    "\nalways-CO3 never repairs context, so almost nothing decodes; the\n"
    "threshold policy needs only a few percent feedback to hold most of\n"
    "the compressible-header gain."
)
