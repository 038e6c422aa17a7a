"""Command line front end.

Subcommands: train, eval, sweep, adapt, fsm-check, oracle-check.  Config
resolution order: schema defaults, then --preset, then --paper-scale, then
the --config file.  Exit status 0 on success, 2 on validation failure.
"""

from __future__ import annotations

import argparse
import sys

from . import harness
from .agent import AgentPolicy, EncoderSpec, run_training, save_checkpoint, load_checkpoint
from .baselines import FixedPolicy, KtPolicy, RandomPolicy
from .core import HeaderType


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdrohc",
        description="Header compression simulator and learned compressor policies",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    preset_names = sorted(harness.PRESETS)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
        p.add_argument("--out", help="output path")
        p.add_argument("--preset", choices=preset_names, help="named sweep preset")
        p.add_argument(
            "--paper-scale",
            action="store_true",
            help="switch to the long training schedule (3000 episodes of 10000 slots, width 2048)",
        )

    common(sub.add_parser("train", help="train the agent, write curve and checkpoint"))
    common(sub.add_parser("eval", help="evaluate a policy on a held-out stream"))
    common(sub.add_parser("sweep", help="train and evaluate across a sweep axis"))
    common(sub.add_parser("adapt", help="train across mid-run channel switches"))
    common(sub.add_parser("fsm-check", help="exhaustively verify the context state machine"))
    common(sub.add_parser("oracle-check", help="verify the tiny-instance optimum bound"))
    return parser


def _resolve_config(args) -> dict:
    cfg = harness.default_config()
    cfg = harness.apply_preset(cfg, args.preset, args.paper_scale)
    if args.config:
        cfg = harness.load_config(args.config, base=cfg)
    return cfg


def _cmd_train(args, cfg) -> int:
    out = args.out or "train_curve.csv"
    env_cfg = harness.make_env_config(cfg)
    agent_cfg = harness.make_agent_config(cfg)
    episodes = int(cfg["run.m"])
    result = run_training(env_cfg, agent_cfg, episodes, args.seed)
    harness.write_curve_csv(out, result)
    ckpt = out + ".params"
    epsilon = result.episode_epsilon[-1] if result.episode_epsilon else agent_cfg.epsilon_init
    save_checkpoint(ckpt, result.params, agent_cfg, episodes, epsilon)
    print(f"wrote {out} and checkpoint {ckpt}")
    return 0


def _eval_policy_for(cfg, args):
    name = cfg["run.policy"]
    env_cfg = harness.make_env_config(cfg)
    agent_cfg = harness.make_agent_config(cfg)
    if name == "rl":
        ckpt = cfg["run.checkpoint"]
        if ckpt:
            params, agent_cfg, _ = load_checkpoint(ckpt)
        else:
            result = run_training(env_cfg, agent_cfg, int(cfg["run.m"]), args.seed)
            params = result.params
        return AgentPolicy(params, EncoderSpec.for_env(env_cfg, agent_cfg))
    if name == "kt":
        return KtPolicy(harness.make_kt_config(cfg))
    if name == "random":
        return RandomPolicy()
    if name in ("fixed-ir", "fixed-co7", "fixed-co3"):
        header = {"fixed-ir": HeaderType.IR, "fixed-co7": HeaderType.CO7, "fixed-co3": HeaderType.CO3}
        return FixedPolicy(header[name])
    raise ValueError(f"unknown run.policy {name!r}")


def _cmd_eval(args, cfg) -> int:
    env_cfg = harness.make_env_config(cfg)
    policy = _eval_policy_for(cfg, args)
    trace, metrics = harness.evaluate_policy(policy, env_cfg, args.seed)
    trace_path = cfg["run.trace"]
    if trace_path:
        trace.to_csv(trace_path)
    rows = [
        {
            "sweep_param": "",
            "sweep_value": "",
            "policy": cfg["run.policy"],
            "efficiency": metrics.transmission_efficiency,
            "feedback_rate": metrics.feedback_rate,
            "mean_reward": metrics.mean_reward,
            "seed": args.seed,
        }
    ]
    out = args.out or "eval_metrics.csv"
    harness.write_result_csv(out, rows)
    print(
        f"{cfg['run.policy']}: efficiency {metrics.transmission_efficiency:.4f}, "
        f"feedback rate {metrics.feedback_rate:.4f}, mean reward {metrics.mean_reward:.4f}"
    )
    return 0


def _cmd_sweep(args, cfg) -> int:
    out = args.out or "sweep_results.csv"
    rows = harness.run_experiment(cfg, args.seed, out_path=out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _cmd_adapt(args, cfg) -> int:
    out = args.out or "adapt_curve.csv"
    harness.adapt_experiment(cfg, args.seed, out_path=out)
    print(f"wrote {out}")
    return 0


def _cmd_fsm_check(args, cfg) -> int:
    bad, lines = harness.fsm_check()
    for line in lines:
        print(line)
    print("fsm-check: " + ("PASS" if bad == 0 else f"FAIL ({bad} mismatches)"))
    return 0 if bad == 0 else 2


def _cmd_oracle_check(args, cfg) -> int:
    failures, lines = harness.oracle_check(args.seed)
    for line in lines:
        print(line)
    print("oracle-check: " + ("PASS" if failures == 0 else f"FAIL ({failures} policies above bound)"))
    return 0 if failures == 0 else 2


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "adapt": _cmd_adapt,
    "fsm-check": _cmd_fsm_check,
    "oracle-check": _cmd_oracle_check,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return _COMMANDS[args.command](args, cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
