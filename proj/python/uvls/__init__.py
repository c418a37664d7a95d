"""Python access to the uvls load-shedding core."""

import json

from . import _core
from ._core import (
    Checkpoint,
    Environment,
    NetworkCase,
    NumericalError,
    ScenarioError,
    ScenarioRejected,
    decode_action,
    eligible_fault_branches,
    load_case,
    load_checkpoint,
)

__all__ = [
    "Checkpoint", "Environment", "NetworkCase", "NumericalError", "ScenarioError",
    "ScenarioRejected", "decode_action", "eligible_fault_branches", "load_case",
    "load_checkpoint", "generate_scenarios", "reset", "run_relay", "expert_transitions",
    "train", "default_train_config",
]


def generate_scenarios(case, count, seed):
    """List of scenario dicts, deterministic per seed."""
    return json.loads(_core.generate_scenarios(case, count, seed))


def reset(env, scenario):
    return env.reset(json.dumps(scenario))


def episode_result(env):
    return json.loads(env.result())


def run_relay(env, scenario, relay_config=None):
    text = json.dumps(relay_config) if relay_config else ""
    return json.loads(_core.run_relay(env, json.dumps(scenario), text))


def expert_transitions(env, scenarios):
    """Number of relay transitions collected over `scenarios`."""
    return _core.expert_transitions(env, json.dumps(scenarios))


def default_train_config():
    return json.loads(_core.default_train_config())


def train(env, scenarios, config=None, with_expert=True, on_episode=None):
    """Returns (Checkpoint, per-episode joint reward array)."""
    cfg = default_train_config()
    cfg.update(config or {})
    return _core.train(env, json.dumps(scenarios), json.dumps(cfg), with_expert, on_episode)
