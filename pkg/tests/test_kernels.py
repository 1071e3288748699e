"""The compiled loops must reproduce the step-by-step reference exactly."""

import numpy as np
import pytest

from qrlsim.agents import (
    AgentConfig,
    QLearningAgent,
    QRLAgent,
    TD0Agent,
    q_learning_episode,
    qrl_episode,
    td0_episode,
)
from qrlsim.gridworld import load_map
from qrlsim.harness import train

WORLDS = [
    "S....\n.....\n..#..\n....G\n",
    "S..#....\n.#.#.##.\n.#...#..\n.####.#.\n......#G\n",
]

CONFIGS = [
    dict(alpha=0.1, k=0.05),
    dict(alpha=0.3, k=0.02, sweep=True),
    dict(alpha=0.5, k=0.05, alpha_schedule="visits"),
    dict(alpha=0.1, k=0.05, epsilon=0.2, max_steps_per_episode=15),
]


def reference(kind, world, cfg, episodes):
    rng = np.random.default_rng(cfg.seed)
    if kind == "qrl":
        agent = QRLAgent(world, cfg)
        steps = [qrl_episode(agent, world, rng, i) for i in range(episodes)]
    elif kind == "td0":
        agent = TD0Agent(world, cfg)
        steps = [td0_episode(agent, world, rng, i) for i in range(episodes)]
    else:
        agent = QLearningAgent(world, cfg)
        steps = [q_learning_episode(agent, world, rng, i) for i in range(episodes)]
    return [t.steps for t in steps], [t.truncated for t in steps], agent


@pytest.mark.parametrize("text", WORLDS)
@pytest.mark.parametrize("overrides", CONFIGS)
@pytest.mark.parametrize("kind", ["qrl", "td0", "qlearning"])
def test_kernel_matches_reference(kind, text, overrides):
    world = load_map(text)
    cfg = AgentConfig(seed=17, **overrides)
    ref_steps, ref_trunc, ref = reference(kind, world, cfg, 40)
    steps, trunc, fast = train(kind, world, cfg, 40)
    assert list(steps) == ref_steps
    assert list(trunc) == ref_trunc
    if kind == "qrl":
        np.testing.assert_array_equal(fast.register_matrix(), ref.register_matrix())
        np.testing.assert_array_equal(fast.values, ref.values)
    elif kind == "td0":
        np.testing.assert_array_equal(fast.values, ref.values)
    else:
        np.testing.assert_array_equal(fast.q, ref.q)
    np.testing.assert_array_equal(fast.visits, ref.visits)


def test_trained_registers_remain_normalized(empty20):
    _, _, agent = train("qrl", empty20, AgentConfig(alpha=0.06, k=0.05, seed=2), 300)
    probs = np.abs(agent.register_matrix()) ** 2
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)
