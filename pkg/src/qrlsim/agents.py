"""QRL agent plus classical TD(0) and Q-learning baselines.

The step functions here are the reference implementation.  Every step draws
from the supplied ``numpy.random.Generator`` in a fixed order:

* QRL: one ``random()`` for the collapse.
* TD(0) / Q-learning: one ``random()`` for the exploration test, then one
  more either for the uniform exploratory action or, only when several
  greedy actions tie, for picking among them.

:mod:`qrlsim.kernels` replays the same protocol in compiled loops, so an
episode run either way yields identical traces for the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, InvalidState
from .gridworld import N_ACTIONS, GridWorld, follow_policy, greedy_actions, step
from .quantum import (
    ActionRegister,
    compute_L,
    grover_angle,
    grover_iterate,
    measure_collapse,
    qubit_count,
    uniform_superposition,
)


@dataclass(frozen=True)
class AgentConfig:
    alpha: float = 0.06
    gamma: float = 0.99
    k: float = 0.01
    epsilon: float = 0.01
    max_steps_per_episode: int | None = None  # None: 20 * width * height
    seed: int = 0
    sweep: bool = False
    # "constant", or "visits" for alpha_t(s) = 1 / (1 + visits(s))
    alpha_schedule: str = "constant"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidArgument(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0 <= self.gamma <= 1:
            raise InvalidArgument(f"gamma must be in [0, 1], got {self.gamma}")
        if not self.k > 0:
            raise InvalidArgument(f"k must be > 0, got {self.k}")
        if not 0 <= self.epsilon <= 1:
            raise InvalidArgument(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.max_steps_per_episode is not None and self.max_steps_per_episode < 1:
            raise InvalidArgument("max_steps_per_episode must be positive")
        if not -(2**63) <= self.seed < 2**64:
            raise InvalidArgument("seed must fit in 64 bits")
        if self.alpha_schedule not in ("constant", "visits"):
            raise InvalidArgument(f"unknown alpha schedule {self.alpha_schedule!r}")

    def max_steps(self, g: GridWorld) -> int:
        if self.max_steps_per_episode is not None:
            return self.max_steps_per_episode
        return 20 * g.width * g.height

    def step_alpha(self, visits: np.ndarray, s: int) -> float:
        """Learning rate for the next update of ``s``; counts the visit."""
        if self.alpha_schedule == "constant":
            return self.alpha
        prior = visits[s]
        visits[s] += 1
        return 1.0 / (1.0 + prior)


@dataclass
class EpisodeTrace:
    episode: int
    steps: int
    truncated: bool
    terminal_reward: float
    transitions: list = field(default_factory=list, repr=False)


def new_value_table(g: GridWorld) -> np.ndarray:
    return np.zeros(g.n_states)


def new_q_table(g: GridWorld) -> np.ndarray:
    return np.zeros((g.n_states, N_ACTIONS))


def td_update(values: np.ndarray, s: int, r: float, v_next: float, alpha: float, gamma: float):
    """``V(s) <- V(s) + alpha (r + gamma V(s') - V(s))``."""
    values[s] += alpha * (r + gamma * v_next - values[s])


class QRLAgent:
    """Per-state action registers and a value table for one run."""

    def __init__(self, g: GridWorld, config: AgentConfig, n_actions: int = N_ACTIONS):
        self.config = config
        self.n_actions = n_actions
        self.n = max(1, qubit_count(n_actions))
        self.theta = grover_angle(self.n)
        uniform = uniform_superposition(self.n)
        self.registers = [uniform] * g.n_states
        self.values = new_value_table(g)
        self.visits = np.zeros(g.n_states, dtype=np.int64)

    def register_matrix(self) -> np.ndarray:
        return np.stack([r.amps for r in self.registers])

    def load_register_matrix(self, amps: np.ndarray):
        self.registers = [ActionRegister(self.n, row) for row in amps]


def qrl_step(agent: QRLAgent, env: GridWorld, s: int, rng: np.random.Generator):
    """Collapse, act, TD-update V(s), then amplify the measured action."""
    cfg = agent.config
    reg = agent.registers[s]
    a = measure_collapse(reg, rng)
    out = step(env, s, a % agent.n_actions)
    v_next = agent.values[out.next_state]
    td_update(agent.values, s, out.reward, v_next, cfg.step_alpha(agent.visits, s), cfg.gamma)
    L = compute_L(out.reward, v_next, cfg.k, agent.theta)
    agent.registers[s] = grover_iterate(reg, a, L)
    return out


def _run_episode(step_fn, env, max_steps, episode, record):
    s = env.start_index
    steps = 0
    transitions = []
    while True:
        out = step_fn(s)
        steps += 1
        if record:
            transitions.append((s, out.next_state, out.reward))
        if out.terminal:
            return EpisodeTrace(episode, steps, False, out.reward, transitions)
        if steps >= max_steps:
            return EpisodeTrace(episode, steps, True, out.reward, transitions)
        s = out.next_state


def qrl_episode(agent: QRLAgent, env: GridWorld, rng, episode: int = 0, record: bool = False):
    cfg = agent.config
    trace = _run_episode(
        lambda s: qrl_step(agent, env, s, rng), env, cfg.max_steps(env), episode, record
    )
    if cfg.sweep:
        sweep_values(agent.values, env, cfg.alpha, cfg.gamma, policy=_register_policy(agent))
    return trace


def _register_policy(agent: QRLAgent) -> np.ndarray:
    """Per-state probability of each executable action, padded indices folded."""
    amps = agent.register_matrix()
    probs = amps.real**2 + amps.imag**2
    folded = np.zeros((probs.shape[0], agent.n_actions))
    for a in range(probs.shape[1]):
        folded[:, a % agent.n_actions] += probs[:, a]
    return folded


def sweep_values(values, env: GridWorld, alpha: float, gamma: float, policy=None):
    """Relax every free non-goal state once, synchronously.

    With ``policy`` (state x action probabilities) the target is the policy's
    expected one-step return; without, the greedy lookahead maximum.
    """
    lookahead = env.reward + gamma * values[env.next_state]
    if policy is None:
        target = lookahead.max(axis=1)
    else:
        target = (policy * lookahead).sum(axis=1)
    mask = env.free_mask()
    mask[env.goal_index] = False
    values[mask] += alpha * (target[mask] - values[mask])


def _pick_tied(scores: np.ndarray, rng) -> int:
    best = scores.max()
    ties = np.flatnonzero(scores == best)
    if len(ties) == 1:
        return int(ties[0])
    return int(ties[min(int(rng.random() * len(ties)), len(ties) - 1)])


def epsilon_greedy(scores: np.ndarray, epsilon: float, rng) -> int:
    """Uniform random action with probability epsilon, else argmax (random ties)."""
    if rng.random() < epsilon:
        return min(int(rng.random() * len(scores)), len(scores) - 1)
    return _pick_tied(scores, rng)


def td0_select_action(values, env: GridWorld, s: int, gamma: float, epsilon: float, rng) -> int:
    """Epsilon-greedy over the one-step model lookahead ``r(s,a) + gamma V(next(s,a))``."""
    scores = env.reward[s] + gamma * values[env.next_state[s]]
    return epsilon_greedy(scores, epsilon, rng)


def td0_step(values, env: GridWorld, s: int, alpha: float, gamma: float, epsilon: float, rng):
    a = td0_select_action(values, env, s, gamma, epsilon, rng)
    out = step(env, s, a)
    td_update(values, s, out.reward, values[out.next_state], alpha, gamma)
    return out


def q_learning_step(q, env: GridWorld, s: int, alpha: float, gamma: float, epsilon: float, rng):
    a = epsilon_greedy(q[s], epsilon, rng)
    out = step(env, s, a)
    best_next = 0.0 if out.terminal else q[out.next_state].max()
    q[s, a] = (1 - alpha) * q[s, a] + alpha * (out.reward + gamma * best_next)
    return out


class TD0Agent:
    def __init__(self, g: GridWorld, config: AgentConfig):
        self.config = config
        self.values = new_value_table(g)
        self.visits = np.zeros(g.n_states, dtype=np.int64)


class QLearningAgent:
    def __init__(self, g: GridWorld, config: AgentConfig):
        self.config = config
        self.q = new_q_table(g)
        self.visits = np.zeros(g.n_states, dtype=np.int64)


def td0_episode(agent: TD0Agent, env: GridWorld, rng, episode: int = 0, record: bool = False):
    cfg = agent.config

    def fn(s):
        alpha = cfg.step_alpha(agent.visits, s)
        return td0_step(agent.values, env, s, alpha, cfg.gamma, cfg.epsilon, rng)

    trace = _run_episode(fn, env, cfg.max_steps(env), episode, record)
    if cfg.sweep:
        sweep_values(agent.values, env, cfg.alpha, cfg.gamma)
    return trace


def q_learning_episode(agent: QLearningAgent, env: GridWorld, rng, episode: int = 0, record: bool = False):
    cfg = agent.config

    def fn(s):
        alpha = cfg.step_alpha(agent.visits, s)
        return q_learning_step(agent.q, env, s, alpha, cfg.gamma, cfg.epsilon, rng)

    return _run_episode(fn, env, cfg.max_steps(env), episode, record)


def greedy_path_length(trained, env: GridWorld, gamma: float = 0.99):
    """Steps to the goal under the deterministic greedy policy, or None.

    ``trained`` is a value table (1-d array; one-step lookahead), a Q-table
    (2-d array, ``(states, actions)``) or a :class:`QRLAgent` (argmax
    ``|C_a|^2``).  Ties go to the lowest index; a revisited state means the
    policy cycles and the sentinel None is returned.
    """
    if isinstance(trained, QRLAgent):
        probs = _register_policy(trained)
        actions = np.argmax(probs, axis=1)
    else:
        arr = np.asarray(trained)
        if arr.ndim == 1:
            actions = greedy_actions(env, arr, gamma)
        elif arr.ndim == 2 and arr.shape[1] == N_ACTIONS:
            actions = np.argmax(arr, axis=1)
        else:
            raise InvalidArgument(f"cannot derive a policy from shape {arr.shape}")
    return follow_policy(env, actions)


def check_registers(agent: QRLAgent, tol: float = 1e-6):
    for s, reg in enumerate(agent.registers):
        if not reg.is_normalized(tol):
            raise InvalidState(f"register of state {s} drifted from unit norm")
