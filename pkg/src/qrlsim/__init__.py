"""Classical simulator of quantum reinforcement learning on gridworlds."""

from .agents import (
    AgentConfig,
    EpisodeTrace,
    QLearningAgent,
    QRLAgent,
    TD0Agent,
    greedy_path_length,
    q_learning_episode,
    q_learning_step,
    qrl_episode,
    qrl_step,
    td0_episode,
    td0_step,
)
from .errors import ConfigError, InvalidArgument, InvalidState, MapParseError, QRLError
from .gridworld import (
    EigenAction,
    GridWorld,
    StepOutcome,
    bfs_shortest,
    load_map,
    read_map,
    step,
    value_iteration,
)
from .quantum import (
    ActionRegister,
    compute_L,
    grover_angle,
    grover_iterate,
    hadamard,
    measure_collapse,
    phase_gate,
    qubit_count,
    uniform_superposition,
)

__version__ = "0.1.0"
