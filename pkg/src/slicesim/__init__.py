"""Joint eMBB/URLLC physical-layer slicing simulator with a PPO scheduler."""

from .env import EnvConfig, EnvState, SlicingEnv, StepResult
from .grid import ClassDistribution, Codeword, ResourceGrid, generate_placement
from .ppo import PpoAgent, PpoConfig, train
from .urllc import UrllcPacket, UrllcQueue

__all__ = [
    "ClassDistribution",
    "Codeword",
    "EnvConfig",
    "EnvState",
    "PpoAgent",
    "PpoConfig",
    "ResourceGrid",
    "SlicingEnv",
    "StepResult",
    "UrllcPacket",
    "UrllcQueue",
    "generate_placement",
    "train",
]
