"""Actor-critic reinforcement learning with a chaotic recurrent actor."""

__version__ = "0.1.0"
