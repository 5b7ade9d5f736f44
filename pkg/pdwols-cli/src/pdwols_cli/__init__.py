"""pdWOLS CLI - command-line surface for fitting, tuning and simulating regimes."""

__version__ = "0.1.0"
