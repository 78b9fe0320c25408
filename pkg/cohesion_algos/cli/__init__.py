from cohesion_algos.cli.commands import (
    COMMAND_HANDLERS,
    cmd_crossval,
    cmd_eval,
    cmd_saliency,
    cmd_stats,
    cmd_synth,
    cmd_train,
)
from cohesion_algos.cli.config import MODEL_CHOICES, RunConfig, build_config
from cohesion_algos.cli.main import build_parser, entrypoint, main

__all__ = [
    "COMMAND_HANDLERS",
    "cmd_crossval",
    "cmd_eval",
    "cmd_saliency",
    "cmd_stats",
    "cmd_synth",
    "cmd_train",
    "MODEL_CHOICES",
    "RunConfig",
    "build_config",
    "build_parser",
    "entrypoint",
    "main",
]
