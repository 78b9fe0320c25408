from contextlib import contextmanager
from typing import List, Tuple

from cohesion_algos.modules.module import Module


def _modes(ms) -> List[Tuple[Module, bool]]:
    return [(sub, sub.training) for m in ms for _, sub in m.named_modules()]


@contextmanager
def evaluating(*ms: Module):
    """Switch ``ms`` and all their submodules to evaluation mode for the block.

    On exit every submodule gets back its own flag, so a frozen part that was already in
    evaluation mode (the CapsNet inside a face-level model) stays there.
    """
    modes = _modes(ms)
    try:
        for m in ms:
            m.eval()
        yield ms
    finally:
        for sub, training in modes:
            object.__setattr__(sub, "training", training)
