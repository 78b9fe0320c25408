import random
from typing import Optional

import numpy as np


def manual_seed(
    seed: int = 0,
    random_seed: Optional[int] = None,
    np_seed: Optional[int] = None,
) -> Optional[np.random.Generator]:
    """Seed the global generators and return a dedicated ``numpy`` generator.

    Components never read the global state themselves; the returned generator (or an
    explicit ``seed`` argument) is what makes a run reproducible.
    """
    if seed is None:
        return None
    random.seed(seed if random_seed is None else random_seed)
    np.random.seed(seed if np_seed is None else np_seed)
    return np.random.default_rng(seed)
