from cohesion_algos.utils.logger import logger
from cohesion_algos.utils.manual_seed import manual_seed
from cohesion_algos.utils.statistics import Statistics, mean_or_nan

__all__ = ["logger", "manual_seed", "Statistics", "mean_or_nan"]
