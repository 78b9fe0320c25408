import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cohesion_algos.errors import ConfigurationError, SchemaError, UndefinedKappaError
from cohesion_algos.labels import NUM_LEVELS

WEIGHTINGS = ("linear", "quadratic")


@dataclass(frozen=True)
class AnnotationMatrix:
    """``labels[i, r]`` is the cohesion level rater ``r`` gave item ``i``."""

    labels: np.ndarray
    raters: Tuple[str, ...] = ()
    items: Tuple[str, ...] = ()
    num_levels: int = NUM_LEVELS

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise SchemaError(f"annotations must be items x raters, got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise SchemaError("annotation labels must be integers")
            labels = labels.astype(np.int64)
        n, r = labels.shape
        if n < 2:
            raise SchemaError(f"at least two items are needed, got {n}")
        if r < 2:
            raise SchemaError(f"at least two raters are needed, got {r}")
        if labels.min() < 0 or labels.max() >= self.num_levels:
            raise SchemaError(f"labels must lie in [0, {self.num_levels - 1}]")
        raters = tuple(self.raters) or tuple(f"rater{i + 1}" for i in range(r))
        if len(raters) != r:
            raise SchemaError(f"{len(raters)} rater ids for {r} columns")
        items = tuple(self.items)
        if items and len(items) != n:
            raise SchemaError(f"{len(items)} item ids for {n} rows")
        object.__setattr__(self, "labels", labels.astype(np.int64))
        object.__setattr__(self, "raters", raters)
        object.__setattr__(self, "items", items)

    @property
    def num_items(self) -> int:
        return self.labels.shape[0]

    @property
    def num_raters(self) -> int:
        return self.labels.shape[1]


def rater_variance_stats(m: AnnotationMatrix) -> Tuple[float, float]:
    """Per-item population variance and standard deviation across raters, averaged over items."""
    variances = np.var(m.labels.astype(np.float64), axis=1)
    return float(np.mean(variances)), float(np.mean(np.sqrt(variances)))


@dataclass(frozen=True)
class EigenSpectrum:
    """Eigenvalues of the rater covariance in descending order and their shares of the trace.

    ``degenerate`` marks a matrix without any variance; its shares are ``(1, 0, ..., 0)``.
    """

    eigenvalues: np.ndarray
    shares: np.ndarray
    degenerate: bool = False


def pca_eigenspectrum(m: AnnotationMatrix) -> EigenSpectrum:
    """Spectrum of the R x R (population) covariance with items as observations."""
    covariance = np.cov(m.labels.astype(np.float64), rowvar=False, bias=True)
    eigenvalues = np.clip(np.linalg.eigvalsh(covariance)[::-1], 0.0, None)
    total = eigenvalues.sum()
    if total <= 0:
        shares = np.zeros(m.num_raters)
        shares[0] = 1.0
        return EigenSpectrum(eigenvalues, shares, degenerate=True)
    return EigenSpectrum(eigenvalues, eigenvalues / total)


def kappa_weights(num_levels: int, weighting: str = "linear") -> np.ndarray:
    """Disagreement weights ``1 - w_ij`` of the chosen agreement weighting."""
    if weighting not in WEIGHTINGS:
        raise ConfigurationError(f"unknown weighting {weighting!r}; choose from {WEIGHTINGS}")
    if num_levels < 2:
        raise ConfigurationError(f"kappa needs at least two levels, got {num_levels}")
    levels = np.arange(num_levels)
    distance = np.abs(levels[:, None] - levels[None, :]) / (num_levels - 1)
    return distance if weighting == "linear" else distance**2


def weighted_kappa(
    rater_a: Sequence[int],
    rater_b: Sequence[int],
    num_levels: int = NUM_LEVELS,
    weighting: str = "linear",
) -> float:
    """Weighted Cohen's kappa of two raters, ``(p_o - p_e) / (1 - p_e)``.

    Evaluated as ``1 - sum(d * observed) / sum(d * expected)`` over symmetrised integer
    tables, so ``kappa(a, b) == kappa(b, a)`` bitwise and ``kappa(x, x) == 1`` exactly.
    """
    a = np.asarray(rater_a)
    b = np.asarray(rater_b)
    if a.ndim != 1 or a.shape != b.shape:
        raise SchemaError(f"raters must label the same items, got {a.shape} and {b.shape}")
    n = len(a)
    if n < 2:
        raise SchemaError(f"kappa needs at least two items, got {n}")
    for labels in (a, b):
        if labels.min() < 0 or labels.max() >= num_levels:
            raise SchemaError(f"labels must lie in [0, {num_levels - 1}]")
    disagreement = kappa_weights(num_levels, weighting)

    observed = np.zeros((num_levels, num_levels), dtype=np.int64)
    np.add.at(observed, (a, b), 1)
    count_a = np.bincount(a, minlength=num_levels)
    count_b = np.bincount(b, minlength=num_levels)
    observed = observed + observed.T
    expected = np.outer(count_a, count_b) + np.outer(count_b, count_a)

    chance_disagreement = float(np.sum(disagreement * expected)) / n
    if chance_disagreement == 0:
        raise UndefinedKappaError("chance agreement is 1; kappa is undefined for these raters")
    return 1.0 - float(np.sum(disagreement * observed)) / chance_disagreement


def pairwise_kappas(
    m: AnnotationMatrix, weighting: str = "linear"
) -> Dict[Tuple[int, int], float]:
    return {
        (i, j): weighted_kappa(m.labels[:, i], m.labels[:, j], m.num_levels, weighting)
        for i, j in itertools.combinations(range(m.num_raters), 2)
    }


@dataclass
class AgreementReport:
    num_items: int
    num_raters: int
    weighting: str
    average_variance: float
    average_std: float
    eigenvalue_shares: List[float]
    degenerate_variance: bool
    pairwise_kappas: List[Dict[str, Any]] = field(default_factory=list)
    mean_kappa: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json() + "\n")


def agreement_report(m: AnnotationMatrix, weighting: str = "linear") -> AgreementReport:
    """Variance, eigen-spectrum and pairwise weighted kappas of an annotation matrix."""
    variance, std = rater_variance_stats(m)
    spectrum = pca_eigenspectrum(m)
    kappas = pairwise_kappas(m, weighting)
    return AgreementReport(
        num_items=m.num_items,
        num_raters=m.num_raters,
        weighting=weighting,
        average_variance=variance,
        average_std=std,
        eigenvalue_shares=spectrum.shares.tolist(),
        degenerate_variance=spectrum.degenerate,
        pairwise_kappas=[
            {"raters": [m.raters[i], m.raters[j]], "kappa": kappa}
            for (i, j), kappa in kappas.items()
        ],
        mean_kappa=float(np.mean(list(kappas.values()))),
    )
