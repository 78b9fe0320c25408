from cohesion_algos.stats.agreement import (
    WEIGHTINGS,
    AgreementReport,
    AnnotationMatrix,
    EigenSpectrum,
    agreement_report,
    kappa_weights,
    pairwise_kappas,
    pca_eigenspectrum,
    rater_variance_stats,
    weighted_kappa,
)
from cohesion_algos.stats.annotations import read_annotations, write_annotations

__all__ = [
    "WEIGHTINGS",
    "AgreementReport",
    "AnnotationMatrix",
    "EigenSpectrum",
    "agreement_report",
    "kappa_weights",
    "pairwise_kappas",
    "pca_eigenspectrum",
    "rater_variance_stats",
    "weighted_kappa",
    "read_annotations",
    "write_annotations",
]
