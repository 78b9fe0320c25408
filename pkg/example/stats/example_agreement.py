import sys

import numpy as np

from cohesion_algos.stats import AnnotationMatrix, agreement_report, read_annotations


def main():
    if len(sys.argv) > 1:
        annotations = read_annotations(sys.argv[1])
    else:
        rng = np.random.default_rng(0)
        truth = rng.integers(0, 4, size=(50, 1))
        noise = rng.integers(-1, 2, size=(50, 5))
        annotations = AnnotationMatrix(np.clip(truth + noise, 0, 3))

    report = agreement_report(annotations)
    print(f"variance = {report.average_variance:.3f}, std = {report.average_std:.3f}")
    print(f"eigenvalue shares = {np.round(report.eigenvalue_shares, 3)}")
    print(f"mean kappa = {report.mean_kappa:.3f}")


if __name__ == "__main__":
    main()
