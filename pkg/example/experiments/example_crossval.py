import numpy as np

from cohesion_algos.datasets import ArrayDataset
from cohesion_algos.experiments import cross_validate
from cohesion_algos.models import ImageHeadConfig, ImageLevelHead


def main():
    rng = np.random.default_rng(0)
    features = rng.normal(size=(200, 16))
    gcs = np.clip(1.5 + features[:, :4].sum(axis=1) / 4, 0, 3)
    dataset = ArrayDataset(features=features, gcs=gcs)

    config = ImageHeadConfig(feature_width=16, hidden=(32, 32))
    report = cross_validate(
        lambda: ImageLevelHead(config, seed=0),
        dataset,
        k=5,
        lrs=(0.1, 0.01, 0.001),
        epochs=20,
        workers=3,
    )
    print(report.to_table())


if __name__ == "__main__":
    main()
