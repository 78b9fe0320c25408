import logging

import numpy as np

from cohesion_algos.datasets import ArrayDataset
from cohesion_algos.experiments import Evaluator


class ConstantModel(object):
    kind = "constant"

    def predict(self, batch):
        return {"gcs": np.full(len(batch), 1.5)}


def main():
    logging.basicConfig(level=logging.INFO)
    dataset = ArrayDataset(gcs=np.array([0.0, 1.0, 2.0, 3.0]))

    evaluator = Evaluator(dataset, eval_interval=2)

    for epoch in range(1, 5):
        metrics = evaluator.evaluate_if_necessary(epoch, ConstantModel())
        if metrics is not None:
            print(f"epoch {epoch}: {metrics.summary()}")


if __name__ == "__main__":
    main()
