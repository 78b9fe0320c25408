import numpy as np

from cohesion_algos.modules import Activation, BatchNorm, Dense, Sequential, evaluating

if __name__ == "__main__":
    rng = np.random.default_rng(0)
    net1 = Sequential(Dense(10, 32, rng=rng), BatchNorm(32), Activation("relu"), Dense(32, 1))
    net2 = Sequential(Dense(10, 32, rng=rng), Activation("relu"), Dense(32, 1))
    net3 = Sequential(Dense(10, 32, rng=rng), Activation("swish"), Dense(32, 1))

    with evaluating(net1, net2, net3) as (n1, n2, n3):
        print(n1.training)
        print(n2.training)
        print(n3.training)

    print(net1.training)
    print(net2.training)
    print(net3.training)
