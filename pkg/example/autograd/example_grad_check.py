import numpy as np

from cohesion_algos.autograd import Tensor, check_module_gradients, grad_check
from cohesion_algos.autograd import functional as F
from cohesion_algos.models import dynamic_routing
from cohesion_algos.modules import Activation, Dense, Sequential

if __name__ == "__main__":
    rng = np.random.default_rng(0)

    u_hat = rng.normal(size=(2, 8, 7, 4))
    error = grad_check(lambda u: F.sum(F.l2_norm(dynamic_routing(u, 3), axis=-1)), u_hat)
    print(f"routing: {error:.2e}")

    net = Sequential(Dense(5, 8, rng=rng), Activation("swish"), Dense(8, 1, rng=rng))
    net = net.astype(np.float64)
    x = Tensor(rng.normal(size=(4, 5)))
    error = check_module_gradients(lambda: F.mean(F.square(net(x))), net)
    print(f"dense net: {error:.2e}")
