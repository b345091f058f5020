"""The quadratic nonlinearity N[w].

Pointwise values on jets, the bound |N| <= c (|grad w|^2 + z_n |grad w| |hess w|)
over random jets, and the difference between the exact rearrangement and the
literal displayed form when p != 2.
"""
import numpy as np

from dnlwave import Jet, new_params, nonlinearity_N
from dnlwave.experiments import pointwise_constant

# %% a linear jet: w = 0.1 z_n for (2,2)
jet = Jet(z_n=1.0, w=0.1, grad_tangential=(0.0,), d_n=0.1, hess=np.zeros((2, 2)))
print("N[0.1 z_n] =", nonlinearity_N(jet, new_params(2, 2)), " -1/110 =", -1 / 110)

# %% quadratic scaling: N[eps phi] / eps^2 is flat in eps
hess = np.array([[0.3, -0.2], [-0.2, 0.5]])
for eps in (0.1, 0.05, 0.025, 0.0125):
    j = Jet(0.7, 0.0, (0.4 * eps,), 0.3 * eps, eps * hess)
    print(f"eps={eps:<7} N/eps^2 = {nonlinearity_N(j, new_params(3, 2)) / eps**2:+.5f}")

# %% one constant for 1e5 random admissible jets
rng = np.random.default_rng(0)
for mp in [(2, 2), (3, 2), (1, 3), (2, 3)]:
    print(mp, "pointwise constant", round(pointwise_constant(new_params(*mp), 100_000, rng), 3))

# %% consistent vs displayed form
j = Jet(1.0, 0.0, (0.05,), 0.04, np.array([[0.2, 0.1], [0.1, -0.3]]))
for mp in [(2, 2), (1, 3)]:
    a = nonlinearity_N(j, new_params(*mp))
    b = nonlinearity_N(j, new_params(*mp), form="displayed")
    print(mp, f"consistent {a:+.6f}  displayed {b:+.6f}")
