"""
Admissible balls and the layered dyadic grid
============================================

"""

import numpy as np

from gausstent import (
    AdmissibleBall,
    admissibility_radius,
    count_in_layer,
    cube_of,
    cubes_in_layer,
    gaussian_measure_ball,
    label_of,
    layer_of,
)

# the admissibility radius caps ball sizes: unit near the origin, 1/|x| far out
for x in (0.0, 0.5, 2.0, 10.0):
    print(f"m({x:5.1f}) = {float(admissibility_radius(np.array([[x]]))[0]):.4f}")

# an admissible ball knows its Gaussian measure, to a stated quadrature tolerance
ball = AdmissibleBall([1.5], 0.4)
res = gaussian_measure_ball(ball)
print(f"\ngamma(B(1.5, 0.4)) = {res.value:.10f}  (+- {res.abs_error:.1e}, {res.method})")

# space splits into dyadic layers; cube sides halve with each layer so that
# every cube is comparable to the admissible scale of its points
for x in (0.3, -1.0, 3.0, 9.0):
    pt = np.array([x])
    cube = cube_of(pt, 0)
    print(f"x = {x:5.1f}: layer {layer_of(pt)}, generation-0 cube side {cube.side:.4f}")

# layer populations follow a closed form; enumerate a few to check
print()
for l in range(4):
    listed = len(list(cubes_in_layer(0, l, 1)))
    print(f"layer {l}: {count_in_layer(0, l, 1)} cubes (enumerated {listed})")

# labels tile each deep layer periodically; same label means well-separated
kappa = 6
cubes = list(cubes_in_layer(0, 4, 1))
labels = [label_of(c, kappa).components[0] for c in cubes[:8]]
print(f"\nfirst labels in layer 4 at period 2^{kappa}: {labels}")
