"""
Tent-space atoms and the atomic decomposition
=============================================

"""

import numpy as np

from gausstent import (
    AdmissibleBall,
    Box,
    DGrid,
    NormConfig,
    TentFunction,
    atomic_decompose,
    m_from_norms,
    make_atom,
    t1q_norm,
    verify_atom_norm,
    verify_decomposition,
)

cfg = NormConfig(q=2.0)

# an atom lives in the tent over an admissible ball and is normalized by the
# ball's Gaussian measure; its tent norm is at most one up to lattice slack
grid = DGrid(Box([-8.0], [8.0]), 2.0**-8)
rng = np.random.default_rng(5)
center = 1.25
ball = AdmissibleBall([center], 2.0 * float(m_from_norms(abs(center))))
atom = make_atom(ball, 2.0, TentFunction(grid, rng.uniform(0.1, 1.0, (grid.S, grid.N))), cfg)
print(f"atom on B({center}, {ball.radius:.3f}): tent norm {verify_atom_norm(atom, cfg):.4f}")

# any nonnegative field splits into countably many such atoms with summable
# coefficients; the reconstruction is exact on the lattice
small = DGrid(Box([-4.0], [4.0]), 2.0**-5, t_min=2.0**-5)
vals = np.zeros((small.S, small.N))
core = np.nonzero(np.abs(small.centers[:, 0]) < 2.0)[0]
for _ in range(60):
    s = int(rng.integers(0, small.S))
    j = int(rng.choice(core))
    if small.active[s, j]:
        vals[s, j] = rng.uniform(0.2, 2.0)
f = TentFunction(small, vals)

decomp = atomic_decompose(f, cfg, 0.75)
rep = verify_decomposition(f, decomp, cfg)
print(f"\ndecomposition: {rep['terms']} terms")
print(f"reconstruction error (relative): {rep['reconstruction_rel']:.2e}")
print(f"atom supports inside their tents: {rep['atom_support_ok']}")
print(f"sum of coefficients: {rep['sum_lambda']:.4f}")
print(f"tent norm of the input: {t1q_norm(f, cfg):.4f}")
print(f"coefficient sum / tent norm: {rep['lambda_ratio']:.3f}")
