"""
Constants for testing.
"""
import math

import numpy as np

# Seed used consistently across randomized tests
TEST_SEED = 1234

# Two-level worked example: rho = diag(0.8, 0.2), X = Pauli x
RHO_DIAG = (0.8, 0.2)
SIGMA_DIAG = (0.5, 0.5)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])

# ||rho^{1/2} X rho^{-1/2}|| = sqrt(0.8/0.2)
ARAKI_WORKED = 2.0
# 2 L(0.8, 0.2) = 2 * 0.6 / log 4
BKM_INNER_WORKED = 1.2 / math.log(4.0)
BKM_NORM_WORKED = math.sqrt(BKM_INNER_WORKED)

# S(rho|sigma) for rho = diag(0.8, 0.2), sigma = I/2
RELATIVE_ENTROPY_WORKED = 0.8 * math.log(1.6) + 0.2 * math.log(0.4)
# S(rho|sigma) + S(sigma|rho) = 0.3 log 4
SYMMETRIZED_ENTROPY_WORKED = 0.3 * math.log(4.0)
NEARBY_CONSTANT_WORKED = 2.5
TRACE_DISTANCE_WORKED = 0.6
