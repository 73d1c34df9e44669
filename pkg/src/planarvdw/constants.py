"""Physical constants (SI, exact since the 2019 redefinition)."""

import math

KB = 1.380649e-23  # J/K
H = 6.62607015e-34  # J s
HBAR = H / (2.0 * math.pi)
C = 2.99792458e8  # m/s
