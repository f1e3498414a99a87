"""Where can a jump live? A refinement study.

A smooth profile with a jump of height one across the line ``x1 = 1/2`` is
measured with the dual modular of its symmetric gradient on finer and finer
grids. If the exponent is one on a strip around the line, the jump contributes
a finite amount equal to the recession slope times the jump height times the
line length (here 1). With ``p = 2`` everywhere the contribution doubles at
each refinement: quadratic growth cannot accommodate a jump.

Run: python3 demos/04_jump_refinement.py
"""

import numpy as np

from motgv import decomposition_experiment, strip_exponent

print("p = 1 on the strip around the jump, p = 2 elsewhere")
print(decomposition_experiment(strip_exponent, jump_height=1.0, levels=7).to_text())
print()
print("p = 2 everywhere")
print(decomposition_experiment(lambda x1, x2: np.full_like(x1, 2.0), jump_height=1.0, levels=7).to_text())
