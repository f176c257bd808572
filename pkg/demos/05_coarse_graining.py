"""
When does coarse-graining protect the witness?
==============================================

Averaging a joint distribution over blocks that form a product of row and
column partitions is a local operation on each side, so H(A|B) can only
grow and I(A:B) can only shrink. A quadtree with mixed block sizes is not
of that form: averaging a block moves mass between columns and can make
the conditioning marginal look sharper.
"""

import numpy as np

from entropic_witness import coarse_grain, conditional_entropy, mutual_information

rng = np.random.default_rng(1)
n = 16

# a noisy diagonal, coarse-grained on a uniform 2 x 2 grid
p = np.eye(n) + 0.05 * rng.random((n, n))
p /= p.sum()
q = coarse_grain(p, [(r, c, 2, 2) for r in range(0, n, 2) for c in range(0, n, 2)])
print("uniform 2x2 blocks")
print(f"  H(A|B) fine {conditional_entropy(p):.4f}  coarse {conditional_entropy(q):.4f}")
print(f"  I(A:B) fine {mutual_information(p):.4f}  coarse {mutual_information(q):.4f}")

# one unsplit quadrant beside single pixels
p = np.array([[0, 1, 3, 0], [0, 3, 0, 0], [0, 3, 1, 0], [0, 0, 0, 0]]) / 11
blocks = [(0, 0, 2, 2)] + [(r, c, 1, 1) for r in range(4) for c in range(4) if r >= 2 or c >= 2]
q = coarse_grain(p, blocks)
print("mixed quadtree tiling")
print(f"  H(A|B) fine {conditional_entropy(p):.4f}  coarse {conditional_entropy(q):.4f}")
print(f"  I(A:B) fine {mutual_information(p):.4f}  coarse {mutual_information(q):.4f}")
