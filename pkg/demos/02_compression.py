"""
How much does the quadtree save?
================================

With perfectly diagonal correlations on a 512 x 512 grid a noise-free
sampler only has to resolve the diagonal, so each tree holds about
3n leaves and four trees land near 12(n - log2 n - 2). A realistic pump
source with detector noise is shown for comparison.
"""

import numpy as np

from entropic_witness import GridSpec, PartitionTree, RateModel, SamplerParams, measurement_count_bound
from entropic_witness import run_acquisition
from entropic_witness.config import build_config
from entropic_witness.detector import DetectorConfig
from entropic_witness.quadtree import acquire_tree
from entropic_witness.runner import naive_measurements

n = 512
det = DetectorConfig(noise_free=True)
total = 0
for i in range(4):
    # positions correlated, momenta anti-correlated
    masses = np.eye(n) / n if i < 2 else np.eye(n)[::-1] / n
    tree = PartitionTree.new("position" if i < 2 else "momentum", "xy"[i % 2], GridSpec(n, 1.0), tree_id=i)
    acquire_tree(tree, SamplerParams(alpha=1e-4, iterative_passes=0), det, RateModel(masses, 26_400.0, det=det))
    total += tree.n_leaves()

print(f"diagonal leaves  {total}  (bound {measurement_count_bound(n)})")

result = run_acquisition(build_config({"grid.n": n}))
print(f"pump leaves      {result.n_leaves()}")
print(f"naive            {naive_measurements(n):.3e}")
print(f"improvement      {naive_measurements(n) / result.n_leaves():.3e}")
