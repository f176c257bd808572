"""
Acquisition time and the witness
================================

With few records per leaf the raw witness is biased upward by shot noise:
small counts look sharper than the true distribution. Evaluating the same
run on growing record prefixes shows the estimate settle.
"""

from pathlib import Path

from entropic_witness import sweep_time
from entropic_witness.config import load_config

cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "quickstart.cfg")
rows = sweep_time(cfg, [1, 2, 4, 8, 16, 32])

print(" records   t/leaf(s)   raw E_f        subtracted E_f")
for r in rows:
    print(f"{r['records']:8d} {r['time_per_partition']:10.1f}   "
          f"{r['ef_raw']:.3f}+/-{r['sigma_raw']:.3f}   {r['ef_sub']:.3f}+/-{r['sigma_sub']:.3f}")
