"""The command line front end driven from Python.

Equivalent shell commands:

    lagrangian-ac run --space fem --n 16 --eps2 1e-4 --dt 1e-3 --t-end 0.05 --out runs/demo
    lagrangian-ac verify --only 9,10
"""

import tempfile
from pathlib import Path

from lagrangian_ac.cli import main

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "demo"
    main(["run", "--space", "fem", "--n", "16", "--eps2", "1e-4", "--dt", "1e-3",
          "--t-end", "0.05", "--snapshot-times", "0.01,0.02", "--out", str(out)])
    for p in sorted(out.iterdir()):
        print(" ", p.name, p.stat().st_size, "bytes")
    print((out / "energy.csv").read_text().splitlines()[0])
main(["verify", "--only", "9,10"])
