import io
import time
from pathlib import Path

import pytest

from lambdakerr import preset, sweep

GOLDEN = Path(__file__).parent / "golden"
PRESET_GRID = [(name, gamma) for name in ("fig-a", "fig-b", "fig-c", "fig-d") for gamma in (1, 2)]


def golden_path(name, gamma):
    return GOLDEN / f"{name}_gamma{gamma}.csv"


@pytest.fixture(scope="session")
def preset_sweeps():
    """Full-precision rows, CSV text and wall time for every preset sweep (single thread)."""
    out = {}
    for name, gamma in PRESET_GRID:
        cfg = preset(name, gamma)
        t0 = time.perf_counter()
        rows = sweep.simulate_rows(cfg)
        elapsed = time.perf_counter() - t0
        buf = io.StringIO()
        sweep.write_csv(rows, sweep.header(cfg), buf)
        out[(name, gamma)] = {"rows": rows, "csv": buf.getvalue(), "seconds": elapsed, "config": cfg}
    return out
