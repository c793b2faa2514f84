"""Smoke test for the ncspred extension module.

Build first:
    cargo build -p ncspred-py --features extension-module
then run:
    python3 python/smoke_test.py
"""

import json
import os
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / profile / "libncspred.so" for profile in ("release", "debug")
    ]
    found = [p for p in candidates if p.exists()]
    if not found:
        sys.exit("libncspred.so not found; build ncspred-py first")
    tmp = tempfile.mkdtemp()
    shutil.copy(max(found, key=os.path.getmtime), Path(tmp) / "ncspred.so")
    sys.path.insert(0, tmp)
    import ncspred

    return ncspred


def main():
    ncspred = load_module()

    f, g = ncspred.discretize([[-1.0]], [[1.0]], 1.0)
    assert abs(f[0][0] - 0.36787944117144233) < 1e-12, f
    assert abs(g[0][0] - 0.6321205588285577) < 1e-12, g

    plant = ncspred.Plant.demo(0.1)
    assert (plant.states, plant.inputs, plant.n_drop) == (2, 1, 3), plant
    assert len(plant.modes()) == 3
    again = ncspred.Plant.from_json(plant.to_json())
    assert again.modes() == plant.modes()

    published = ncspred.published_gains(0.1)
    report = ncspred.verify(plant, published)
    assert report["certified"] and report["worst_margin"] < 0, report
    assert all(ok for _, _, ok in report["schur"]) and len(report["schur"]) == 9

    result = ncspred.synthesize(plant)
    assert result["status"] == "Stabilized", result["status"]
    assert json.loads(result["json"])["status"] == "Stabilized"
    assert ncspred.verify(plant, result["gains"])["certified"]

    trace = ncspred.simulate(plant, result["gains"], [-3.0, 2.0], seed=42)
    assert len(trace["x"]) == 200 and trace["settled_at"] is not None, trace["settled_at"]
    svg = ncspred.plot(trace["csv"])
    assert svg.count("<polyline") == 2

    try:
        ncspred.Plant.from_json("{}")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed model accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
