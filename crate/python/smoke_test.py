"""Smoke test for the ensemble_gop extension module.

Build and install first:
    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml
"""

import json
import math

import ensemble_gop as eg


def main():
    golf = eg.Objective.golf_course([0.3, 0.7], 1 / 32)
    assert golf.evaluate([0.3, 0.7]) == 0.0
    assert golf.evaluate([0.9, 0.1]) == 1.0
    assert golf.known_optimum == [0.3, 0.7]

    m = eg.choose_sharpening_exponent(golf.gap_delta)
    cells = eg.choose_grid_resolution(golf.basin_size)
    grid = eg.Grid(golf.dimension, cells)
    assert grid.index(grid.midpoint(1234)) == 1234

    oracle = eg.Oracle.from_objective(golf, grid, m)
    result = eg.run_search(oracle, delta1=0.0)
    assert result["verified"], result
    assert result["total_queries"] == int(math.log2(grid.n_padded)) + 1
    assert result["found"] in oracle.marked_indices()

    refined = eg.refine(golf, grid.midpoint(result["found"]))
    assert refined["f_value"] == 0.0

    miss = eg.run_search(eg.Oracle.from_marked(16, []))
    assert not miss["verified"]

    report = eg.solve(json.dumps({
        "objective": {"kind": "gaussian_well", "center": [0.41], "sigma": 0.05},
        "delta1": 1e-3,
        "seed": 5,
    }))
    assert report["status"] == "success", report["status"]
    assert abs(report["descent"]["point"][0] - 0.41) < 1e-4

    well = eg.Objective.custom(
        "parabola", 1, 0.5, [0.2],
        lambda p: min(1.0, 30 * (p[0] - 0.6) ** 2),
        known_optimum=[0.6],
    )
    report = eg.solve(json.dumps({}), objective=well)
    assert report["status"] == "success"

    assert eg.required_trials(512, 2 ** -4, 1.0) == 2 ** 12
    assert eg.grover_pure_queries(1 << 20) == 805
    t = eg.ensemble_threshold_max_n(1e-7)
    assert 10 ** 8 <= t["max_unrestricted"] < 10 ** 9
    assert golf.validate(128)["unique_min_zero"]

    print("smoke test passed")


if __name__ == "__main__":
    main()
