"""Smoke test for the gasket_bvp_py extension module.

Build first, for example:
    cargo build -p gasket-bvp-py --release --features extension-module
    cp target/release/libgasket_bvp_py.so python/gasket_bvp_py.so
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import gasket_bvp_py as g


def close(a, b, tol=1e-10):
    return abs(a - b) <= tol


def main():
    one = g.DyadicSequence("1.0", 8)
    m0, m1, m2 = one.ratios()
    assert close(m0, 0.3) and close(m1, 91 / 160) and close(m2, 21 / 160)
    assert close(one.energy_h0(), 7 / 3)
    assert close(one.energy_h1(), 35 / 8)
    assert close(one.energy_h_omega("1"), 175 / 12)
    assert close(one.dtn_multiplier(0), 35 / 8)

    odd = g.DyadicSequence("arith:1,2", 4)
    assert odd.exponents == [1, 3, 5, 7]
    assert odd.nonconsecutive_bound() == 2

    seq = g.DyadicSequence.from_exponents([1, 3, 4, 6])
    spec = g.HaarSpectrum(1.0, 0.0, {"": 0.5, "2": -0.25})
    mesh = g.GasketMesh(8)
    values = g.synthesize(seq, spec, mesh)
    assert len(values) == mesh.num_vertices
    assert close(values[0], 1.0)
    assert any(math.isnan(v) for v in values)

    flux = json.loads(g.normal_derivative(one, g.HaarSpectrum(0.0, 0.0, {"": 1.0})))
    assert close(flux["coeffs"][0]["c"], 35 / 8)

    x1 = g.DyadicSequence("1.0", 4).exponents
    trunc = g.DyadicSequence.from_exponents(x1)
    mesh6 = g.GasketMesh(6)
    u = g.solve_green(trunc, [1.0] * mesh6.num_vertices, 3, mesh6)
    assert u[0] == 0.0 and max(v for v in u if not math.isnan(v)) > 0.0

    assert close(g.hausdorff_dimension(2), math.log2((1 + math.sqrt(5)) / 2))
    ok, report = g.verify_group("golden")
    assert ok, report
    assert g.growth(2, 3).startswith("N,E_min,ratio")

    try:
        g.DyadicSequence("1.5")
    except ValueError:
        pass
    else:
        raise AssertionError("x > 1 must be rejected")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
