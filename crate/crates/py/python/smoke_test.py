"""Smoke test for the abelgas extension module. Run after `maturin develop`."""

import math
import pathlib
import sys
import tempfile

import abelgas

SCENARIOS = pathlib.Path(__file__).resolve().parents[2] / "core" / "scenarios"


def main():
    p = abelgas.ModelParams()
    assert math.isclose(p.growth_exponent(), 0.3454864253393665, rel_tol=1e-12)
    assert p.k_s1 == 12.1
    assert "mu2max" in p.placeholders()
    try:
        abelgas.ModelParams(alpha=2.0)
    except ValueError as e:
        assert "alpha" in str(e)
    else:
        raise AssertionError("alpha = 2 accepted")

    assert math.isclose(abelgas.upper_incomplete_gamma(1.0, 2.0), math.exp(-2.0), rel_tol=1e-14)
    v0 = abelgas.substrate_to_v(10.0, p.k_s1)
    assert math.isclose(abelgas.v_to_substrate(v0, p.k_s1), 10.0, rel_tol=1e-14)

    k = abelgas.AbelConstants(p, 0.1, 1.0)
    assert not k.is_washout()

    washout = abelgas.AbelConstants(p, 0.0, 1.0)
    cf = abelgas.ClosedForm.case1(washout, v0)
    assert math.isclose(cf.s1(0.0), 10.0, rel_tol=1e-12)
    audit = washout.sign_audit(v0)
    print("sign audit at washout:", audit)

    zf = abelgas.ModelParams(d=1.0, s1_in=0.125, k_s1=1.0, mu1max=1.0, k1=1.125, alpha=0.05)
    kz = abelgas.AbelConstants(zf, 0.0, 1.0)
    cz = abelgas.ClosedForm.case1(kz, abelgas.substrate_to_v(0.125, 1.0))
    r = cz.residual([0.1 * i for i in range(1, 40)])
    assert r <= 1e-7, r

    sc = abelgas.Scenario.load(SCENARIOS / "table1.json")
    names, grid, rows = sc.solve("full-system")
    assert names == ["x1", "x2", "s1", "s2", "a", "c", "f_m"]
    assert len(grid) == len(rows) == len(sc.output_grid())

    with tempfile.TemporaryDirectory() as out:
        code = abelgas.run(str(SCENARIOS / "zero-forcing.json"), out, compare=True)
        assert code == 0, code
        assert (pathlib.Path(out) / "report.json").is_file()

    print("abelgas smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
