"""Smoke test for the `epwb` extension module.

Build and install first, e.g. `pip install --no-build-isolation ./crates/py`.
"""

import json
import math

import epwb


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    e = epwb.Expression("sin(2*t)*x")
    close(e(0.3, 2.0), 2.0 * math.sin(0.6), 1e-15)
    close(e.diff("t")(0.3, 2.0), 4.0 * math.cos(0.6), 1e-14)
    assert "sin" in str(e)
    try:
        epwb.Expression("sin(")
    except ValueError as err:
        assert "byte 4" in str(err), err
    else:
        raise AssertionError("syntax error not raised")

    t, x, xdot, status = epwb.simulate("1", "1", 1.0, 0.0, 0.0, 5.0, points=11)
    assert status == "completed" and len(t) == 11
    assert all(abs(v - 1.0) < 1e-12 for v in x)

    h2, resid, drift = epwb.pinney("1+0.5*sin(t)", 1.0, 0.2, 2.0)
    close(h2, 2.0 - 0.04, 1e-12)
    assert resid <= 1e-6 and drift <= 1e-6, (resid, drift)

    assert epwb.verify_symmetry("1", "0", "-x + 1/x^3") == 0.0
    assert epwb.verify_symmetry("sin(2*t)", "x*cos(2*t)", "-x + 3/x^3") <= 1e-12

    fam = epwb.CompatibleFamily("(1+t)^4", c0=1.0, m=1.0, t0=0.0, t1=10.0)
    close(fam.omega, 2.0, 0.0)
    close(fam.phi(1.0), 1.25 / 4.0, 1e-12)
    assert fam.symmetry_residual() <= 1e-6
    assert fam.symmetry_residual(0.1) >= 1e-2
    out = fam.reduce(1.0, points=101)
    assert len(out["T"]) == 101 and out["residual"] <= 1e-6, out["residual"]

    radial, lmom = epwb.central_field("1+0.5*sin(t)", "0.1", 1.0, 1.0)
    assert radial <= 1e-6 and lmom <= 1e-7, (radial, lmom)

    ledger = json.loads(epwb.audit_all())
    assert len(ledger["entries"]) == 7
    assert all(e["verdict"] != "unresolved" for e in ledger["entries"])
    assert epwb.audit_all() == epwb.audit_all()

    print("smoke test passed")


if __name__ == "__main__":
    main()
