"""Smoke test for the gravem Python bindings.

Build and install first:

    pip install --no-build-isolation ./crates/python
    python python/smoke_test.py
"""

import math
import pathlib
import sys

import gravem

DEMOS = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "demos"


def close(a, b, tol):
    return abs(a - b) <= tol * max(abs(b), 1.0)


def main():
    failures = []

    def check(name, ok, detail=""):
        print(f"{'PASS' if ok else 'FAIL'} {name} {detail}")
        if not ok:
            failures.append(name)

    alpha = gravem.deflection(b=100.0, distance=1e4, step=1.0, dp45=True)
    check("deflection", close(alpha, 0.0203, 0.01), f"{alpha:.6g} vs 2rs/b = 0.02")

    flat = gravem.deflection(b=10.0, distance=50.0, metric_name="minkowski")
    check("flat deflection", abs(flat) < 1e-12, f"{flat:.3g}")

    r = gravem.equivalence_check(b=10.0, distance=50.0, c_plus=1 + 0j, c_minus=0j, phi0=0.6)
    check("equivalence", r["passed"] and r["max_deviation"] < 1e-8, f"{r['max_deviation']:.3g}")
    check("phase doubling", r["max_doubling_residual"] < 1e-9, f"{r['max_doubling_residual']:.3g}")

    m2, kappa, a = gravem.two_photon_state([0, 0, 3.0], 1, [0, 0, 1.0], 1)
    check("collinear pair is massless", abs(m2) < 1e-12 and close(kappa, 0.75, 1e-12) and close(a, 3.0, 1e-12))
    m2, kappa, _ = gravem.two_photon_state([1.0, 0, 0], 1, [0, 1.0, 0], -1)
    check("crossed pair is massive", m2 < 0 and kappa is None, f"{m2:.3g}")

    eps, mu = gravem.medium([30.0, 0.0, 0.0], metric_name="schwarzschild", chart_name="isotropic")
    n = eps[0][0]
    rho = 30.0
    expected = (1 + 1 / (4 * rho)) ** 3 / (1 - 1 / (4 * rho))
    check("isotropic index", eps == mu and close(n, expected, 1e-10), f"{n:.12g}")

    s = gravem.spdc(2.0, 0.3, 1 + 0j, 0.5j)
    check("spdc energy", s["signal_frequency"] + s["idler_frequency"] == 2.0)
    mirror = gravem.spdc(2.0, 0.7, 1 + 0j, 0.5j)
    diff = max(
        abs(x - y)
        for ra, rb in zip(s["polarization_tensor"], mirror["polarization_tensor"])
        for x, y in zip(ra, rb)
    )
    check("spdc kappa mirror", diff < 1e-12, f"{diff:.3g}")

    code, checks = gravem.run_scenario(str(DEMOS / "flat.toml"), "equivalence-check")
    check("flat scenario", code == 0 and all(c[3] for c in checks), f"{len(checks)} checks")

    try:
        gravem.run_scenario(str(DEMOS / "flat.toml"), "bogus")
        check("bad subcommand raises", False)
    except ValueError as e:
        check("bad subcommand raises", "bogus" in str(e))

    if failures:
        print(f"{len(failures)} failed: {', '.join(failures)}")
        sys.exit(1)
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
