"""Smoke test for the somor_py extension.

Build it first with `pip install -e crates/python --no-build-isolation`.
"""

import math
import sys
import tempfile

import somor_py as sm


def check(cond, msg):
    if not cond:
        print("FAIL:", msg)
        sys.exit(1)
    print("ok:", msg)


def main():
    sys_ = sm.System.dsms(200, 20)
    check((sys_.n1, sys_.n2, sys_.inputs, sys_.outputs) == (200, 20, 1, 3), repr(sys_))
    check(sys_.validate()["g_rank"] == 20, "constraints have full rank")

    rom, info = sm.irka(sys_, 6, max_iter=20)
    check(rom.order == 6 and len(rom.m) == 6, "irka returns an order-6 model")
    check(info["status"] in ("converged", "max-iterations", "stagnated"), f"status {info['status']}")
    check(all(s.real > 0 for s in info["shifts"]), "shifts lie in the right half-plane")
    check(all(p.real < 0 for p in rom.poles()), "reduced model is stable")

    s = 0.5j
    full = sys_.transfer(s)
    red = rom.transfer(s)
    check(len(full) == 3 and len(full[0]) == 1, "transfer shape is q x m")
    gap = max(abs(a[0] - b[0]) for a, b in zip(full, red)) / max(abs(a[0]) for a in full)
    check(gap < 0.5, f"reduced transfer near the full one at 0.5i (gap {gap:.2e})")

    omegas, absolute, relative = sm.error_curve(sys_, rom, 1e-2, 1.0, 20)
    check(len(omegas) == 20 and all(r is not None and math.isfinite(r) for r in relative), "error curve is finite")

    with tempfile.TemporaryDirectory() as tmp:
        sys_.save(tmp + "/model")
        again = sm.System.load(tmp + "/model")
        check(again.transfer(s) == full, "model directory round trip")
        rom.save(tmp + "/rom.json")
        check(sm.ReducedModel.load(tmp + "/rom.json").m == rom.m, "reduced model round trip")

    bt = sm.balanced_truncation(sm.System.tcom(10, 10), 6)
    check(bt["order"] == 6 and len(bt["A"]) == 6, "balanced truncation on a small tcom")
    check(bt["hankel"] == sorted(bt["hankel"], reverse=True), "hankel values descend")

    scalar = sm.ReducedModel([[1.0]], [[2.0]], [[1.0]], [[1.0]], [[1.0]])
    check(all(abs(p + 1) < 1e-6 for p in scalar.poles()), "critically damped scalar poles")

    try:
        sm.System.dsms(10, 20)
    except ValueError:
        print("ok: bad sizes raise ValueError")
    else:
        check(False, "bad sizes raise ValueError")

    passed, checks = sm.verify("tiny")
    check(passed and checks, f"tiny invariant suite ({len(checks)} checks)")
    print("all good")


if __name__ == "__main__":
    main()
