"""Smoke test for the grholo_py extension module.

Build and install first, e.g.

    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/grholo_py-*.whl
"""

import cmath
import math

import numpy as np

import grholo_py as g


def arr(rows):
    return np.array(rows, dtype=complex)


def check(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}")
    return ok


def main():
    results = []

    f = g.isometrize([[1.0, 2.0], [0.5j, 1.0], [0.0, 1.0 - 1.0j]])
    phi = arr(f.matrix())
    results.append(check("isometrize", np.linalg.norm(phi.conj().T @ phi - np.eye(2)) < 1e-12))

    a = [[0.0, 1.0], [-1.0, 0.0]]
    e = arr(g.mat_exp(a))
    ref = np.array([[math.cos(1), math.sin(1)], [-math.sin(1), math.cos(1)]])
    results.append(check("mat_exp", np.linalg.norm(e - ref) < 1e-13))

    base = g.Frame.random(5, 2, seed=4)
    block = [[0.3, -0.2j], [1.1, 0.4], [0.0, 2.0 + 1.0j]]
    q = g.proj_from_chart(base, block)
    back = arr(g.chart_from_proj(base, q))
    results.append(check("chart round trip", np.linalg.norm(back - arr(block)) < 1e-10, f"rank={q.rank}"))

    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    w = (x - x.conj().T) / 2
    sigma = g.Frame.random(6, 3, seed=1)
    total = np.zeros((3, 3), dtype=complex)
    for u, v in g.curvature_generators(w.tolist(), sigma):
        total += arr(g.curvature_omega(sigma, u, v))
    results.append(check("curvature reconstruction", np.linalg.norm(total - w) < 1e-12))

    schedule, frame, period = g.Schedule.latitude(math.pi / 3)
    r = g.berry_maps(schedule, frame, 0.0, period, 4000)
    expected = -math.pi * (1 - math.cos(math.pi / 3))
    gap = abs(cmath.phase(cmath.exp(1j * (r.berry_phase() - expected))))
    results.append(check("latitude Berry phase", r.closed and gap < 1e-4, f"arg={r.berry_phase():.6f}"))

    wi = [[1j]]
    hol = g.synthesize_holonomy(wi, 0.05, g.Frame.standard(2, 1))
    predicted = g.SYNTHESIS_CONSTANT * 0.05**2
    results.append(check("synthesis", abs(hol.phase() - predicted) < 0.1 * abs(predicted)))

    try:
        g.Projector([[1.0, 0.0], [0.0, 0.5]], 1)
        results.append(check("invalid projector raises", False))
    except g.GeometryError:
        results.append(check("invalid projector raises", True))

    rows = g.run_selftest()
    results.append(check("selftest", all(row[4] for row in rows), f"{len(rows)} checks"))

    if not all(results):
        raise SystemExit(1)


if __name__ == "__main__":
    main()
