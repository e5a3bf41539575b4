"""The ten acceptance criteria at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL`` line (also under output
capture) and then asserts on the collected failures.
"""
import math
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from puzzle_forge.angles import PRIMARY_ROOT_PAIRS, enumerate_rotation_cycles, tune, untune
from puzzle_forge.errors import PuzzleError
from puzzle_forge.graph import (
    NoPathToCritical,
    PullbackUnsupported,
    build_graph,
    period,
    sandwich_holds,
    time_of,
)
from puzzle_forge.nest import Verdict, build_nest, direct_time, nest_pieces_strictly_nested
from puzzle_forge.numerics import green, trace_dynamical_ray, trace_parameter_ray
from puzzle_forge.numerics.render import read_ppm, render, save
from puzzle_forge.numerics.validate import validate
from puzzle_forge.puzzle import Puzzle, markov_audit
from puzzle_forge.renorm import full_nest

from oracles import airplane_center, newton_center, superattracting_period

AIRPLANE = F(3, 7)
TUNED_AIRPLANE = tune(F(3, 7), (F(1, 3), F(2, 3)))
SUITE = [
    F(3, 7), F(5, 31), F(11, 31), F(55, 127), F(439, 1023), F(875, 2047),
    F(36292, 65535), F(72561, 131071), TUNED_AIRPLANE,
]


def verdict(capsys, n, title, failures, elapsed, detail=""):
    status = "PASS" if not failures else "FAIL"
    line = f"criterion {n:2d}: {status}  {title}  [{elapsed:.2f} s]"
    if detail:
        line += f"  {detail}"
    with capsys.disabled():
        print("\n" + line)
        for f in failures[:10]:
            print(f"    - {f}")
    assert not failures, failures


def test_criterion_01_markov_audit(capsys):
    thetas = [F(1, 6), F(3, 7), F(2, 5), F(5, 31), F(11, 31)]
    failures, checked = [], 0
    start = time.perf_counter()
    for theta in thetas:
        report = markov_audit(theta, 8)
        checked += report.pieces_checked
        if not report.passed:
            failures.append(f"{theta}: {report.counterexample}")
    elapsed = time.perf_counter() - start
    if elapsed >= 10.0:
        failures.append(f"runtime {elapsed:.2f} s exceeds 10 s")
    verdict(capsys, 1, "Markov audit to depth 8", failures, elapsed, f"{checked} pieces")


def test_criterion_02_depth1_census(capsys):
    failures, portraits = [], 0
    start = time.perf_counter()
    for p in range(2, 7):
        for cycle in enumerate_rotation_cycles(p):
            portraits += 1
            den = 2**p - 1
            lo = next(a for a in cycle if (a + F(1, den)) % 1 in cycle)
            pz = Puzzle(lo + F(1, 2 * den))
            roles = pz.depth1_structure()
            count = len(pz.pieces_at_depth(1))
            if count != 2 * p - 1:
                failures.append(f"{cycle}: {count} pieces, expected {2 * p - 1}")
            if len(roles["Y"]) != p - 1 or len(roles["Z"]) != p - 1 or not roles["critical"].critical:
                failures.append(f"{cycle}: roles {len(roles['Y'])} Y, {len(roles['Z'])} Z")
    elapsed = time.perf_counter() - start
    verdict(capsys, 2, "depth-1 census for p <= 6", failures, elapsed, f"{portraits} portraits")


def test_criterion_03_nest_correctness(capsys):
    failures = []
    start = time.perf_counter()
    r = build_nest(F(2, 5))
    if r.verdict is not Verdict.IMMEDIATE or r.height != -1:
        failures.append(f"2/5: {r.verdict.value}, chi {r.height}")
    r = build_nest(F(1, 6))
    if r.verdict is not Verdict.NONRECURRENT:
        failures.append(f"1/6: {r.verdict.value}")
    r = build_nest(AIRPLANE)
    if r.verdict is not Verdict.RENORMALIZABLE or r.per != 3:
        failures.append(f"3/7: {r.verdict.value}, per {r.per}")
    details = []
    for theta in (AIRPLANE, F(5, 31), F(11, 31), TUNED_AIRPLANE):
        per = full_nest(theta).per
        seed = trace_parameter_ray(theta).landing
        c, residual = newton_center(per, seed)
        found = superattracting_period(c)
        details.append(f"{theta}: per {per}, residual {residual:.1e}")
        if residual >= 1e-9 or found != per:
            failures.append(f"{theta}: per {per}, oracle period {found}, residual {residual:.3g}")
    if abs(airplane_center() - newton_center(3, -1.75)[0]) > 1e-12:
        failures.append("airplane center disagrees with the cubic's real root")
    elapsed = time.perf_counter() - start
    verdict(capsys, 3, "nest verdicts and per vs Newton centers", failures, elapsed, "; ".join(details))


def test_criterion_04_graph_dynamics(capsys):
    failures, vertices = [], 0
    start = time.perf_counter()
    for theta in SUITE:
        r = build_nest(theta)
        g = build_graph(r)
        for n1 in range(1, len(r.levels)):
            for d in r.levels[n1].domains:
                vertices += 1
                for m in range(n1):
                    a, b = time_of(g, (n1, d.index), m), direct_time(r, n1, d.index, m)
                    if a != b:
                        failures.append(f"{theta} V^{n1}_{d.index} to level {m}: {a} != {b}")
        chain = full_nest(theta)
        full = period(build_graph(chain.stages))
        recorded = math.prod(s.per for s in chain.stages)
        if not full == chain.per == recorded:
            failures.append(f"{theta}: graph period {full}, per {chain.per}, recorded {recorded}")
    tuned = period(build_graph(full_nest(TUNED_AIRPLANE).stages))
    if TUNED_AIRPLANE != F(26, 63) or tuned != 6:
        failures.append(f"tuned airplane {TUNED_AIRPLANE}: per {tuned}")
    elapsed = time.perf_counter() - start
    verdict(capsys, 4, "path counts equal return times", failures, elapsed, f"{vertices} vertices")


def test_criterion_05_strict_nesting(capsys):
    failures = []
    start = time.perf_counter()
    pairs = 0
    for theta in SUITE:
        for n, ok in nest_pieces_strictly_nested(build_nest(theta)):
            pairs += 1
            if not ok:
                failures.append(f"{theta}: V^{n + 1} not strictly inside V^{n}")
    report = validate(AIRPLANE, airplane_center(), 6)
    nest_checks = [ck for ck in report.checks if "strictly contains" in ck.name]
    if not nest_checks:
        failures.append("no numeric nest pair within depth 6")
    failures += [f"{ck.name}: {ck.detail}" for ck in nest_checks if not ck.ok]
    elapsed = time.perf_counter() - start
    numeric = "; ".join(f"{ck.name} ({ck.detail})" for ck in nest_checks)
    verdict(capsys, 5, "strict nesting", failures, elapsed, f"{pairs} exact pairs; {numeric}")


def test_criterion_06_sandwich(capsys):
    failures, checked = [], 0
    start = time.perf_counter()
    for theta in (AIRPLANE, TUNED_AIRPLANE):
        g = build_graph(full_nest(theta).stages)
        for v in g.vertices:
            try:
                ok, path, piece = sandwich_holds(g, v)
            except (PullbackUnsupported, NoPathToCritical):
                continue
            checked += 1
            if not ok or piece.degree != 2:
                failures.append(f"{theta} {v}: ok {ok}, degree {piece.degree}, path {path}")
    if checked == 0:
        failures.append("no path was checked")
    elapsed = time.perf_counter() - start
    verdict(capsys, 6, "sandwich along shortest paths", failures, elapsed, f"{checked} paths")


def test_criterion_07_numerics(capsys):
    failures, notes = [], []
    start = time.perf_counter()

    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst, escaping = 0.0, 0
    for c in (-1.0, -0.75, 0.25, complex(-0.122, 0.745), complex(0.3, 0.5), -2.0):
        for z in rng.uniform(-2, 2, 40) + 1j * rng.uniform(-2, 2, 40):
            # a different bailout makes the two sides stop at different orbit steps
            g = green(c, z)
            escaping += g > 0
            worst = max(worst, abs(green(c, z * z + c, bailout=1e6) - 2 * g))
    t_green = time.perf_counter() - t0
    notes.append(f"G(f(z)) - 2G(z) <= {worst:.1e} over {escaping} escaping points")
    if worst > 1e-9:
        failures.append(f"G(f(z)) - 2G(z) reaches {worst:.3g}")

    for a in (F(1, 3), F(2, 3)):
        t0 = time.perf_counter()
        ray = trace_parameter_ray(a)
        dt = time.perf_counter() - t0
        d, d_raw = abs(ray.landing + 0.75), abs(ray.raw_landing + 0.75)
        notes.append(f"param {a}: {d:.1e} (raw {d_raw:.1e}, {dt:.2f} s)")
        if d >= 1e-3 or dt >= 5.0:
            failures.append(f"parameter ray {a}: distance {d:.3g}, {dt:.2f} s")

    alpha = (1 - math.sqrt(5)) / 2
    for a in (F(1, 3), F(2, 3)):
        t0 = time.perf_counter()
        ray = trace_dynamical_ray(-1, a)
        dt = time.perf_counter() - t0
        d, d_raw = abs(ray.landing - alpha), abs(ray.raw_landing - alpha)
        notes.append(f"dyn {a}: {d:.1e} (raw {d_raw:.1e}, {dt:.2f} s)")
        if d >= 1e-5 or dt >= 5.0:
            failures.append(f"dynamical ray {a}: distance {d:.3g}, {dt:.2f} s")
    if t_green >= 5.0:
        failures.append(f"Green check took {t_green:.2f} s")
    elapsed = time.perf_counter() - start
    verdict(capsys, 7, "Green function and rays", failures, elapsed, "; ".join(notes))


def test_criterion_08_round_trip(capsys, tmp_path):
    failures = []
    start = time.perf_counter()
    report = validate(AIRPLANE, airplane_center(), 6)
    failures += [f"{ck.name}: {ck.detail}" for ck in report.failures()]
    size = (160, 120)
    out = tmp_path / "airplane.ppm"
    save(render(AIRPLANE, airplane_center(), depth=2, size=size), out)
    data = out.read_bytes()
    header = f"P6\n{size[0]} {size[1]}\n255\n".encode()
    if not data.startswith(header) or len(data) != len(header) + 3 * size[0] * size[1]:
        failures.append(f"malformed PPM header {data[:20]!r}, {len(data)} bytes")
    if read_ppm(out).shape != (size[1], size[0], 3):
        failures.append("PPM does not read back at the requested size")
    elapsed = time.perf_counter() - start
    verdict(capsys, 8, "validate and render round trip", failures, elapsed,
            f"{len(report.checks)} checks, {size[0]}x{size[1]} P6")


def test_criterion_09_tuning_algebra(capsys):
    failures = []
    start = time.perf_counter()
    rng = random.Random(20241016)
    xs = [F(rng.randrange(0, q), q) for q in (rng.randrange(1, 4000) for _ in range(100))]
    pairs = list(PRIMARY_ROOT_PAIRS.values()) + [(F(3, 7), F(4, 7))]
    for pair in pairs:
        for x in xs:
            y = untune(tune(x, pair), pair)
            if y != x:
                failures.append(f"untune(tune({x}, {pair})) = {y}")
    elapsed = time.perf_counter() - start
    verdict(capsys, 9, "untune after tune is the identity", failures, elapsed,
            f"{len(xs)} angles x {len(pairs)} root pairs")


def generated_suite(count=30, seed=11):
    """Renormalizable angles of period 3..12 plus tunings of some of them."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        q = rng.randrange(3, 13)
        theta = F(rng.randrange(1, 2**q - 1), 2**q - 1)
        try:
            if full_nest(theta).per is not None:
                out.append(theta)
        except PuzzleError:
            continue
    for x in out[:5]:
        out.append(tune(x, (F(1, 3), F(2, 3))))
        out.append(tune(x, (F(3, 7), F(4, 7))))
    return out


def test_criterion_10_bound_law(capsys):
    failures, worst = [], 0.0
    start = time.perf_counter()
    suite = SUITE + generated_suite()
    for theta in suite:
        g = build_graph(full_nest(theta).stages)
        R = max(sum(k for _, k in edges) for edges in g.up.values())
        T = len(g.levels) - 1
        per = period(g)
        if not per <= R**T:
            failures.append(f"{theta}: per {per} > {R}^{T}")
        worst = max(worst, math.log(per) / (T * math.log(R)) if R > 1 else 0.0)
    elapsed = time.perf_counter() - start
    verdict(capsys, 10, "per <= R^T", failures, elapsed,
            f"{len(suite)} angles, max log(per)/log(R^T) {worst:.3f}")
