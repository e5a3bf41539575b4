"""Command-line front end.

Every command prints one JSON document (or DOT/table text where asked) with a
``format`` tag and an echo of the normalized input.  Exact rationals are
written as ``"num/den"`` strings, floating values as JSON numbers.

Exit codes: 0 success, 2 combinatorial or user rejection, 1 internal error
(including a failed geometric validation).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .angles import PORTRAIT_BOUND, alpha_portrait, angle, format_angle
from .errors import CombinatorialRejection, EmptyConstraints, PuzzleError
from .nest import DEFAULT_MAX_LEVELS, build_nest
from .renorm import full_nest

FORMAT = "puzzle_forge/1"

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_REJECTED = 2


# -- parsing helpers --------------------------------------------------------


def parse_complex(text: str) -> complex:
    """``"re,im"`` or a single real number."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")


def parse_angle_arg(text: str) -> Fraction:
    try:
        return angle(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad angle {text!r}: {exc}") from exc


def parse_range(text: str) -> tuple[int, int]:
    """``"a"`` or ``"a:b"`` (inclusive)."""
    lo, sep, hi = text.partition(":")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from exc
    if b < a:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return a, b


def parse_size(text: str) -> tuple[int, int]:
    w, sep, h = text.lower().partition("x")
    try:
        size = (int(w), int(h) if sep else int(w))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad size {text!r}; expected W or WxH") from exc
    if min(size) < 1:
        raise argparse.ArgumentTypeError("size must be positive")
    return size


def complex_json(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def worker_count() -> int:
    n = os.environ.get("PUZZLE_FORGE_THREADS")
    if n:
        return max(1, int(n))
    return max(1, min(8, os.cpu_count() or 1))


def ordered_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """``map`` over a process pool; the output order is the input order."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def error_json(exc: BaseException) -> dict:
    return {"type": type(exc).__name__, "message": str(exc)}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (CombinatorialRejection, ValueError)):
        return EXIT_REJECTED
    return EXIT_INTERNAL


# -- analysis ---------------------------------------------------------------


def summarize(theta: Fraction, max_levels: int = DEFAULT_MAX_LEVELS, stages: int = 8) -> dict:
    """Summary row plus the nest JSON of one angle."""
    from .graph import build_graph, period, reduced_period

    report = build_nest(theta, max_levels=max_levels)
    chain = full_nest(theta, stages=stages, max_levels=max_levels)
    per_r = None
    if chain.per is not None:
        graph = build_graph(chain.stages)
        # a chain ending at a parabolic root carries one factor beyond the graph
        extra = chain.per // period(graph)
        per_r = reduced_period(graph) * extra
    return {
        "theta": format_angle(theta),
        "summary": {
            "portrait": f"{report.portrait.q}/{report.portrait.p}",
            "p": report.portrait.p,
            "t": None if report.escape is None else report.escape.t,
            "chi": report.height,
            "verdict": report.verdict.value,
            "per": chain.per,
            "per_r": per_r,
        },
        "full_nest": chain.to_json(),
    }


def _analyze_one(args: tuple[Fraction, int, int]) -> dict:
    theta, max_levels, stages = args
    try:
        return summarize(theta, max_levels, stages)
    except Exception as exc:  # per-input isolation
        out = {"theta": format_angle(theta), "error": error_json(exc), "exit": exit_code_for(exc)}
        if not isinstance(exc, PuzzleError):
            out["error"]["traceback"] = traceback.format_exc()
        return out


def _combine_exit(results: Iterable[dict]) -> int:
    codes = {r.get("exit", EXIT_OK) for r in results}
    if EXIT_INTERNAL in codes:
        return EXIT_INTERNAL
    if EXIT_REJECTED in codes:
        return EXIT_REJECTED
    return EXIT_OK


def summary_table(results: Sequence[dict]) -> str:
    cols = ["theta", "portrait", "t", "chi", "verdict", "per", "per_r"]
    rows = []
    for r in results:
        if "error" in r:
            rows.append([r["theta"], r["error"]["type"], "", "", "", "", ""])
            continue
        s = r["summary"]
        rows.append([r["theta"]] + ["-" if s[k] is None else str(s[k]) for k in cols[1:]])
    widths = [max(len(c), *(len(row[i]) for row in rows)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def read_thetas(args) -> list[Fraction]:
    thetas = list(args.theta or [])
    if getattr(args, "theta_file", None):
        for line in Path(args.theta_file).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                thetas.append(parse_angle_arg(line))
    if not thetas:
        raise EmptyConstraints("no angle given (use --theta or --theta-file)")
    return thetas


# -- output -----------------------------------------------------------------


def emit(doc, out: str | None, text: bool = False) -> None:
    data = doc if text else json.dumps(doc, indent=1, ensure_ascii=False) + "\n"
    if out and out != "-":
        Path(out).write_text(data)
    else:
        sys.stdout.write(data)


def envelope(command: str, echo: dict, **payload) -> dict:
    return {"format": FORMAT, "command": command, "input": echo, **payload}


# -- commands ---------------------------------------------------------------


def cmd_analyze(args) -> int:
    thetas = read_thetas(args)
    results = ordered_map(_analyze_one, [(t, args.max_levels, args.stages) for t in thetas])
    code = _combine_exit(results)
    if args.format == "table":
        emit(summary_table(results), args.out, text=True)
    else:
        echo = {"theta": [format_angle(t) for t in thetas], "max_levels": args.max_levels, "stages": args.stages}
        emit(envelope("analyze", echo, results=results), args.out)
    for r in results:
        if "error" in r:
            print(f"{r['theta']}: {r['error']['type']}: {r['error']['message']}", file=sys.stderr)
    return code


def cmd_nest(args) -> int:
    theta = args.theta
    chain = full_nest(theta, stages=args.stages, max_levels=args.max_levels)
    echo = {"theta": format_angle(theta), "max_levels": args.max_levels, "stages": args.stages}
    emit(envelope("nest", echo, result=chain.to_json()), args.out)
    return EXIT_OK


def cmd_graph(args) -> int:
    from .graph import build_graph, export_dot, period, reduce, reduced_period, to_json

    chain = full_nest(args.theta, stages=args.stages, max_levels=args.max_levels)
    graph = build_graph(chain.stages)
    fmt = args.format
    if fmt is None:
        fmt = "json" if args.out and Path(args.out).suffix.lower() == ".json" else "dot"
    if fmt == "dot":
        emit(export_dot(graph, args.mode), args.out, text=True)
        return EXIT_OK
    g = reduce(graph) if args.mode == "reduced" else graph
    echo = {"theta": format_angle(args.theta), "mode": args.mode, "stages": args.stages}
    emit(
        envelope(
            "graph", echo,
            result={"graph": to_json(g), "period": str(period(graph)), "reduced_period": str(reduced_period(graph))},
        ),
        args.out,
    )
    return EXIT_OK


def search_candidates(max_den: int) -> list[Fraction]:
    """Angles ``k / ((2^q - 1) 2^j)`` with denominator at most ``max_den``, ascending."""
    found = set()
    q = 1
    while 2**q - 1 <= max_den:
        base = 2**q - 1
        j = 0
        while base * 2**j <= max_den:
            den = base * 2**j
            for k in range(den):
                found.add(Fraction(k, den))
            j += 1
        q += 1
    return sorted(found)


def _in(value, rng) -> bool:
    return rng is None or (value is not None and rng[0] <= value <= rng[1])


def _search_one(args: tuple[Fraction, dict, int]) -> dict | None:
    theta, cons, bound = args
    try:
        portrait = alpha_portrait(theta, bound)
        if not _in(portrait.p, cons.get("p")):
            return None
        report = build_nest(theta)
        t = None if report.escape is None else report.escape.t
        if not (_in(t, cons.get("t")) and _in(report.height, cons.get("chi"))):
            return None
        per = None
        if cons.get("per") is not None:
            per = full_nest(theta).per
            if not _in(per, cons["per"]):
                return None
        return {
            "theta": format_angle(theta),
            "p": portrait.p,
            "t": t,
            "chi": report.height,
            "verdict": report.verdict.value,
            "per": per,
        }
    except PuzzleError:
        return None


def search(constraints: dict, max_den: int, portrait_bound: int = PORTRAIT_BOUND, workers: int | None = None) -> list[dict]:
    """Exhaustive scan of :func:`search_candidates` against range constraints."""
    cons = {k: v for k, v in constraints.items() if v is not None}
    if not cons:
        raise EmptyConstraints("search needs at least one of --p, --t, --chi, --per")
    items = [(x, cons, portrait_bound) for x in search_candidates(max_den)]
    return [r for r in ordered_map(_search_one, items, workers) if r is not None]


def cmd_search(args) -> int:
    cons = {"p": args.p, "t": args.t, "chi": args.chi, "per": args.per}
    hits = search(cons, args.max_den, args.portrait_bound)
    echo = {
        "constraints": {k: None if v is None else list(v) for k, v in cons.items()},
        "max_den": args.max_den,
    }
    emit(envelope("search", echo, count=len(hits), results=hits), args.out)
    return EXIT_OK


def _ray_json(ray) -> dict:
    return {
        "angle": format_angle(ray.angle),
        "kind": ray.kind,
        "landing": complex_json(ray.landing),
        "raw_landing": complex_json(ray.raw_landing),
        "polished": bool(ray.polished),
        "potentials": [float(h) for h in ray.potentials],
        "points": [complex_json(z) for z in ray.points],
    }


def cmd_ray(args) -> int:
    from .numerics.rays import trace_dynamical_ray

    ray = trace_dynamical_ray(args.c, args.angle, pot_min=args.pot_min, polish=not args.no_polish)
    echo = {"c": complex_json(args.c), "angle": format_angle(args.angle), "pot_min": args.pot_min}
    emit(envelope("ray", echo, result=_ray_json(ray)), args.out)
    return EXIT_OK


def cmd_param_ray(args) -> int:
    from .numerics.rays import trace_parameter_ray

    ray = trace_parameter_ray(args.angle, pot_min=args.pot_min)
    echo = {"angle": format_angle(args.angle), "pot_min": args.pot_min}
    emit(envelope("param-ray", echo, result=_ray_json(ray)), args.out)
    return EXIT_OK


def cmd_render(args) -> int:
    from .numerics.render import render, save

    r = render(args.angle, args.c, args.depth, args.level, args.size, pot_min=args.pot_min)
    written = save(r, args.out, png=args.png, overlay=not args.no_overlay)
    echo = {
        "angle": format_angle(args.angle),
        "c": None if args.c is None else complex_json(args.c),
        "depth": args.depth,
        "level": args.level,
        "size": list(args.size),
        "out": args.out,
    }
    result = {
        "c": complex_json(r.c),
        "ray_count": r.ray_count,
        "pieces": len(r.polygons),
        "max_landing_pair_pixels": max((d for _a, _b, d in r.landing_pairs), default=0.0),
        "files": [str(p) for p in written],
    }
    emit(envelope("render", echo, result=result), None)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .numerics.render import estimate_parameter
    from .numerics.validate import validate

    c = estimate_parameter(args.angle) if args.c is None else args.c
    report = validate(args.angle, c, args.depth)
    echo = {
        "angle": format_angle(args.angle),
        "c": None if args.c is None else complex_json(args.c),
        "depth": args.depth,
    }
    emit(envelope("validate", echo, result=report.to_json()), args.out)
    for ch in report.failures():
        print(f"FAIL {ch.name}: {ch.detail}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_INTERNAL


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    from .numerics.rays import POT_MIN

    ap = argparse.ArgumentParser(
        prog="puzzle-forge",
        description="Yoccoz puzzles, principal nests and return graphs of quadratic polynomials.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def nest_opts(p):
        p.add_argument("--max-levels", type=int, default=DEFAULT_MAX_LEVELS)
        p.add_argument("--stages", type=int, default=8, help="renormalization stages to follow")
        p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("analyze", help="nest summary for one or more angles")
    p.add_argument("--theta", type=parse_angle_arg, action="append", help="angle num/den (repeatable)")
    p.add_argument("--theta-file", help="file with one angle per line")
    p.add_argument("--format", choices=("json", "table"), default="json")
    nest_opts(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("nest", help="full principal nest as JSON")
    p.add_argument("--theta", type=parse_angle_arg, required=True)
    nest_opts(p)
    p.set_defaults(func=cmd_nest)

    p = sub.add_parser("graph", help="return graph as DOT or JSON")
    p.add_argument("--theta", type=parse_angle_arg, required=True)
    p.add_argument("--mode", choices=("full", "reduced"), default="full")
    p.add_argument("--format", choices=("dot", "json"), help="default: from the --out extension, else dot")
    nest_opts(p)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("search", help="scan angles of bounded denominator for constraints")
    p.add_argument("--p", type=parse_range, help="portrait period, N or A:B")
    p.add_argument("--t", type=parse_range, help="escape time")
    p.add_argument("--chi", type=parse_range, help="height")
    p.add_argument("--per", type=parse_range, help="renormalization period")
    p.add_argument("--max-den", type=int, default=255, help="denominator bound")
    p.add_argument("--portrait-bound", type=int, default=PORTRAIT_BOUND)
    p.add_argument("--out")
    p.set_defaults(func=cmd_search)

    def numeric_opts(p, need_c: bool):
        p.add_argument("--angle", type=parse_angle_arg, required=True)
        p.add_argument("--c", type=parse_complex, required=need_c, help="'re,im' (write --c=-1,0 for negatives)")
        p.add_argument("--pot-min", type=float, default=POT_MIN)
        p.add_argument("--out")

    p = sub.add_parser("ray", help="trace a dynamical ray")
    numeric_opts(p, True)
    p.add_argument("--no-polish", action="store_true")
    p.set_defaults(func=cmd_ray)

    p = sub.add_parser("param-ray", help="trace a parameter ray")
    p.add_argument("--angle", type=parse_angle_arg, required=True)
    p.add_argument("--pot-min", type=float, default=POT_MIN)
    p.add_argument("--out")
    p.set_defaults(func=cmd_param_ray)

    p = sub.add_parser("render", help="escape-time image with the puzzle overlaid")
    numeric_opts(p, False)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--level", type=float, default=1.0, help="equipotential level at depth 0")
    p.add_argument("--size", type=parse_size, default=(512, 512), help="W or WxH")
    p.add_argument("--png", action="store_true", help="also write a PNG (needs Pillow)")
    p.add_argument("--no-overlay", action="store_true", help="skip the JSON overlay")
    p.set_defaults(func=cmd_render, out="puzzle.ppm")

    p = sub.add_parser("validate", help="geometric cross-check of the symbolic puzzle")
    numeric_opts(p, False)
    p.add_argument("--depth", type=int, default=4)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("max_levels", "stages", "depth", "max_den"):
        value = getattr(args, name, None)
        if value is not None and value < (0 if name == "depth" else 1):
            parser.error(f"--{name.replace('_', '-')} must be positive")
    try:
        return args.func(args)
    except (PuzzleError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except Exception:  # internal error
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
