"""Experiment runner: small-cancellation checks, ball construction,
filling volumes, growth profiles, embedding pipelines and profile
comparison, with reproducible seeded output.

Exit codes: 0 for a clean pass, 1 for a property failure (violated
condition, refuted comparison with --expect), 2 for usage, parse or
schema errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import embedding as emb
from . import filling as fil
from .complexes import GroupOracle, build_cayley_ball, build_grid_complex
from .presentation import (
    PresentationError,
    check_small_cancellation,
    is_proper_power,
    parse_presentation,
)

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_USAGE = 2


def _emit_json(obj, path=None) -> str:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return text


def _load_presentation(path: str):
    return parse_presentation(Path(path).read_text(encoding="utf-8"))


def _make_complex(preset: str, radius: int, presentation_path=None):
    if preset == "z1":
        return build_grid_complex(1, radius)
    if preset == "z2":
        return build_grid_complex(2, radius)
    if preset == "z3":
        return build_grid_complex(3, radius)
    if preset == "z2cayley":
        return build_cayley_ball(GroupOracle.free_abelian(2), radius)
    if preset == "free2":
        return build_cayley_ball(GroupOracle.free(2), radius)
    if preset == "surface2":
        return build_cayley_ball(GroupOracle.surface(2), radius)
    if preset == "presentation":
        if not presentation_path:
            raise ValueError("preset 'presentation' needs --presentation FILE")
        oracle = GroupOracle.dehn(_load_presentation(presentation_path))
        return build_cayley_ball(oracle, radius)
    raise ValueError(f"unknown preset {preset!r}")


def _parse_fraction(text: str) -> Fraction:
    return Fraction(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_check_sc(args) -> int:
    try:
        pres = _load_presentation(args.presentation)
    except (PresentationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    lam = _parse_fraction(args.lam)
    verdict = check_small_cancellation(pres, lam)
    powers = [i for i, r in enumerate(pres.relators) if is_proper_power(r)]
    report = {
        "lambda": str(lam),
        "satisfied": bool(verdict),
        "proper_power_relators": powers,
    }
    if not verdict:
        report["witness"] = {
            "relator_index": verdict.relator_index,
            "piece": pres.word_str(verdict.piece),
            "piece_length": verdict.piece_length,
            "relator_length": verdict.relator_length,
        }
    _emit_json(report, args.out)
    return EXIT_OK if verdict and not powers else EXIT_PROPERTY


def cmd_build_ball(args) -> int:
    try:
        k = _make_complex(args.preset, args.radius, args.presentation)
    except (PresentationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit_json(k.to_json(), args.out)
    return EXIT_OK


def cmd_fvol(args) -> int:
    try:
        k = _make_complex(args.preset, args.radius, args.presentation)
    except (PresentationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.rect:
        a, b = args.rect
        cycle = fil.rectangle_cycle(k, a, b)
    elif args.box:
        cycle, _cubes = fil.box_surface_cycle(k, tuple(args.box))
    else:
        print("error: provide --rect A B or --box A B C", file=sys.stderr)
        return EXIT_USAGE
    budget = fil.SolverBudget(max_nodes=args.max_nodes)
    try:
        result = fil.fvol(k, cycle, budget, force_ilp=args.force_ilp)
    except fil.NoFillingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    _emit_json({
        "volume": result.volume,
        "norm": cycle.norm,
        "method": result.method,
        "certified": result.certified,
        "filling": result.filling.to_json(),
    }, args.out)
    return EXIT_OK


def cmd_fill_growth(args) -> int:
    try:
        k = _make_complex(args.preset, args.radius, args.presentation)
    except (PresentationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    padded = None
    if args.padding:
        padded = _make_complex(args.preset, args.radius + args.padding,
                               args.presentation)
    ells = list(range(args.lmin, args.lmax + 1, args.lstep))
    if args.sampler == "rect":
        source = fil.RectangleCycles()
    elif args.sampler == "random":
        source = fil.RandomLoops(args.seed, args.samples)
    elif args.sampler == "loops":
        source = fil.RelatorLoops(args.seed, args.samples)
    else:
        print(f"error: unknown sampler {args.sampler}", file=sys.stderr)
        return EXIT_USAGE
    profile = fil.restricted_fill(k, source, ells, margin=args.margin,
                                  workers=args.workers, padded=padded)
    profile.meta.update(seed=args.seed, preset=args.preset,
                        radius=args.radius, sampler=args.sampler)
    status = EXIT_OK
    fit_error = None
    try:
        profile = fil.growth_fit(profile, (args.fit_min, args.fit_max))
    except fil.DegenerateFitError as exc:
        fit_error = f"degenerate fit: {exc}"
    except ValueError as exc:
        fit_error = f"fit skipped: {exc}"
    if fit_error:
        profile.meta["fit_note"] = fit_error
    csv_text = profile.to_csv()
    if args.out_csv:
        Path(args.out_csv).write_text(csv_text, encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    if args.out_json:
        _emit_json(profile.to_json(), args.out_json)
    if not all(s.certified for s in profile.samples):
        status = EXIT_PROPERTY
    return status


_EMBED_SPECS = {
    "logmap": emb.builtin_logmap,
    "axis": emb.builtin_axis_inclusion,
    "plane": emb.builtin_plane_inclusion,
}


def cmd_embed(args) -> int:
    if args.spec in _EMBED_SPECS:
        spec = _EMBED_SPECS[args.spec]()
    else:
        rank_src, rank_dst = args.file_ranks
        try:
            spec = emb.parse_embedding_file(
                Path(args.spec).read_text(encoding="utf-8"),
                lambda r: build_grid_complex(rank_src, r),
                lambda r: build_grid_complex(rank_dst, r),
                target_distance=emb._l1)
        except (OSError, emb.EmbeddingError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    moduli = emb.estimate_moduli(spec, args.moduli_radius, seed=args.seed)
    c = args.lipschitz or moduli.lipschitz_c
    x = spec.source_builder(args.source_radius)
    z = spec.target_builder(args.target_radius)
    try:
        ext = emb.build_extended_complex(x, z, spec, c)
    except emb.EmbeddingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    collision = emb.collision_bound(ext, moduli)
    qi = emb.qi_verify(ext, seed=args.seed)
    cycles = []
    if ext.source.dim >= 2:
        for per in range(4, args.compare_perimeter + 1, 2):
            a = per // 4
            b = per // 2 - a
            if a >= 1 and b >= 1:
                try:
                    cycles.append(fil.rectangle_cycle(ext.source, a, b))
                except ValueError:
                    pass
    comparison = emb.compare_fillings(ext, cycles) if cycles else None
    report = {
        "spec": spec.kind,
        "lipschitz_c": c,
        "moduli": {str(t): list(v) for t, v in moduli.per_distance.items()},
        "collision": {
            "measured": collision.measured,
            "l": collision.l_bound,
            "n": collision.n_bound,
            "theoretical": collision.theoretical,
        },
        "qi": {
            "l": qi.l_bound,
            "lower_slope_ok": qi.lower_slope_ok,
            "upper_slope_ok": qi.upper_slope_ok,
            "pairs": qi.pairs_checked,
        },
        "fillings": comparison.to_json() if comparison else None,
    }
    _emit_json(report, args.out)
    ok = qi.lower_slope_ok and qi.upper_slope_ok
    if comparison is not None:
        ok = ok and comparison.pushforward_bound_ok and comparison.ambient_dominated
    return EXIT_OK if ok else EXIT_PROPERTY


def cmd_compare(args) -> int:
    try:
        fa = fil.GrowthProfile.from_csv(Path(args.profile_a).read_text(encoding="utf-8"))
        fb = fil.GrowthProfile.from_csv(Path(args.profile_b).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for prof in (fa, fb):
        try:
            prof_fit = fil.growth_fit(prof)
            prof.fitted_exponent = prof_fit.fitted_exponent
        except (fil.DegenerateFitError, ValueError):
            pass
    ab = fil.compare_growth(fa, fb, args.cmax)
    ba = fil.compare_growth(fb, fa, args.cmax)
    if ab.holds and ba.holds:
        relation = "equivalent"
    elif ab.holds:
        relation = "a_precedes_b"
    elif ba.holds:
        relation = "b_precedes_a"
    else:
        relation = "incomparable_at_scale"
    _emit_json({
        "relation": relation,
        "a_precedes_b": {"holds": ab.holds, "C": ab.c, "failures": ab.failures,
                         "extrapolated": ab.extrapolated},
        "b_precedes_a": {"holds": ba.holds, "C": ba.c, "failures": ba.failures,
                         "extrapolated": ba.extrapolated},
        "cmax": args.cmax,
    }, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--config", help="key = value defaults file; flags override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fillvol",
        description="filling volumes, small-cancellation checks and "
                    "coarse-embedding experiments on finite group complexes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-sc", help="verify the metric small-cancellation condition")
    p.add_argument("presentation")
    p.add_argument("--lam", default="1/6")
    _add_common(p)
    p.set_defaults(func=cmd_check_sc)

    p = sub.add_parser("build-ball", help="build and serialize a ball complex")
    p.add_argument("--preset", required=True,
                   choices=["z1", "z2", "z3", "z2cayley", "free2", "surface2",
                            "presentation"])
    p.add_argument("--presentation")
    p.add_argument("--radius", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_build_ball)

    p = sub.add_parser("fvol", help="filling volume of one cycle")
    p.add_argument("--preset", required=True,
                   choices=["z1", "z2", "z3", "z2cayley", "free2", "surface2",
                            "presentation"])
    p.add_argument("--presentation")
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--rect", type=int, nargs=2, metavar=("A", "B"))
    p.add_argument("--box", type=int, nargs=3, metavar=("A", "B", "C"))
    p.add_argument("--force-ilp", action="store_true")
    p.add_argument("--max-nodes", type=int, default=100_000)
    _add_common(p)
    p.set_defaults(func=cmd_fvol)

    p = sub.add_parser("fill-growth", help="sample a restricted filling function")
    p.add_argument("--preset", required=True,
                   choices=["z1", "z2", "z3", "z2cayley", "free2", "surface2",
                            "presentation"])
    p.add_argument("--presentation")
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--lmin", type=int, default=4)
    p.add_argument("--lmax", type=int, default=24)
    p.add_argument("--lstep", type=int, default=2)
    p.add_argument("--fit-min", type=int, default=8)
    p.add_argument("--fit-max", type=int, default=None)
    p.add_argument("--sampler", default="rect", choices=["rect", "random", "loops"])
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--margin", type=int, default=None)
    p.add_argument("--padding", type=int, default=0,
                   help="re-solve in a ball enlarged by this much")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-csv")
    p.add_argument("--out-json")
    _add_common(p)
    p.set_defaults(func=cmd_fill_growth)

    p = sub.add_parser("embed", help="run the coarse-embedding pipeline")
    p.add_argument("--spec", required=True,
                   help="logmap | axis | plane | path to an embedding file")
    p.add_argument("--file-ranks", type=int, nargs=2, default=(1, 2),
                   metavar=("SRC", "DST"))
    p.add_argument("--source-radius", type=int, default=12)
    p.add_argument("--target-radius", type=int, default=18)
    p.add_argument("--moduli-radius", type=int, default=64)
    p.add_argument("--lipschitz", type=int, default=None)
    p.add_argument("--compare-perimeter", type=int, default=16)
    _add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("compare", help="compare two growth profiles")
    p.add_argument("profile_a")
    p.add_argument("profile_b")
    p.add_argument("--cmax", type=int, default=8)
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    return parser


def _apply_config(parser, argv):
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    pairs = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _eq, value = line.partition("=")
        pairs["--" + key.strip().replace("_", "-")] = value.strip()
    out = list(argv)
    for key, value in pairs.items():
        if key not in out:
            out[i:i] = [key, value]
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if len(argv) >= 1 and "--config" in argv:
            argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
