"""Command-line interface.

Every subcommand reads and writes the plain-text formats of :mod:`approxvb.io`.
Options may also come from a ``key=value`` file given with ``--config``; keys are
option names without the leading dashes, and flags on the command line win.

Exit status: 0 success, 2 regime violation, 3 degenerate input, 4 I/O error,
5 empty epsilon-span (the epsilon-death leaves no scale to evaluate a class at).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import platform
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, charclass, ingest
from . import io as vio
from ._accel import USE_NUMBA
from .bundle import DiscreteCocycle, consistency_radius, epsilon_death, orient, witness
from .complex import Filtration, vr_filtration
from .errors import AmbiguityError, DegenerateInputError, ObstructionError, RankError, RegimeError
from .persistence import decompose_class, persistent_cohomology
from .pipeline import CLASS_SPECS, compute_class, defects_table, restrict_cocycle

log = logging.getLogger("approxvb")

EXIT_OK = 0
EXIT_REGIME = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4
EXIT_EMPTY_SPAN = 5

LOCK_NAME = ".approxvb.lock"


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file with option defaults")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")


def _add_input_cloud(p: argparse.ArgumentParser) -> None:
    p.add_argument("--points", help="point cloud CSV ('-' for stdin)")
    p.add_argument("--dissimilarity", help="dissimilarity matrix CSV (overrides Euclidean distances)")
    p.add_argument("--images", help="flattened images CSV, compared after in-plane alignment")
    p.add_argument("--rotations", help="rotations CSV used to align --images")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="approxvb", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"approxvb {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    leaves: dict[str, argparse.ArgumentParser] = {}

    gen = sub.add_parser("gen", help="generate a dataset")
    gsub = gen.add_subparsers(dest="dataset", required=True)

    p = gsub.add_parser("double-gyre", help="delay-embedded double-gyre trajectory")
    _add_common(p)
    p.add_argument("--A", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--omega", type=float, default=math.pi / 5)
    p.add_argument("--x0", type=float, default=0.55)
    p.add_argument("--y0", type=float, default=0.5)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--n-samples", type=int, default=2000)
    p.add_argument("--t-end", type=float, default=1000.0)
    p.add_argument("--step", type=float, default=1e-2, help="maximal RK4 step")
    p.add_argument("--flow-sign", type=int, choices=(1, -1), default=1,
                   help="1: (dpsi/dy, -dpsi/dx); -1: the mirrored convention")
    p.add_argument("--tau", type=int, default=5, help="delay (in samples)")
    p.add_argument("--embed-dim", type=int, default=5, help="delay-embedding dimension")
    p.add_argument("--n-points", type=int, default=1000, help="subsample size")
    p.add_argument("--subsample", choices=("random", "maxmin"), default="random")
    p.add_argument("--output", default="-", help="point cloud CSV (default stdout)")
    p.add_argument("--trajectory", help="also write the raw trajectory CSV t,x,y")
    leaves["gen double-gyre"] = p

    p = gsub.add_parser("lines", help="fuzzy line images")
    _add_common(p)
    p.add_argument("--count", type=int, default=160)
    p.add_argument("--size", type=int, default=10)
    p.add_argument("--n-angles", type=int, default=ingest.LINES_N_ANGLES)
    p.add_argument("--sigma", type=float, default=1.5)
    p.add_argument("--n-offsets", type=int, default=ingest.LINES_N_OFFSETS)
    p.add_argument("--max-offset", type=float, default=None)
    p.add_argument("--output", default="-")
    leaves["gen lines"] = p

    p = gsub.add_parser("sphere-projections", help="projections of a union of balls")
    _add_common(p)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--size", type=int, default=100)
    p.add_argument("--output", required=True, help="images CSV")
    p.add_argument("--rotations-output", required=True, help="rotations CSV")
    leaves["gen sphere-projections"] = p

    p = sub.add_parser("vr", help="Vietoris-Rips filtration")
    _add_common(p)
    _add_input_cloud(p)
    p.add_argument("--max-dim", type=int, default=2)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--output", required=True)
    leaves["vr"] = p

    p = sub.add_parser("local-pca", help="local PCA trivialization")
    _add_common(p)
    p.add_argument("--points", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--output", required=True)
    leaves["local-pca"] = p

    p = sub.add_parser("witness", help="best approximate cocycle of a trivialization")
    _add_common(p)
    p.add_argument("--trivialization", required=True)
    p.add_argument("--filtration", required=True, help="filtration whose edges carry the cocycle")
    p.add_argument("--output", required=True)
    leaves["witness"] = p

    p = sub.add_parser("defects", help="per-triangle cocycle defects and consistency radius")
    _add_common(p)
    p.add_argument("--cocycle", required=True)
    p.add_argument("--filtration", required=True)
    p.add_argument("--output", default="-", help="CSV v0,v1,v2,birth,defect")
    leaves["defects"] = p

    p = sub.add_parser("death", help="epsilon-death of a cocycle")
    _add_common(p)
    p.add_argument("--cocycle", required=True)
    p.add_argument("--filtration", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    leaves["death"] = p

    for name, help_ in (("sw1", "first Stiefel-Whitney cocycle"), ("sw2", "second Stiefel-Whitney cocycle"),
                        ("euler", "Euler cocycle")):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        p.add_argument("--cocycle", required=True)
        p.add_argument("--filtration", required=True)
        p.add_argument("--scale", type=float, default=None, help="restrict to K_r first")
        if name == "euler":
            p.add_argument("--prime", type=int, default=0, help="reduce mod this prime (0: integers)")
        p.add_argument("--output", default="-", help="CSV v0,..,vk,value")
        leaves[name] = p

    p = sub.add_parser("persistence", help="persistent cohomology diagram")
    _add_common(p)
    p.add_argument("--filtration", required=True)
    p.add_argument("--prime", type=int, default=2)
    p.add_argument("--max-deg", type=int, default=None)
    p.add_argument("--output", default="-", help="CSV degree,birth,death,bar_id")
    leaves["persistence"] = p

    p = sub.add_parser("decompose", help="write a class cocycle in the persistence basis")
    _add_common(p)
    p.add_argument("--filtration", required=True)
    p.add_argument("--class-cochain", required=True, help="CSV v0,..,vk,value")
    p.add_argument("--scale", type=float, required=True)
    p.add_argument("--prime", type=int, default=2)
    p.add_argument("--output", default="-", help="CSV bar_id,coefficient")
    leaves["decompose"] = p

    p = sub.add_parser("pipeline", help="full workflow into an output directory")
    _add_common(p)
    _add_input_cloud(p)
    p.add_argument("--filtration", help="precomputed filtration (instead of a point cloud)")
    p.add_argument("--cocycle", help="precomputed cocycle (instead of local PCA)")
    p.add_argument("--k", type=int, default=None, help="local PCA neighbors")
    p.add_argument("--d", type=int, default=None, help="local PCA rank")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--max-dim", type=int, default=None)
    p.add_argument("--prime", type=int, default=None, help="coefficient prime (default per class)")
    p.add_argument("--class", dest="classes", action="append", choices=sorted(CLASS_SPECS),
                   help="class to compute (repeatable; default sw1)")
    p.add_argument("--epsilon-sw1", type=float, default=None)
    p.add_argument("--epsilon-sw2", type=float, default=None)
    p.add_argument("--epsilon-euler", type=float, default=None)
    p.add_argument("--out-dir", required=True)
    leaves["pipeline"] = p
    return parser, leaves


# ---------------------------------------------------------------- config


def read_config(path) -> dict:
    cfg = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            if "=" not in s:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (t.strip() for t in s.split("=", 1))
            cfg[key.lstrip("-").replace("-", "_")] = value
    return cfg


def _convert(action: argparse.Action, raw: str):
    if isinstance(action, argparse._AppendAction):
        items = [t.strip() for t in raw.split(",") if t.strip()]
        conv = [action.type(t) if action.type else t for t in items]
        if action.choices is not None and any(c not in action.choices for c in conv):
            raise ConfigError(f"invalid value {raw!r} for {action.dest}")
        return conv
    value = action.type(raw) if action.type else raw
    if action.choices is not None and value not in action.choices:
        raise ConfigError(f"invalid value {raw!r} for {action.dest}")
    return value


def apply_config(leaf: argparse.ArgumentParser, cfg: dict) -> None:
    actions = {a.dest: a for a in leaf._actions}
    defaults = {}
    for key, raw in cfg.items():
        if key in ("config", "help") or key not in actions:
            raise ConfigError(f"unknown configuration key {key!r}")
        defaults[key] = _convert(actions[key], raw)
    # a config value satisfies a required option
    for key in defaults:
        actions[key].required = False
    leaf.set_defaults(**defaults)


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        head = [a for a in argv if not a.startswith("-")][:2]
        key = " ".join(head) if head and head[0] == "gen" else (head[0] if head else "")
        if key not in leaves:
            parser.parse_args(argv)  # let argparse report the problem
        apply_config(leaves[key], read_config(known.config))
    return parser.parse_args(argv)


# ---------------------------------------------------------------- helpers


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    import scipy

    try:
        import numba

        nb = numba.__version__
    except ImportError:  # pragma: no cover
        nb = None
    return {
        "approxvb": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": nb,
        "numba_enabled": USE_NUMBA,
    }


def _load_cloud_dissimilarity(args) -> tuple[np.ndarray | None, np.ndarray, np.ndarray | None]:
    """``(points, D, rotations)`` from the point-cloud style options."""
    if args.images:
        if not args.rotations:
            raise DegenerateInputError("--images needs --rotations")
        imgs = vio.read_matrix_csv(args.images)
        rots = vio.read_rotations(args.rotations)
        if rots.shape[0] != imgs.shape[0]:
            raise DegenerateInputError("one rotation per image is required")
        D = vio.read_matrix_csv(args.dissimilarity) if args.dissimilarity else ingest.projection_dissimilarity(imgs, rots)
        return imgs, D, rots
    X = vio.read_matrix_csv(args.points) if args.points else None
    if args.dissimilarity:
        D = vio.read_matrix_csv(args.dissimilarity)
    elif X is not None:
        D = ingest.euclidean_dissimilarity(X)
    else:
        raise DegenerateInputError("need --points, --dissimilarity or --images")
    return X, D, None


def _restricted(omega: DiscreteCocycle, F: Filtration, scale):
    if scale is None:
        return omega
    Kr, _ = F.at(scale)
    return restrict_cocycle(omega, Kr)


# ---------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    if args.dataset == "double-gyre":
        times, pos = ingest.gen_double_gyre(args.A, args.eps, args.omega, args.x0, args.y0, args.t0,
                                            args.n_samples, args.t_end, args.step, args.flow_sign)
        if args.trajectory:
            vio.write_matrix_csv(np.column_stack([times, pos]), args.trajectory)
        X = ingest.attractor_dataset(args.x0, args.y0, args.t0, args.n_points, args.tau, args.embed_dim,
                                     args.seed, args.step, args.subsample, A=args.A, eps=args.eps,
                                     omega=args.omega, n_samples=args.n_samples, t_end=args.t_end,
                                     flow_sign=args.flow_sign)
        vio.write_matrix_csv(X, args.output)
    elif args.dataset == "lines":
        vio.write_matrix_csv(ingest.gen_lines(args.count, args.size, args.n_angles, args.sigma, args.max_offset,
                                              args.n_offsets, args.seed),
                             args.output)
    else:
        imgs, rots = ingest.gen_sphere_projections(args.n, args.size, args.seed)
        vio.write_matrix_csv(imgs, args.output)
        vio.write_rotations(rots, args.rotations_output)
    return EXIT_OK


def cmd_vr(args) -> int:
    _, D, _ = _load_cloud_dissimilarity(args)
    vio.write_filtration(vr_filtration(D, args.max_dim, args.threshold), args.output)
    return EXIT_OK


def cmd_local_pca(args) -> int:
    X = vio.read_matrix_csv(args.points)
    vio.write_trivialization(ingest.local_pca(X, args.k, args.d), args.output)
    return EXIT_OK


def cmd_witness(args) -> int:
    F = vio.read_filtration(args.filtration)
    phi = vio.read_trivialization(args.trivialization, F.complex)
    vio.write_cocycle(witness(phi), args.output)
    return EXIT_OK


def cmd_defects(args) -> int:
    F = vio.read_filtration(args.filtration)
    omega = vio.read_cocycle(args.cocycle, F.complex)
    rows = defects_table(omega, F)
    with vio._open(args.output, "w") as fh:
        fh.write("v0,v1,v2,birth,defect\n")
        for r in rows:
            fh.write(f"{int(r[0])},{int(r[1])},{int(r[2])},{vio._fmt(r[3])},{vio._fmt(r[4])}\n")
    print(f"consistency_radius={vio._fmt(consistency_radius(omega))}", file=sys.stderr)
    return EXIT_OK


def cmd_death(args) -> int:
    F = vio.read_filtration(args.filtration)
    omega = vio.read_cocycle(args.cocycle, F.complex)
    print(vio._fmt(epsilon_death(omega, F, args.epsilon)))
    return EXIT_OK


def cmd_class(args) -> int:
    F = vio.read_filtration(args.filtration)
    omega = _restricted(vio.read_cocycle(args.cocycle, F.complex), F, args.scale)
    if args.command == "sw1":
        z = charclass.sw1(omega)
    elif args.command == "sw2":
        z = charclass.sw2(omega)
    else:
        if np.any(omega.determinants() < 0):
            omega = orient(omega)
        z = charclass.euler(omega)
        if args.prime:
            z = charclass.reduce_mod(z, args.prime)
    z.write_csv(args.output)
    return EXIT_OK


def cmd_persistence(args) -> int:
    F = vio.read_filtration(args.filtration)
    diag = persistent_cohomology(F, args.prime, args.max_deg)
    diag.write_csv(args.output)
    return EXIT_OK


def cmd_decompose(args) -> int:
    F = vio.read_filtration(args.filtration)
    Kr, _ = F.at(args.scale)
    # values on simplices born after the scale are dropped
    z = vio.read_cochain_csv(args.class_cochain, F.complex, args.prime).restrict(Kr)
    diag = persistent_cohomology(F, args.prime, z.degree)
    dec = decompose_class(z, diag, args.scale)
    dec.write_csv(args.output)
    return EXIT_OK


def _pipeline_config_lines(args) -> list[str]:
    skip = {"command", "config", "log_level", "out_dir"}
    lines = []
    for key in sorted(vars(args)):
        val = getattr(args, key)
        if key in skip or val is None:
            continue
        if isinstance(val, list):
            val = ",".join(str(v) for v in val)
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{key.replace('_', '-')}={val}")
    return lines


def run_pipeline(args) -> int:
    from filelock import FileLock, Timeout

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(out / LOCK_NAME), timeout=0)
    try:
        lock.acquire()
    except Timeout:
        log.error("output directory %s is locked by another run", out)
        return EXIT_IO
    try:
        return _pipeline_body(args, out)
    finally:
        lock.release()


def _pipeline_body(args, out: Path) -> int:
    classes = args.classes or ["sw1"]
    eps = {"sw1": args.epsilon_sw1, "sw2": args.epsilon_sw2, "euler": args.epsilon_euler}
    for c in classes:
        if eps[c] is not None and eps[c] > CLASS_SPECS[c][1]:
            raise RegimeError(f"{c} needs epsilon <= {CLASS_SPECS[c][1]}, got {eps[c]}")
    primes = {args.prime or CLASS_SPECS[c][3] for c in classes}
    if len(primes) != 1:
        raise DegenerateInputError("requested classes use different default primes; pass --prime")
    p = primes.pop()
    top_degree = max(CLASS_SPECS[c][2] for c in classes)

    rots = None
    X = None
    if args.filtration:
        F = vio.read_filtration(args.filtration)
    else:
        if args.threshold is None:
            raise DegenerateInputError("--threshold is required unless --filtration is given")
        X, D, rots = _load_cloud_dissimilarity(args)
        max_dim = args.max_dim if args.max_dim is not None else top_degree + 1
        F = vr_filtration(D, max_dim, args.threshold)
    if args.cocycle:
        omega = vio.read_cocycle(args.cocycle, F.complex)
    elif rots is not None:
        omega = ingest.alignment_cocycle(rots, F.complex)
    else:
        if X is None or args.k is None or args.d is None:
            raise DegenerateInputError("local PCA needs --points, --k and --d (or pass --cocycle)")
        omega = witness(ingest.local_pca(X, args.k, args.d, F.complex))

    files = {}

    def _record(name: str) -> Path:
        files[name] = out / name
        return out / name

    vio.write_filtration(F, _record("filtration.txt"))
    vio.write_cocycle(omega, _record("cocycle.txt"))
    rows = defects_table(omega, F)
    vio.write_table_csv(["v0", "v1", "v2", "birth", "defect"],
                        [(int(r[0]), int(r[1]), int(r[2]), r[3], r[4]) for r in rows], _record("defects.csv"))
    diag = persistent_cohomology(F, p, top_degree)
    diag.write_csv(_record("diagram.csv"))

    summary = {"consistency_radius": consistency_radius(omega), "prime": p, "classes": {}}
    status = EXIT_OK
    for c in classes:
        res = compute_class(c, omega, F, diag, eps[c])
        info = {"epsilon": res.epsilon, "death": res.death, "scale": res.scale,
                "span_bar_ids": [b.bar_id for b in res.span], "decorated_bar_ids": res.decorated(),
                "nonzero": res.nonzero, "most_persistent_decorated": res.most_persistent_decorated()}
        summary["classes"][c] = info
        # an empty span at a valid scale only means the class group is zero
        if res.scale is None or res.death <= 0:
            log.error("%s: empty %g-span (epsilon-death %g)", c, res.epsilon, res.death)
            print(f"{c}: empty epsilon-span (epsilon-death {res.death!r})", file=sys.stderr)
            status = EXIT_EMPTY_SPAN
            continue
        res.class_cocycle.write_csv(_record(f"class_{c}.csv"))
        res.decomposition.write_csv(_record(f"decomposition_{c}.csv"))
        deg = CLASS_SPECS[c][2]
        vio.write_table_csv(
            ["degree", "birth", "death", "bar_id", "decorated"],
            [(b.degree, b.birth, b.death, b.bar_id, int(res.decomposition.coefficient(b.bar_id) != 0))
             for b in diag.degree(deg)],
            _record(f"decorated_{c}.csv"),
        )
        print(f"{c}: death={res.death!r} nonzero={res.nonzero} decorated={res.decorated()}")

    with open(_record("config.txt"), "w") as fh:
        fh.write("\n".join(_pipeline_config_lines(args)) + "\n")
    manifest = {
        "command": "pipeline",
        "config": _pipeline_config_lines(args),
        "versions": _versions(),
        "inputs": {k: _sha256(getattr(args, k)) for k in ("points", "dissimilarity", "images", "rotations",
                                                          "filtration", "cocycle")
                   if getattr(args, k) and getattr(args, k) != "-"},
        "outputs": {name: _sha256(path) for name, path in sorted(files.items())},
        "summary": summary,
        "exit_status": status,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return status


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


COMMANDS = {
    "gen": cmd_gen,
    "vr": cmd_vr,
    "local-pca": cmd_local_pca,
    "witness": cmd_witness,
    "defects": cmd_defects,
    "death": cmd_death,
    "sw1": cmd_class,
    "sw2": cmd_class,
    "euler": cmd_class,
    "persistence": cmd_persistence,
    "decompose": cmd_decompose,
    "pipeline": run_pipeline,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except (ConfigError, OSError) as exc:
        print(f"approxvb: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("default")
    try:
        return COMMANDS[args.command](args)
    except RegimeError as exc:
        print(f"approxvb: regime violation: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (DegenerateInputError, RankError, AmbiguityError, ObstructionError, KeyError) as exc:
        print(f"approxvb: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"approxvb: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
