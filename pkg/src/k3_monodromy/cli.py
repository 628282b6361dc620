"""Command-line entry point.

Every subcommand prints one JSON document (to ``--out`` or stdout) and a run manifest
(to ``<out>.manifest.json`` or stderr). Exit codes: 0 on success, 1 on a domain or
internal failure, 2 on a usage error.
"""

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from collections.abc import Callable, Iterator, Mapping, Sequence
from contextlib import contextmanager
from dataclasses import asdict, dataclass, is_dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ValidationError

from k3_monodromy import __version__
from k3_monodromy.config import Settings, settings
from k3_monodromy.constants import JSON_SAFE_INT
from k3_monodromy.errors import K3MonodromyError, PathFailureError, UsageError
from k3_monodromy.exact import make_rng, rank
from k3_monodromy.homotopy import PolySystem, TrackerConfig, solve
from k3_monodromy.incidence import (
    ParamCurve,
    PointConfigP2,
    PointConfigQuadric,
    Target,
    build_A,
    double_points,
    non_immersion_points,
    random_p2_config,
    random_quadric_config,
    sample_curve,
)
from k3_monodromy.local_rings import (
    Dim,
    NoEmbedding,
    Singularity,
    Unbounded,
    classify_singularity,
    colength,
    embedding_dimension,
    milnor_number,
    parse_bipoly,
    parse_ideal,
)
from k3_monodromy.monodromy import METHODS, SUPPORTED_DEGREES, PlaneCurve, certify_cover, solve_bitangents
from k3_monodromy.permgroup import Permutation, certify_symmetric
from k3_monodromy.series_counts import CuspType, beauville_multiplicity, yau_zaslow_counts
from k3_monodromy.surface_glue import GlueInput, glue, random_glue_input

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
VANDERMONDE_COLUMNS = (3, 4, 5)
DEFAULT_RANK_CONFIGS = 100


class RunManifest(BaseModel):
    """Provenance of one CLI run."""

    subcommand: str
    argv: list[str]
    seed: int
    wall_time: float
    version: str
    output_sha256: str


@dataclass
class RunContext:
    """Per-run state handed to every subcommand."""

    settings: Settings
    rng: np.random.Generator
    tracker: TrackerConfig
    threads: int


Handler = Callable[[argparse.Namespace, RunContext], Any]


def to_jsonable(value: Any) -> Any:
    """Convert results to plain JSON values.

    Integers beyond 2^53 and rationals become decimal strings, complex numbers become
    [re, im] pairs and non-finite floats become strings.
    """
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump())
    if isinstance(value, Unbounded | NoEmbedding):
        return str(value)
    if isinstance(value, Dim):
        return {"dim": value.value}
    if is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(asdict(value))
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value) if abs(value) > JSON_SAFE_INT else value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return value if math.isfinite(value) else str(value)
    if isinstance(value, complex):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(v) for v in value]
    return str(value)


def dump_json(value: Any) -> str:
    return json.dumps(to_jsonable(value), indent=2, sort_keys=True) + "\n"


def read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise UsageError(f"Cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not valid JSON: {e}") from e


def parse_points(text: str | None) -> list[tuple[str, ...]]:
    """Points written as ``"y,z,t; y,z,t"`` with rational coordinates."""
    if not text:
        return []
    return [tuple(v.strip() for v in chunk.split(",")) for chunk in text.split(";") if chunk.strip()]


def point_config(data: Any, target: Target) -> PointConfigP2 | PointConfigQuadric:
    if not isinstance(data, dict) or not isinstance(data.get("mu"), list):
        raise UsageError("A point configuration needs a 'mu' list")
    mu = tuple(data["mu"])
    lambdas = data.get("lambdas")
    if target is Target.P2:
        return PointConfigP2(mu, tuple(lambdas) if lambdas is not None else None)
    if not isinstance(lambdas, list):
        raise UsageError("A quadric configuration needs a 'lambdas' list")
    return PointConfigQuadric(mu, tuple(lambdas))  # type: ignore[arg-type]


def curve_report(curve: ParamCurve, rng: np.random.Generator) -> dict[str, Any]:
    nodes = double_points(curve, rng)
    return {
        "curve": curve.to_json(),
        "double_points": nodes,
        "double_point_count": len(nodes),
        "non_immersion": non_immersion_points(curve),
    }


def run_yz(args: argparse.Namespace, ctx: RunContext) -> Any:
    return yau_zaslow_counts(args.gmax)


def run_eps(args: argparse.Namespace, ctx: RunContext) -> Any:
    return beauville_multiplicity(CuspType(args.p, args.q))


def run_colength(args: argparse.Namespace, ctx: RunContext) -> Any:
    return {"ideal": args.ideal, "colength": colength(parse_ideal(args.ideal))}


def run_milnor(args: argparse.Namespace, ctx: RunContext) -> Any:
    f = parse_bipoly(args.f)
    return {"f": args.f, "milnor": milnor_number(f), "type": classify_singularity(f)}


def run_embed(args: argparse.Namespace, ctx: RunContext) -> Any:
    sing = Singularity(args.sing)
    return {"singularity": sing, "n": args.n, "embedding": embedding_dimension(sing, args.n, ctx.rng)}


def run_incidence_rank(args: argparse.Namespace, ctx: RunContext) -> Any:
    if args.config is not None:
        matrix = build_A(point_config(read_json(args.config), Target.QUADRIC))  # type: ignore[arg-type]
        return {"rank": matrix.rank(), "vandermonde_rank": rank(matrix.columns(VANDERMONDE_COLUMNS))}
    full = vandermonde = 0
    for _ in range(args.configs):
        matrix = build_A(random_quadric_config(ctx.rng))
        full += matrix.rank() == 4
        vandermonde += rank(matrix.columns(VANDERMONDE_COLUMNS)) == 3
    logger.info(f"{full} of {args.configs} random configurations have full rank")
    return {"configs": args.configs, "full_rank": full, "vandermonde_rank_3": vandermonde}


def run_incidence_sample(args: argparse.Namespace, ctx: RunContext) -> Any:
    target = Target(args.target)
    if args.config is not None:
        cfg = point_config(read_json(args.config), target)
    else:
        cfg = random_p2_config(ctx.rng) if target is Target.P2 else random_quadric_config(ctx.rng)
    return curve_report(sample_curve(cfg, ctx.rng), ctx.rng)


def run_incidence_singularities(args: argparse.Namespace, ctx: RunContext) -> Any:
    data = read_json(args.curve)
    if not isinstance(data, dict):
        raise UsageError(f"{args.curve} must hold a curve object")
    return curve_report(ParamCurve.from_json(data), ctx.rng)


def glue_input_file(path: Path) -> GlueInput:
    """Read ``{"g": ..., "h": ..., "sing_c": [[y, z, t], ...], "sing_c_prime": [[x, y, z], ...]}``."""
    data = read_json(path)
    if not isinstance(data, dict) or not isinstance(data.get("g"), str) or not isinstance(data.get("h"), str):
        raise UsageError(f"{path} needs string fields 'g' and 'h'")
    points: dict[str, list[tuple[str, ...]]] = {}
    for key in ("sing_c", "sing_c_prime"):
        value = data.get(key, [])
        if not isinstance(value, list) or not all(isinstance(p, list) and len(p) == 3 for p in value):
            raise UsageError(f"{path}: '{key}' must be a list of 3-element points")
        points[key] = [tuple(str(c) for c in p) for p in value]
    return GlueInput.from_forms(data["g"], data["h"], points["sing_c"], points["sing_c_prime"])


def run_glue(args: argparse.Namespace, ctx: RunContext) -> Any:
    if args.random:
        inp = random_glue_input(ctx.rng)
    elif args.input is not None:
        inp = glue_input_file(args.input)
    elif args.g and args.h:
        inp = GlueInput.from_forms(args.g, args.h, parse_points(args.sing_c), parse_points(args.sing_c_prime))
    else:
        raise UsageError("glue needs --input, --g and --h, or --random")
    result = glue(inp, ctx.rng).to_json()
    result["input"] = {
        "g": str(inp.g.as_expr()),
        "h": str(inp.h.as_expr()),
        "scale": inp.scale,
        "sing_c": inp.sing_c,
        "sing_c_prime": inp.sing_c_prime,
    }
    return result


def run_solve(args: argparse.Namespace, ctx: RunContext) -> Any:
    data = read_json(args.system)
    if not isinstance(data, dict):
        raise UsageError(f"{args.system} must hold an object with 'variables' and 'equations'")
    variables, equations = data.get("variables"), data.get("equations")
    if not isinstance(variables, list) or not isinstance(equations, list):
        raise UsageError("A system needs 'variables' and 'equations' lists")
    system = PolySystem.parse([str(e) for e in equations], [str(v) for v in variables])
    solutions = solve(system, ctx.tracker, ctx.rng, ctx.threads).sorted()
    return {"variables": variables, "count": len(solutions), "solutions": solutions.to_json()}


def run_certify(args: argparse.Namespace, ctx: RunContext) -> Any:
    return certify_cover(args.degree, args.loops, ctx.settings.seed, ctx.tracker, ctx.threads, hunt=args.hunt)


def run_bitangents(args: argparse.Namespace, ctx: RunContext) -> Any:
    if args.curve:
        curve = PlaneCurve.parse(args.curve)
    elif args.degree is not None:
        curve = PlaneCurve.random(args.degree, ctx.rng)
    else:
        raise UsageError("bitangents needs --degree or --curve")
    fibre = solve_bitangents(curve, ctx.tracker, ctx.rng, method=args.method, threads=ctx.threads)
    return {"curve": curve.to_json(), **fibre.to_json()}


def run_group_analyze(args: argparse.Namespace, ctx: RunContext) -> Any:
    data = read_json(args.perms)
    if not isinstance(data, list) or not data or not all(isinstance(p, list) for p in data):
        raise UsageError(f"{args.perms} must hold a non-empty list of image lists")
    try:
        gens = [Permutation(tuple(p)) for p in data]
    except (TypeError, ValueError) as e:
        raise UsageError(f"Bad permutation in {args.perms}: {e}") from e
    return certify_symmetric(gens, word_budget=args.word_budget, rng=ctx.rng)


def common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="random seed (default from settings, 0)")
    common.add_argument("--out", type=Path, help="write JSON here instead of stdout")
    common.add_argument("--threads", type=int, help="worker threads for path tracking")
    common.add_argument("--tolerance", type=float, help="residual accepted at the end of a path")
    common.add_argument("--settings", type=Path, help="key=value settings file")
    common.add_argument("--log-level", choices=LOG_LEVELS, help="logging level")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = common_options()
    parser = argparse.ArgumentParser(prog="k3mono", description="Curve counts and monodromy on K3 surfaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="group", required=True)

    def leaf(sub: Any, name: str, handler: Handler, help_text: str) -> argparse.ArgumentParser:
        p: argparse.ArgumentParser = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(handler=handler, command=p.prog.removeprefix("k3mono "))
        return p

    leaf(commands, "yz", run_yz, "rational curve counts n_0..n_g").add_argument("--gmax", type=int, required=True)

    eps = leaf(commands, "eps", run_eps, "multiplicity of an x^p - y^q singularity")
    eps.add_argument("--p", type=int, required=True)
    eps.add_argument("--q", type=int, required=True)

    localring = commands.add_parser("localring", help="local algebra at the origin").add_subparsers(
        dest="action", required=True
    )
    leaf(localring, "colength", run_colength, "colength of an ideal").add_argument("--ideal", required=True)
    leaf(localring, "milnor", run_milnor, "Milnor number of a germ").add_argument("--f", required=True)
    embed = leaf(localring, "embed", run_embed, "embeddings of a germ in a length-n scheme")
    embed.add_argument("--sing", choices=[s.value for s in Singularity], required=True)
    embed.add_argument("--n", type=int, required=True)

    incidence = commands.add_parser("incidence", help="rational curves through points").add_subparsers(
        dest="action", required=True
    )
    rank_cmd = leaf(incidence, "rank", run_incidence_rank, "ranks of quadric incidence matrices")
    rank_cmd.add_argument("--configs", type=int, default=DEFAULT_RANK_CONFIGS)
    rank_cmd.add_argument("--config", type=Path, help="JSON with 'mu' and 'lambdas'")
    sample = leaf(incidence, "sample", run_incidence_sample, "sample a curve and its singularities")
    sample.add_argument("--target", choices=[t.value for t in Target], default=Target.QUADRIC.value)
    sample.add_argument("--config", type=Path, help="JSON with 'mu' and optional 'lambdas'")
    singular = leaf(incidence, "singularities", run_incidence_singularities, "singularities of a curve")
    singular.add_argument("--curve", type=Path, required=True)

    glue_cmd = leaf(commands, "glue", run_glue, "glue two compatible plane quartics")
    glue_cmd.add_argument("--input", type=Path, help="JSON file with g, h, sing_c and sing_c_prime")
    glue_cmd.add_argument("--g", help="quartic in y, z, t")
    glue_cmd.add_argument("--h", help="quartic in x, y, z")
    glue_cmd.add_argument("--sing-c", help="singular points of g as 'y,z,t;...'")
    glue_cmd.add_argument("--sing-c-prime", help="singular points of h as 'x,y,z;...'")
    glue_cmd.add_argument("--random", action="store_true", help="draw a random nodal input")

    leaf(commands, "solve", run_solve, "solve a square polynomial system").add_argument(
        "--system", type=Path, required=True
    )

    monodromy = commands.add_parser("monodromy", help="bitangents and their monodromy").add_subparsers(
        dest="action", required=True
    )
    certify = leaf(monodromy, "certify", run_certify, "certify the bitangent monodromy group")
    certify.add_argument("--degree", type=int, choices=SUPPORTED_DEGREES, required=True)
    certify.add_argument("--loops", type=int, required=True)
    certify.add_argument("--hunt", action=argparse.BooleanOptionalAction, default=None)
    bitangents = leaf(monodromy, "bitangents", run_bitangents, "all bitangents of a plane curve")
    bitangents.add_argument("--degree", type=int)
    bitangents.add_argument("--curve", help="homogeneous polynomial in x, y, z")
    bitangents.add_argument("--method", choices=METHODS, default="auto")

    group = commands.add_parser("group", help="permutation groups").add_subparsers(dest="action", required=True)
    analyze = leaf(group, "analyze", run_group_analyze, "certify a group symmetric")
    analyze.add_argument("--perms", type=Path, required=True)
    analyze.add_argument("--word-budget", type=int)
    return parser


def load_settings(args: argparse.Namespace) -> Settings:
    """Settings from the optional file, then the command-line overrides."""
    if args.settings is not None:
        if not args.settings.is_file():
            raise UsageError(f"Settings file {args.settings} not found")
        loaded = Settings(_env_file=args.settings)
    else:
        loaded = Settings()
    overrides: dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.tolerance is not None:
        overrides["success_residual"] = args.tolerance
    if args.log_level is not None:
        overrides["log_level"] = args.log_level
    merged = Settings.model_validate({**loaded.model_dump(), **overrides})
    if merged.log_level.upper() not in logging.getLevelNamesMapping():
        raise UsageError(f"Unknown log level {merged.log_level!r}")
    if merged.threads < 1:
        raise UsageError(f"threads must be positive, got {merged.threads}")
    return merged


@contextmanager
def applied(run_settings: Settings) -> Iterator[None]:
    """Make ``run_settings`` the process-wide settings for the duration of a run."""
    saved = settings.model_dump()
    for name, value in run_settings.model_dump().items():
        setattr(settings, name, value)
    try:
        yield
    finally:
        for name, value in saved.items():
            setattr(settings, name, value)


def write_outputs(args: argparse.Namespace, argv: Sequence[str], text: str, seed: int, started: float) -> None:
    manifest = RunManifest(
        subcommand=args.command,
        argv=list(argv),
        seed=seed,
        wall_time=time.perf_counter() - started,
        version=__version__,
        output_sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )
    if args.out is None:
        sys.stdout.write(text)
        print(manifest.model_dump_json(), file=sys.stderr)
        return
    args.out.write_text(text, encoding="utf-8")
    manifest_path = args.out.with_name(args.out.name + ".manifest.json")
    manifest_path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote {args.out} and {manifest_path}")


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return the exit code."""
    arguments = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(arguments)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    try:
        run_settings = load_settings(args)
    except (UsageError, ValidationError) as e:
        print(f"k3mono: error: {e}", file=sys.stderr)
        return 2
    logging.basicConfig(level=run_settings.log_level.upper(), format=LOG_FORMAT, stream=sys.stderr)

    started = time.perf_counter()
    try:
        with applied(run_settings):
            ctx = RunContext(
                run_settings,
                make_rng(run_settings.seed),
                TrackerConfig.from_settings(run_settings),
                run_settings.threads,
            )
            logger.info(f"Running {args.command} with seed {run_settings.seed}")
            result = args.handler(args, ctx)
        write_outputs(args, arguments, dump_json(result), run_settings.seed, started)
    except (UsageError, ValidationError) as e:
        print(f"k3mono: error: {e}", file=sys.stderr)
        return 2
    except PathFailureError as e:
        logger.debug(f"Failed paths: {json.dumps(to_jsonable(e.path_log))}")
        print(f"k3mono: failed: {e}", file=sys.stderr)
        return 1
    except (K3MonodromyError, OSError) as e:
        print(f"k3mono: failed: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
