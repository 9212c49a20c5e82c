"""Command-line interface: embed, cluster, interleave, stability, bench-dna,
flatten-check, rerun.

Every run writes a manifest next to its primary output recording the resolved
configuration, input digests, and seeds; `rerun` re-executes a manifest and
reproduces the outputs byte for byte. All numeric text is printed with 17
significant digits. The --threads flag caps internal parallelism; the current
implementation computes sequentially regardless, so results never depend on it.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .algorithms import PipelineSpec, run_pipeline
from .covers import MembershipMatrix, membership_matrix
from .dna import BenchConfig, run_bench
from .errors import NumericalError, ValidationError
from .fileio import (
    fmt,
    read_hierarchy_json,
    read_json,
    read_space,
    sha256_file,
    write_bench_csv,
    write_embedding_csv,
    write_hierarchy_json,
    write_json,
    write_trace_csv,
)
from .functors import cluster_hierarchy, maximal_linkage
from .loss import QuadratureSettings, flatten, mds_fuzzy_family
from .metric import PseudometricSpace
from .optimize import OptimizerConfig
from .stability import check_interleaving_bound, check_loss_transfer, interleaving_distance

ALGO_TABLE = {
    # algo name -> (cluster stage, loss stage, k transform)
    "mmds": ("ml", "mds", None),
    "sls": ("sl", "mds", None),
    "isomap": ("iso", "mds", None),
    "kpath": ("lk", "mds", "hops"),  # pipeline k is the hop bound + 1
    "kvertex": ("vlk", "mds", "k"),
    "umap": ("fuzzy", "fce", None),
    "mdsfuzzy": ("fuzzy", "mds", None),
}


def build_hash() -> str:
    digest = hashlib.sha256()
    pkg = Path(__file__).parent
    for src in sorted(pkg.glob("*.py")):
        digest.update(src.name.encode())
        digest.update(src.read_bytes())
    return digest.hexdigest()[:12]


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _spec_from_args(args) -> PipelineSpec:
    optimizer = OptimizerConfig(
        max_iters=args.max_iters, seed=args.seed, init=args.init
    )
    if args.pipeline:
        fields = dict(part.split("=", 1) for part in args.pipeline.split(","))
        cluster = fields.pop("cluster", None)
        loss = fields.pop("loss", "mds")
        if cluster is None or fields:
            raise ValidationError(
                "--pipeline wants 'cluster=STAGE,loss=STAGE'"
            )
        return PipelineSpec(
            cluster, loss, args.m, k=args.k, delta=args.delta,
            optimizer=optimizer, policy=args.policy,
        )
    if args.algo is None:
        raise ValidationError("need --algo or --pipeline")
    if args.algo not in ALGO_TABLE:
        raise ValidationError(f"unknown algorithm {args.algo!r}")
    cluster, loss, k_rule = ALGO_TABLE[args.algo]
    k = None
    if k_rule is not None:
        if args.k is None:
            raise ValidationError(f"algorithm {args.algo!r} needs --k")
        k = args.k + 1 if k_rule == "hops" else args.k
    return PipelineSpec(
        cluster, loss, args.m, k=k, delta=args.delta,
        optimizer=optimizer, policy=args.policy,
    )


def _manifest(args, subcommand, inputs, outputs, extra=None):
    entry = {
        "tool": "coverembed",
        "version": __version__,
        "build": build_hash(),
        "subcommand": subcommand,
        "config": {
            k: v
            for k, v in sorted(vars(args).items())
            if k not in ("func", "manifest")
            and not k.startswith("_")
            and isinstance(v, (str, int, float, bool, type(None), list, tuple))
        },
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    if extra:
        entry.update(extra)
    return entry


def _write_manifest(args, subcommand, inputs, outputs, extra=None):
    path = args.manifest or (str(outputs[0]) + ".manifest.json" if outputs else None)
    if path:
        write_json(path, _manifest(args, subcommand, inputs, outputs, extra))
    return path


def cmd_embed(args):
    space = read_space(args.infile, args.input_kind)
    spec = _spec_from_args(args)
    embedding, report = run_pipeline(spec, space)
    write_embedding_csv(args.out, embedding)
    outputs = [args.out]
    if args.trace_out:
        write_trace_csv(args.trace_out, report.trace)
        outputs.append(args.trace_out)
    _write_manifest(
        args,
        "embed",
        [args.infile],
        outputs,
        extra={
            "final_loss": report.final_loss,
            "exit_reason": report.exit_reason,
            "target_summary": report.target_summary,
        },
    )
    print(
        f"embed: {args.algo or args.pipeline} n={space.n} m={spec.m} "
        f"loss={fmt(report.final_loss)} exit={report.exit_reason}"
    )
    return 0


def cmd_cluster(args):
    space = read_space(args.infile, args.input_kind)
    h = cluster_hierarchy(
        space, args.functor, k=args.k, delta=args.delta,
        disconnected="cap" if args.policy == "cap" else "error",
    )
    write_hierarchy_json(args.out, h)
    _write_manifest(args, "cluster", [args.infile], [args.out])
    print(f"cluster: {args.functor} n={space.n} scales={len(h.scales)}")
    return 0


def cmd_interleave(args):
    h1 = read_hierarchy_json(args.a)
    h2 = read_hierarchy_json(args.b)
    report = interleaving_distance(h1, h2)
    print(fmt(report.epsilon_star))
    outputs = []
    if args.out:
        write_json(
            args.out,
            {
                "epsilon_star": report.epsilon_star,
                "candidates": list(report.candidates),
                "failures": [list(f) for f in report.failures],
            },
        )
        outputs = [args.out]
        _write_manifest(args, "interleave", [args.a, args.b], outputs)
    return 0


def cmd_stability(args):
    x = read_space(args.x, args.input_kind)
    y = read_space(args.y, args.input_kind)
    spec = _spec_from_args(args)

    def stage(space):
        return cluster_hierarchy(space, spec.cluster, k=spec.k, delta=spec.delta,
                                 disconnected="cap")

    shift = check_interleaving_bound(stage, x, y)
    payload = {
        "epsilon": shift.epsilon,
        "interleaving": {
            "epsilon_star": shift.epsilon_star,
            "passed": shift.passed,
        },
    }
    if spec.loss == "mds":
        transfer = check_loss_transfer(spec, x, y)
        payload["loss_transfer"] = {
            "epsilon": transfer.epsilon,
            "k_c": transfer.k_c,
            "k_e": transfer.k_e,
            "radius": transfer.radius,
            "loss_cross": transfer.loss_cross,
            "loss_base": transfer.loss_base,
            "bound": transfer.bound,
            "passed": transfer.passed,
            "constant_e": transfer.constant_e,
        }
    write_json(args.out, payload)
    _write_manifest(args, "stability", [args.x, args.y], [args.out])
    verdicts = [payload["interleaving"]["passed"]]
    if "loss_transfer" in payload:
        verdicts.append(payload["loss_transfer"]["passed"])
    print(f"stability: eps={fmt(shift.epsilon)} eps*={fmt(shift.epsilon_star)} "
          f"pass={all(verdicts)}")
    return 0


def cmd_bench_dna(args):
    dims = [int(v) for v in args.dim.split(",")]
    algos = [a.strip() for a in args.algos.split(",")]
    optimizer = OptimizerConfig(max_iters=args.max_iters)
    pipelines = []
    for m in dims:
        for algo in algos:
            cluster, loss, k_rule = ALGO_TABLE[algo]
            if k_rule is not None:
                raise ValidationError(f"benchmark does not take parametric algo {algo!r}")
            pipelines.append(PipelineSpec(cluster, loss, m, optimizer=optimizer))
    cfg = BenchConfig(
        n_lists=args.n,
        list_len=args.m_steps,
        seq_len=args.length,
        subs_per_step=args.subs,
        pipelines=tuple(pipelines),
        repetitions=args.reps,
        seed=args.seed,
    )
    progress = None
    if args.verbose:
        def progress(rep, spec, acc):
            print(f"  rep {rep}: {spec.cluster}/{spec.loss} m={spec.m} acc={acc:.3f}",
                  file=sys.stderr)
    result = run_bench(cfg, progress=progress)
    write_bench_csv(args.out, result)
    outputs = [args.out]
    if args.embeddings_out:
        from .dna import generate
        from .optimize import minimize
        from .algorithms import build_problem

        dataset = generate(cfg, cfg.repetition_seeds()[0])
        space = dataset.space()
        for spec in cfg.pipelines:
            problem = build_problem(space, spec)
            res = minimize(problem, spec.optimizer)
            labels = tuple(
                f"list{i // cfg.list_len}_step{i % cfg.list_len}"
                for i in range(space.n)
            )
            from .optimize import Embedding

            emb = Embedding(res.embedding.coords, labels)
            path = f"{args.embeddings_out}_{spec.cluster}_{spec.loss}_m{spec.m}.csv"
            write_embedding_csv(path, emb)
            outputs.append(path)
    _write_manifest(args, "bench-dna", [], outputs)
    for row in result.rows:
        print(
            f"{row.pipeline.cluster}/{row.pipeline.loss} m={row.pipeline.m}: "
            f"mean={row.mean:.3f} std={row.std:.3f}"
        )
    return 0


def cmd_flatten_check(args):
    space = read_space(args.infile, args.input_kind)
    report = flatten_check_report(space, args.pair[0], args.pair[1], a_min=args.a_min,
                                  rel_tol=args.rel_tol)
    if args.out:
        write_json(args.out, report)
        _write_manifest(args, "flatten-check", [args.infile], [args.out])
    target = report.get("target_distance")
    print(
        "flatten-check: pair=({}, {}) w={} target={} quad_argmin={} {}".format(
            args.pair[0],
            args.pair[1],
            fmt(report["membership"]) if report.get("membership") is not None else "-",
            fmt(target) if target is not None else "-",
            fmt(report["grid_argmin"]) if report.get("grid_argmin") is not None else "-",
            "(truncated)" if report.get("truncated") else "",
        ).rstrip()
    )
    return 0


def flatten_check_report(space: PseudometricSpace, i: int, j: int,
                         a_min: float | None = None, rel_tol: float = 1e-8) -> dict:
    """Quadrature-vs-target report for one pair's flattened stress family.

    Uses the maximal-linkage membership (w = exp(-d)). The flattened pairwise
    loss is grid-minimized over the embedded distance; the argmin lands at 0
    rather than at the target -log w, and the report states the residual
    rather than hiding it.
    """
    if space.n == 1:
        return {
            "n": 1,
            "membership": None,
            "target_distance": None,
            "grid_argmin": None,
            "quadrature_converged": True,
            "truncated": False,
            "note": "one-point space: the zero loss object",
        }
    if not (0 <= i < space.n and 0 <= j < space.n and i != j):
        raise ValidationError(f"pair ({i}, {j}) out of range for n={space.n}")
    w_full = membership_matrix(maximal_linkage(space))
    wij = float(w_full.w[min(i, j), max(i, j)])
    truncated = False
    if wij == 0.0:
        if a_min is None:
            raise ValidationError(
                f"pair ({i}, {j}) has membership 0; pass --a-min to truncate"
            )
        wij = a_min
        truncated = True
    pair_w = np.array([[1.0, wij], [wij, 1.0]])
    family = mds_fuzzy_family(MembershipMatrix(pair_w))
    flat_quad = flatten(family, QuadratureSettings(method="quadrature", rel_tol=rel_tol))
    c, e = flat_quad.pair(0, 1)
    target = -math.log(wij)
    xs = np.linspace(0.0, max(2.0 * target, 1.0), 2001)
    values = c.value(xs) + e.value(xs)
    arg = int(np.argmin(values))
    return {
        "n": space.n,
        "pair": [int(min(i, j)), int(max(i, j))],
        "membership": wij,
        "truncated": truncated,
        "target_distance": target,
        "grid_argmin": float(xs[arg]),
        "grid_min_value": float(values[arg]),
        "value_at_target": float(c.value(np.array(target)) + e.value(np.array(target))),
        "quadrature_converged": True,
        "argmin_matches_target": bool(abs(xs[arg] - target) <= xs[1] - xs[0]),
        "flattened_c": c.to_json(),
        "flattened_e": e.to_json(),
        "residual_curve": {
            "x": [float(v) for v in xs[:: len(xs) // 50]],
            "loss": [float(v) for v in values[:: len(xs) // 50]],
        },
        "note": (
            "flattening the strength-indexed stress family yields a positive "
            "quadratic in the embedded distance, so its pairwise argmin is 0, "
            "not the target -log w; surfaced by design"
        ),
    }


def cmd_rerun(args):
    manifest = read_json(args.manifest_path)
    sub = manifest["subcommand"]
    config = manifest["config"]
    argv = [sub]
    parser = make_parser()
    sub_parser = None
    for action in parser._subparsers._group_actions:
        sub_parser = action.choices[sub]
    store = {a.dest: a for a in sub_parser._actions}
    for key, value in config.items():
        if key in ("json_errors",):
            continue
        action = store.get(key)
        if action is None or value is None or not action.option_strings:
            continue
        flag = action.option_strings[-1]
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif isinstance(value, (list, tuple)):
            argv.append(flag)
            argv.extend(str(v) for v in value)
        else:
            argv.append(flag)
            argv.append(str(value))
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        rewritten = []
        skip = False
        for idx, token in enumerate(argv):
            if skip:
                skip = False
                if token.startswith("-"):
                    rewritten.append(token)
                    continue
                rewritten.append(str(out_dir / Path(token).name))
                continue
            if token in ("--out", "--embeddings-out", "--manifest", "--trace-out"):
                skip = True
            rewritten.append(token)
        argv = rewritten
    if args.threads is not None:
        argv += ["--threads", str(args.threads)]
    return dispatch(argv)


def _common_io(p, infile=True):
    if infile:
        p.add_argument("--in", dest="infile", required=True, help="input file")
        p.add_argument(
            "--input-kind", choices=("dist", "points", "seqs"), default="dist",
            help="how to read --in (distance CSV, point CSV, sequence lines)",
        )
    p.add_argument("--manifest", default=None, help="manifest path override")
    p.add_argument("--threads", type=int, default=1,
                   help="parallelism cap (results never depend on it)")
    p.add_argument("--json-errors", action="store_true", dest="json_errors")
    p.add_argument("--config", default=None, help="key=value config file")


def _algo_flags(p):
    p.add_argument("--algo", default=None,
                   choices=tuple(ALGO_TABLE), help="named algorithm")
    p.add_argument("--pipeline", default=None,
                   help="explicit recombination, e.g. cluster=sl,loss=fce")
    p.add_argument("--m", type=int, default=2, help="embedding dimension")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--policy", choices=("strict", "cap", "drop"), default="cap")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("classical", "random"), default="classical")


def make_parser() -> CliParser:
    parser = CliParser(prog="coverembed", description=__doc__)
    parser.add_argument("--version", action="version",
                        version=f"coverembed {__version__} build {build_hash()}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("embed", help="embed a space with a named or recombined pipeline")
    _algo_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--trace-out", default=None)
    _common_io(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("cluster", help="write a hierarchical cover as JSON")
    p.add_argument("--functor", required=True, choices=("sl", "ml", "lk", "vlk", "iso", "fuzzy"))
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--policy", choices=("strict", "cap"), default="strict")
    p.add_argument("--out", required=True)
    _common_io(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("interleave", help="interleaving distance of two cover JSONs")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", default=None)
    _common_io(p, infile=False)
    p.set_defaults(func=cmd_interleave)

    p = sub.add_parser("stability", help="interleaving + loss-transfer bounds for two spaces")
    _algo_flags(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--input-kind", choices=("dist", "points", "seqs"), default="dist")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--json-errors", action="store_true", dest="json_errors")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("bench-dna", help="sequence recombination benchmark")
    p.add_argument("--n", type=int, default=100, help="number of mutation lists")
    p.add_argument("--m-steps", type=int, default=10, help="sequences per list")
    p.add_argument("--len", dest="length", type=int, default=1000)
    p.add_argument("--subs", type=int, default=None, help="substitutions per step")
    p.add_argument("--dim", default="2,5")
    p.add_argument("--algos", default="mmds,sls")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--out", required=True)
    p.add_argument("--embeddings-out", default=None,
                   help="prefix for per-sequence embedding CSVs (first repetition)")
    p.add_argument("--verbose", action="store_true")
    _common_io(p, infile=False)
    p.set_defaults(func=cmd_bench_dna)

    p = sub.add_parser("flatten-check", help="quadrature-vs-target report for one pair")
    p.add_argument("--pair", type=int, nargs=2, default=(0, 1))
    p.add_argument("--a-min", type=float, default=None)
    p.add_argument("--rel-tol", type=float, default=1e-8)
    p.add_argument("--out", default=None)
    _common_io(p)
    p.set_defaults(func=cmd_flatten_check)

    p = sub.add_parser("rerun", help="re-execute a run from its manifest")
    p.add_argument("manifest_path")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_rerun)

    return parser


def _apply_config_file(args, parser_actions):
    if not getattr(args, "config", None):
        return args
    overrides = {}
    with open(args.config, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"config line without '=': {line!r}")
            key, value = line.split("=", 1)
            overrides[key.strip().replace("-", "_")] = value.strip()
    for action in parser_actions:
        if action.dest in overrides and getattr(args, action.dest) == action.default:
            raw = overrides[action.dest]
            caster = action.type or str
            setattr(args, action.dest, caster(raw))
    return args


def dispatch(argv) -> int:
    """Parse and execute; exit codes: 0 ok, 1 validation error, 2 numerical failure."""
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            for action in parser._subparsers._group_actions:
                sub_parser = action.choices[args.subcommand]
                args = _apply_config_file(args, sub_parser._actions)
        return args.func(args)
    except ValidationError as exc:
        _report_error("validation", exc, argv)
        return 1
    except FileNotFoundError as exc:
        _report_error("validation", exc, argv)
        return 1
    except NumericalError as exc:
        _report_error("numerical", exc, argv)
        return 2


def _report_error(kind, exc, argv):
    if "--json-errors" in argv:
        import json

        print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    else:
        print(f"coverembed: {kind} error: {exc}", file=sys.stderr)


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
