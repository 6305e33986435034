"""Command-line interface: optimize, score, treecmp and bench subcommands."""

from __future__ import annotations

import argparse
import random
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import engine, fileio, msa
from . import phylo
from .benchmarks import Zdt1Problem, hypervolume_2d
from .errors import ConfigError, DataError, MoealignError


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def _csv(values) -> str:
    return ",".join(_fmt(v) for v in values)


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

_OPTIMIZE_KEYS = (
    "sequences",
    "weights",
    "gen_weights",
    "generations",
    "k",
    "budget",
    "seed",
    "objectives",
    "matrix",
    "seed_alignments",
    "no_adf",
    "replacement_cap",
    "effort_floor",
    "tree_every_gen",
    "threads",
    "out",
)


def _resolve_optimize_settings(args) -> dict:
    """Merge explicit flags over manifest values, then apply defaults."""
    raw: dict[str, str | None] = {key: getattr(args, key) for key in _OPTIMIZE_KEYS}
    if args.manifest:
        manifest_path = Path(args.manifest)
        if not manifest_path.is_file():
            raise ConfigError(f"manifest not found: {manifest_path}")
        stored = fileio.parse_manifest(manifest_path.read_text())
        for key in _OPTIMIZE_KEYS:
            if raw[key] is None and key in stored:
                raw[key] = stored[key]

    def as_int(key, default=None):
        value = raw[key]
        if value is None:
            return default
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"--{key.replace('_', '-')} expects an integer, got {value!r}")

    def as_bool(key) -> bool:
        value = raw[key]
        if value is None:
            return False
        if isinstance(value, bool):
            return value
        return value not in ("0", "false", "False", "")

    settings = {
        "sequences": raw["sequences"],
        "weights": raw["weights"],
        "gen_weights": raw["gen_weights"],
        "generations": as_int("generations", 10),
        "k": as_int("k"),
        "budget": as_int("budget"),
        "seed": as_int("seed", 0),
        "objectives": raw["objectives"] or "simg,simng,sop,gap",
        "matrix": raw["matrix"],
        "seed_alignments": raw["seed_alignments"],
        "no_adf": as_bool("no_adf"),
        "replacement_cap": as_int("replacement_cap", 2),
        "effort_floor": as_int("effort_floor", 1),
        "tree_every_gen": as_bool("tree_every_gen"),
        "threads": as_int("threads", 1),
        "out": raw["out"],
    }
    if not settings["sequences"]:
        raise ConfigError("--sequences is required")
    if not settings["out"]:
        raise ConfigError("--out is required")
    if bool(settings["weights"]) == bool(settings["gen_weights"]):
        raise ConfigError("exactly one of --weights or --gen-weights is required")
    if settings["threads"] < 1:
        raise ConfigError("--threads must be >= 1")
    return settings


def _settings_to_manifest(settings: dict) -> dict[str, str]:
    out = {}
    for key, value in settings.items():
        if value is None:
            continue
        if isinstance(value, bool):
            out[key] = "1" if value else "0"
        else:
            out[key] = str(value)
    return out


def _parse_objectives(spec: str) -> tuple[str, ...]:
    names = tuple(n.strip() for n in spec.split(",") if n.strip())
    if not names:
        raise ConfigError("empty objective list")
    unknown = [n for n in names if n not in msa.OBJECTIVE_NAMES]
    if unknown:
        raise ConfigError(
            f"unknown objective(s): {', '.join(unknown)}; "
            f"valid names: {', '.join(msa.OBJECTIVE_NAMES)}"
        )
    return names


def _load_raw_sequences(path: Path) -> list[msa.RawSequence]:
    parsed = fileio.parse_fasta(path.read_text())
    if isinstance(parsed, msa.AlignedMatrix):
        return parsed.sequences()
    return parsed


def _load_matrix(path_str: str | None) -> msa.SubstitutionMatrix:
    if not path_str:
        return msa.blosum62()
    path = Path(path_str)
    if not path.is_file():
        raise ConfigError(f"substitution matrix not found: {path}")
    return fileio.parse_substitution_matrix(path.read_text())


def _load_seed_alignments(
    directory: Path, sequences: list[msa.RawSequence], count: int
) -> list[msa.AlignedMatrix]:
    if not directory.is_dir():
        raise ConfigError(f"seed alignment directory not found: {directory}")
    files = sorted(p for p in directory.iterdir() if p.is_file())
    if len(files) != count:
        raise ConfigError(
            f"seed alignment directory holds {len(files)} files, need exactly {count}"
        )
    expected = {s.id: s.residues for s in sequences}
    order = [s.id for s in sequences]
    seeds = []
    for path in files:
        aln = fileio.as_alignment(fileio.parse_fasta(path.read_text()))
        got = aln.degapped()
        if got != expected:
            raise DataError(f"seed alignment {path.name} does not match the input sequences")
        by_id = dict(zip(aln.ids, aln.rows))
        aln = msa.AlignedMatrix(tuple(order), tuple(by_id[sid] for sid in order))
        seeds.append(msa.normalize_alignment(aln, expected))
    return seeds


def _make_evaluator(problem, threads: int):
    if threads <= 1:
        return None

    def evaluator(genotypes):
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(problem.evaluate, genotypes))

    return evaluator


def _infer_tree(aln: msa.AlignedMatrix) -> phylo.PhyloTree:
    return phylo.neighbor_joining(phylo.pairwise_distance(aln))


def _default_k(n: int) -> int:
    # 40% of N, capped at the classic neighborhood size of 20. Small
    # neighborhoods starve distant subproblems when effort concentrates.
    return max(2, min(n, 20, round(0.4 * n)))


def cmd_optimize(args) -> int:
    settings = _resolve_optimize_settings(args)

    seq_path = Path(settings["sequences"])
    if not seq_path.is_file():
        raise ConfigError(f"sequence file not found: {seq_path}")
    sequences = _load_raw_sequences(seq_path)
    if len(sequences) < 3:
        raise ConfigError("optimize needs at least 3 sequences (tree output)")

    objectives = _parse_objectives(settings["objectives"])
    matrix = _load_matrix(settings["matrix"])
    problem = msa.MsaProblem(sequences, objectives, matrix)
    m = problem.objective_count()

    if settings["weights"]:
        weights_path = Path(settings["weights"])
        if not weights_path.is_file():
            raise ConfigError(f"weight file not found: {weights_path}")
        weights = fileio.parse_weights(weights_path.read_text(), m)
    else:
        try:
            gw_m, gw_count = (int(x) for x in settings["gen_weights"].split(","))
        except ValueError:
            raise ConfigError("--gen-weights expects M,COUNT") from None
        if gw_m != m:
            raise ConfigError(
                f"--gen-weights dimension {gw_m} does not match {m} selected objectives"
            )
        weights = fileio.generate_weights(gw_m, gw_count)
    n = len(weights)

    k = settings["k"] if settings["k"] is not None else _default_k(n)
    budget = settings["budget"] if settings["budget"] is not None else 2 * n
    cap = settings["replacement_cap"]
    config = engine.RunConfig(
        generations=settings["generations"],
        neighborhood_k=k,
        per_generation_budget=budget,
        replacement_cap=None if cap == 0 else cap,
        rng_seed=settings["seed"],
        effort_floor=settings["effort_floor"],
        adaptive_effort=not settings["no_adf"],
    )

    if settings["seed_alignments"]:
        seeds = _load_seed_alignments(Path(settings["seed_alignments"]), sequences, n)
    else:
        seeds = msa.seed_population(sequences, n, random.Random(settings["seed"]), matrix)

    # Record resolved values so a rerun from the manifest reproduces the run.
    settings["k"] = k
    settings["budget"] = budget
    settings["generations"] = config.generations

    out_dir = Path(settings["out"])
    out_dir.mkdir(parents=True, exist_ok=True)

    on_generation = None
    if settings["tree_every_gen"]:

        def on_generation(state: engine.EngineState) -> None:
            gen_dir = out_dir / "trees_by_gen" / f"gen_{state.generation:03d}"
            gen_dir.mkdir(parents=True, exist_ok=True)
            for sp in state.subproblems:
                tree = _infer_tree(sp.incumbent.genotype)
                (gen_dir / f"tree_{sp.index:03d}.nwk").write_text(fileio.write_newick(tree))

    evaluator = _make_evaluator(problem, settings["threads"])
    result = engine.run(config, problem, weights, seeds, evaluator, on_generation)

    (out_dir / "manifest.txt").write_text(fileio.write_manifest(_settings_to_manifest(settings)))
    (out_dir / "engine_state.txt").write_text(engine.dump_snapshot(result.state))

    pareto_ids = {id(ind) for ind in result.pareto}
    table = [
        "# objective columns are maximization-oriented scores; "
        "chebyshev is the engine scalar under the final ideal point",
        "# ideal\t" + _csv(result.state.ideal),
        "\t".join(("index", "weights", *objectives, "chebyshev", "pareto")),
    ]
    for sp in result.state.subproblems:
        aln = sp.incumbent.genotype
        (out_dir / f"aln_{sp.index:03d}.fasta").write_text(fileio.write_fasta(aln))
        (out_dir / f"tree_{sp.index:03d}.nwk").write_text(
            fileio.write_newick(_infer_tree(aln))
        )
        scalar = engine.chebyshev(sp.incumbent.objectives, sp.weight, result.state.ideal)
        row = [
            str(sp.index),
            _csv(sp.weight),
            *(_fmt(-v) for v in sp.incumbent.objectives),
            _fmt(scalar),
            "1" if id(sp.incumbent) in pareto_ids else "0",
        ]
        table.append("\t".join(row))
    (out_dir / "objectives.tsv").write_text("\n".join(table) + "\n")

    print(f"wrote {n} alignment/tree pairs to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------


def cmd_score(args) -> int:
    objectives = _parse_objectives(args.objectives)
    path = Path(args.alignment)
    if not path.is_file():
        raise ConfigError(f"alignment file not found: {path}")
    aln = fileio.as_alignment(fileio.parse_fasta(path.read_text()))
    aln = msa.normalize_alignment(aln)
    matrix = _load_matrix(args.matrix)
    problem = msa.MsaProblem(aln.sequences(), objectives, matrix)
    scores = problem.maximization_scores(aln)
    print("objective\tscore")
    for name in objectives:
        print(f"{name}\t{_fmt(scores[name])}")
    print("# minimization_vector\t" + _csv(problem.evaluate(aln)))
    return 0


# ---------------------------------------------------------------------------
# treecmp
# ---------------------------------------------------------------------------


def _load_trees(path: Path) -> list[tuple[str, phylo.PhyloTree]]:
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.is_file())
        if not files:
            raise ConfigError(f"no tree files in directory {path}")
        return [(p.name, fileio.parse_newick(p.read_text())) for p in files]
    if path.is_file():
        return [(path.name, fileio.parse_newick(path.read_text()))]
    raise ConfigError(f"tree path not found: {path}")


def cmd_treecmp(args) -> int:
    true_path = Path(args.true)
    if not true_path.is_file():
        raise ConfigError(f"true tree not found: {true_path}")
    true_tree = fileio.parse_newick(true_path.read_text())
    est = _load_trees(Path(args.est))

    if args.paired:
        other = _load_trees(Path(args.paired))
        if len(other) != len(est):
            raise ConfigError(
                f"paired directories differ in size: {len(est)} vs {len(other)}"
            )
        print("index\ttree_a\tfn_a\ttree_b\tfn_b")
        a_better = b_better = 0
        for i, ((name_a, tree_a), (name_b, tree_b)) in enumerate(zip(est, other)):
            fn_a = phylo.fn_rate(true_tree, tree_a)
            fn_b = phylo.fn_rate(true_tree, tree_b)
            if fn_a < fn_b:
                a_better += 1
            elif fn_b < fn_a:
                b_better += 1
            print(f"{i}\t{name_a}\t{_fmt(fn_a)}\t{name_b}\t{_fmt(fn_b)}")
        print(f"# count_a_better\t{a_better}")
        print(f"# count_b_better\t{b_better}")
        return 0

    rates = []
    print("tree\tfn_rate")
    for name, tree in est:
        rate = phylo.fn_rate(true_tree, tree)
        rates.append(rate)
        print(f"{name}\t{_fmt(rate)}")
    print(f"# min\t{_fmt(min(rates))}")
    print(f"# mean\t{_fmt(sum(rates) / len(rates))}")
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def cmd_bench(args) -> int:
    if args.problem != "zdt1":
        raise ConfigError(f"unknown benchmark problem {args.problem!r}")
    if args.replicates < 1:
        raise ConfigError("--replicates must be >= 1")
    n = args.subproblems
    problem = Zdt1Problem(args.vars)
    weights = fileio.generate_weights(2, n)
    k = args.k if args.k is not None else _default_k(n)
    budget = args.budget if args.budget is not None else 2 * n

    fronts: dict[tuple[int, bool], list[tuple[float, ...]]] = {}
    for rep in range(args.replicates):
        rep_seed = args.seed + rep
        for adaptive in (True, False):
            config = engine.RunConfig(
                generations=args.generations,
                neighborhood_k=k,
                per_generation_budget=budget,
                replacement_cap=2,
                rng_seed=rep_seed,
                adaptive_effort=adaptive,
            )
            seeds = problem.seed(n, random.Random(rep_seed))
            result = engine.run(config, problem, weights, seeds)
            fronts[(rep, adaptive)] = [ind.objectives for ind in result.pareto]

    f2_max = max(f[1] for front in fronts.values() for f in front)
    ref = (1.1, 1.1 * f2_max)
    print(f"# problem\tzdt1\tvars\t{args.vars}\tsubproblems\t{n}\tbudget\t{budget}")
    print(f"# reference_point\t{_fmt(ref[0])}\t{_fmt(ref[1])}")
    print("replicate\tseed\thv_adaptive\thv_uniform\tdiff")
    hv_adaptive = []
    hv_uniform = []
    for rep in range(args.replicates):
        hv_a = hypervolume_2d(fronts[(rep, True)], ref)
        hv_u = hypervolume_2d(fronts[(rep, False)], ref)
        hv_adaptive.append(hv_a)
        hv_uniform.append(hv_u)
        print(f"{rep}\t{args.seed + rep}\t{_fmt(hv_a)}\t{_fmt(hv_u)}\t{_fmt(hv_a - hv_u)}")
    print(f"# median_adaptive\t{_fmt(statistics.median(hv_adaptive))}")
    print(f"# median_uniform\t{_fmt(statistics.median(hv_uniform))}")
    diffs = [a - u for a, u in zip(hv_adaptive, hv_uniform)]
    print(f"# median_diff\t{_fmt(statistics.median(diffs))}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moealign",
        description=(
            "Decomposition-based multi-objective sequence alignment with "
            "variance-adaptive search effort."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    opt = sub.add_parser("optimize", help="evolve alignment/tree pairs from sequences")
    opt.add_argument("--sequences", help="input FASTA of unaligned sequences")
    opt.add_argument("--weights", help="weight vector table file")
    opt.add_argument("--gen-weights", dest="gen_weights", metavar="M,COUNT",
                     help="generate COUNT weight vectors of dimension M")
    opt.add_argument("--generations", type=int, default=None)
    opt.add_argument("--k", type=int, default=None, help="neighborhood size")
    opt.add_argument("--budget", type=int, default=None,
                     help="offspring per generation (default 2N)")
    opt.add_argument("--seed", type=int, default=None, help="run seed")
    opt.add_argument("--objectives", default=None,
                     help="comma list from: simg,simng,sop,gap,parsimony")
    opt.add_argument("--matrix", default=None, help="substitution matrix file")
    opt.add_argument("--seed-alignments", dest="seed_alignments", default=None,
                     help="directory of seed alignment FASTA files (bypasses the generator)")
    opt.add_argument("--no-adf", dest="no_adf", action="store_true", default=None,
                     help="disable variance-adaptive effort (uniform ablation arm)")
    opt.add_argument("--replacement-cap", dest="replacement_cap", type=int, default=None,
                     help="max neighbors replaced per offspring, 0 = unbounded (default 2)")
    opt.add_argument("--effort-floor", dest="effort_floor", type=int, default=None)
    opt.add_argument("--tree-every-gen", dest="tree_every_gen", action="store_true",
                     default=None, help="write per-generation tree snapshots")
    opt.add_argument("--threads", type=int, default=None,
                     help="evaluation threads; 1 is the reproducibility mode")
    opt.add_argument("--manifest", default=None, help="replay flags from a manifest file")
    opt.add_argument("--out", default=None, help="output directory")
    opt.set_defaults(func=cmd_optimize)

    score = sub.add_parser("score", help="score one alignment")
    score.add_argument("--alignment", required=True)
    score.add_argument("--objectives", default="simg,simng,sop,gap")
    score.add_argument("--matrix", default=None)
    score.set_defaults(func=cmd_score)

    tc = sub.add_parser("treecmp", help="false-negative rates against a true tree")
    tc.add_argument("--true", required=True, help="true tree (Newick)")
    tc.add_argument("--est", required=True, help="estimated tree file or directory")
    tc.add_argument("--paired", default=None,
                    help="second directory; counts per-pair strictly-better rows")
    tc.set_defaults(func=cmd_treecmp)

    bench = sub.add_parser("bench", help="paired adaptive-vs-uniform effort ablation")
    bench.add_argument("--problem", default="zdt1")
    bench.add_argument("--vars", type=int, default=10)
    bench.add_argument("--subproblems", type=int, default=20)
    bench.add_argument("--generations", type=int, default=100)
    bench.add_argument("--replicates", type=int, default=10)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--budget", type=int, default=None)
    bench.add_argument("--k", type=int, default=None)
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MoealignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
