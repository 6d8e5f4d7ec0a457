"""Command-line shell: gen, genus, cutgraph, partitions, tree, planarize, eval.

Exit status: 0 on success, 1 on input errors (including usage), 2 on internal
assertion failures.
"""

from __future__ import annotations

import argparse
import sys

from .cut_graph import decompose_into_paths, default_root, greedy_system_of_loops
from .errors import InputError, InternalError, StageError
from .harness import (
    FAMILIES,
    GeneratorSpec,
    empirical_distortion,
    generate,
    report_to_csv,
    tree_path_system,
)
from .partitions import build_hierarchy, rescale_min_distance, subdivide_long_path_edges
from .planarization import planarize
from .surface_map import emit_graph, euler_genus, format_length, load_graph
from .tree_embedding import DEFAULT_EDGE_SCALE, build_tree, prepare_tree_sampler
from .partitions import PathMetrics


class _UsageError(Exception):
    def __init__(self, parser, message):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(self, message)


def _build_parser() -> _Parser:
    p = _Parser(prog="planarembed", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("--family", required=True, choices=FAMILIES)
    g.add_argument("--rows", type=int, default=0)
    g.add_argument("--cols", type=int, default=0)
    g.add_argument("--genus", type=int, default=0)
    g.add_argument("--arms", type=int, default=0)
    g.add_argument("--arm-length", type=int, default=0)
    g.add_argument("--out", default=None)

    e = sub.add_parser("genus", help="print the genus of a drawing")
    e.add_argument("file")

    c = sub.add_parser("cutgraph", help="greedy cut graph and path system")
    c.add_argument("file")
    c.add_argument("--root", default=None)
    c.add_argument("--emit-paths", default=None)

    q = sub.add_parser("partitions", help="alternating partition hierarchy")
    q.add_argument("file")
    q.add_argument("--root", default=None)
    q.add_argument("--seed", type=int, required=True)

    t = sub.add_parser("tree", help="sample a random tree embedding")
    t.add_argument("file")
    t.add_argument("--root", default=None)
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--safe-lambda", type=float, default=DEFAULT_EDGE_SCALE)

    z = sub.add_parser("planarize", help="sample a random planar graph")
    z.add_argument("file")
    z.add_argument("--root", default=None)
    z.add_argument("--seed", type=int, required=True)
    z.add_argument("--out", default=None)
    z.add_argument("--safe-lambda", type=float, default=DEFAULT_EDGE_SCALE)

    v = sub.add_parser("eval", help="Monte-Carlo distortion estimate (CSV)")
    v.add_argument("file")
    v.add_argument("--mode", choices=("tree", "planar"), default="planar")
    v.add_argument("--samples", type=int, required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--pairs", default="auto")
    v.add_argument("--root", default=None)
    v.add_argument("--csv", default=None)
    v.add_argument("--plot", default=None)
    v.add_argument("--safe-lambda", type=float, default=DEFAULT_EDGE_SCALE)
    return p


def _write(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_gen(args) -> int:
    spec = GeneratorSpec(
        family=args.family, rows=args.rows, cols=args.cols,
        genus=args.genus, arms=args.arms, arm_length=args.arm_length,
    )
    _write(emit_graph(generate(spec)), args.out)
    return 0


def _cmd_genus(args) -> int:
    print(euler_genus(load_graph(args.file)))
    return 0


def _cmd_cutgraph(args) -> int:
    g = load_graph(args.file)
    r = args.root if args.root is not None else default_root(g)
    cut = greedy_system_of_loops(g, r)
    ps = decompose_into_paths(cut, g, r)
    cert = cut.certificate
    print(f"root {r}")
    print(
        f"certificate V={cert.vertices} E={cert.edges} F={cert.faces} "
        f"genus={cert.ambient_genus} connected={str(cert.connected).lower()} "
        f"passed={str(cert.passed).lower()}"
    )
    for i, loop in enumerate(cut.loops):
        cycle = " ".join(loop.vertex_cycle())
        print(f"loop {i} edge {loop.edge} length {format_length(loop.length)} {cycle}")
    path_lines = [
        f"path {i} " + " ".join(pv) for i, pv in enumerate(ps.paths)
    ]
    for line in path_lines:
        print(line)
    if args.emit_paths:
        _write("\n".join(path_lines) + "\n", args.emit_paths)
    return 0


def _prepared_hierarchy(args):
    g = load_graph(args.file)
    ps = tree_path_system(g, root=args.root)
    g1, factor = rescale_min_distance(g)
    g2, ps2 = subdivide_long_path_edges(g1, ps)
    pm = PathMetrics.compute(g2, ps2)
    return build_hierarchy(pm, seed=args.seed, scale_factor=factor)


def _cmd_partitions(args) -> int:
    h = _prepared_hierarchy(args)
    rr = h.randomness
    sigma = ",".join(str(s + 1) for s in rr.path_order)
    print(
        f"randomness alpha={format_length(rr.band_offset)} "
        f"beta={format_length(rr.radius_scale)} sigma={sigma}"
    )
    for level in range(h.top_level, -1, -1):
        for c in h.levels[level]:
            band = "-" if c.band_index is None else str(c.band_index)
            parent = "-" if c.parent is None else c.parent
            members = " ".join(sorted(c.members))
            print(
                f"cluster {c.level} {c.cid} trunk {c.trunk + 1} band {band} "
                f"parent {parent} members {members}"
            )
    return 0


def _cmd_tree(args) -> int:
    g = load_graph(args.file)
    ps = tree_path_system(g, root=args.root)
    prep = prepare_tree_sampler(g, ps)
    from .tree_embedding import sample_prepared_tree

    tree = sample_prepared_tree(prep, args.seed, edge_scale=args.safe_lambda)
    for nid in sorted(tree.nodes):
        info = tree.nodes[nid]
        print(f"node {nid} kind {info.kind} source {info.source} cluster {info.cluster}")
    for a, b, w in sorted(tree.edges):
        print(f"tedge {a} {b} {format_length(w)}")
    for v in sorted(tree.fmap):
        print(f"map {v} {tree.fmap[v]}")
    return 0


def _cmd_planarize(args) -> int:
    g = load_graph(args.file)
    sample = planarize(g, args.seed, edge_scale=args.safe_lambda, root=args.root)
    prov = sample.provenance
    lines = [emit_graph(sample.planar_out).rstrip("\n")]
    for v in sorted(sample.vmap):
        lines.append(f"map {v} {sample.vmap[v]}")
    lines.append(f"# provenance seed={prov.seed} lambda={format_length(prov.edge_scale)}")
    lines.append(f"# provenance identity={str(prov.identity).lower()}")
    if prov.events:
        for ev in prov.events:
            lines.append(f"# provenance fallback {ev}")
    else:
        lines.append("# provenance fallback none")
    for delta, nclusters, ratio, cuts in prov.kpr_stats:
        lines.append(
            "# provenance kpr "
            f"delta={format_length(delta)} clusters={nclusters} "
            f"weak_diam_ratio={format_length(round(ratio, 6))} cut_edges={cuts}"
        )
    _write("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_eval(args) -> int:
    g = load_graph(args.file)
    pairs = args.pairs if args.pairs in ("auto", "all") else int(args.pairs)
    report = empirical_distortion(
        g, sampler=args.mode, pairs=pairs, n_seeds=args.samples,
        seed0=args.seed, edge_scale=args.safe_lambda, root=args.root,
    )
    _write(report_to_csv(report), args.csv)
    if args.plot:
        from .plotting import plot_report

        plot_report(report, args.plot)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "genus": _cmd_genus,
    "cutgraph": _cmd_cutgraph,
    "partitions": _cmd_partitions,
    "tree": _cmd_tree,
    "planarize": _cmd_planarize,
    "eval": _cmd_eval,
}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as e:
        e.parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 1
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1 if isinstance(e.cause, InputError) else 2
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (InternalError, AssertionError) as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
