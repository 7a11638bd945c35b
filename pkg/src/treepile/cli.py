"""Command-line front end.

Every subcommand reads a tree file (``--tree``), writes its result to
stdout or ``--out FILE`` and, when writing a file, drops a
``FILE.manifest.json`` sidecar recording the inputs.  Exit codes: 2 for
invalid input, 3 when a size cap is hit, 4 when a model hypothesis does
not hold for the given tree.  CSV output uses ";" as the delimiter so
configurations such as "0,1,1" need no quoting.
"""

import argparse
import csv
import hashlib
import io
import json
import sys
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from . import __version__, chain, convergence, monoid, polyalg
from .arborescence import format_rational, load_tree, validate
from .configuration import StateSpace, format_config, parse_config
from .errors import TreepileError, ValidationError
from .operators import KINDS, LANDSLIDE, SYMBOL, TRICKLE, apply

_KIND_ALIASES = {
    "source": "source", "sigma": "source", SYMBOL["source"]: "source",
    "trickle": "trickle", "theta": "trickle", SYMBOL["trickle"]: "trickle",
    "landslide": "landslide", "tau": "landslide", SYMBOL["landslide"]: "landslide",
}


# -- helpers -------------------------------------------------------------------


def _tree(args):
    if not args.tree:
        raise ValidationError("--tree FILE is required for this command")
    return load_tree(args.tree, extended=args.extended)


def _space(args, tree):
    return StateSpace(tree, max_states=args.max_states)


def _fmt(args, default, allowed):
    fmt = args.format or default
    if fmt not in allowed:
        raise ValidationError(f"{args.command} supports --format {'|'.join(allowed)}, not {fmt}")
    return fmt


def _json(obj):
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _csv(rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=";", lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _checked_tree(args):
    tree = _tree(args)
    problems = validate(tree, strict=True)
    if problems:
        raise ValidationError("; ".join(problems))
    return tree


def _distribution_doc(space, dist):
    return {
        "states": [format_config(t) for t in space],
        "probabilities": [format_rational(p) for p in dist],
        "Z": format_rational(Fraction(chain.common_denominator(dist))),
    }


# -- subcommands -----------------------------------------------------------------


def cmd_validate(args):
    tree = _tree(args)
    problems = validate(tree, strict=True)
    if problems:
        raise ValidationError("; ".join(problems))
    fmt = _fmt(args, "json", ("json", "csv"))
    info = {"valid": True, "vertices": len(tree.vertices), "states": StateSpace(tree).size}
    if fmt == "csv":
        return _csv([[info["valid"], info["vertices"], info["states"]]], ["valid", "vertices", "states"])
    return _json(info)


def cmd_states(args):
    space = _space(args, _tree(args))
    fmt = _fmt(args, "csv", ("json", "csv"))
    if fmt == "json":
        return _json([format_config(t) for t in space])
    return _csv([[i, format_config(t)] for i, t in enumerate(space)], ["rank", "config"])


def _parse_op(text):
    kind, _, vertex = text.partition(":")
    kind = _KIND_ALIASES.get(kind.strip())
    if kind is None or not vertex:
        raise ValidationError(f"operator {text!r} must look like KIND:VERTEX with KIND in {KINDS}")
    return kind, vertex.strip()


def cmd_apply(args):
    tree = _tree(args)
    space = _space(args, tree)
    t = parse_config(args.config, space)
    trace = [format_config(t)]
    for op in args.op:
        kind, v = _parse_op(op)
        tree._check(v)
        t = apply(tree, kind, v, t)
        trace.append(format_config(t))
    fmt = _fmt(args, "json", ("json", "csv"))
    if fmt == "csv":
        ops = ["start"] + args.op
        return _csv(list(zip(ops, trace)), ["operator", "config"])
    return _json({"operators": args.op, "trace": trace, "result": trace[-1]})


def cmd_matrix(args):
    tree = _checked_tree(args)
    space = _space(args, tree)
    m = chain.build_transition(tree, args.model, space)
    fmt = _fmt(args, "json", ("json", "csv"))
    states = [format_config(t) for t in space]
    if fmt == "csv":
        dense = m.to_json()
        return _csv([[s] + row for s, row in zip(states, dense)], ["to\\from"] + states)
    return _json(m.to_json())


def _stationary(args, tree, space):
    if args.method == "product":
        if args.model == TRICKLE:
            return chain.stationary_product_trickle(tree, space)
        return chain.stationary_product_landslide(tree, space)
    m = chain.build_transition(tree, args.model, space)
    return chain.stationary_exact(m, method=args.solver)


def cmd_stationary(args):
    tree = _checked_tree(args)
    space = _space(args, tree)
    dist = _stationary(args, tree, space)
    fmt = _fmt(args, "json", ("json", "csv"))
    if fmt == "csv":
        return _csv([[format_config(t), format_rational(p)] for t, p in zip(space, dist)],
                    ["config", "probability"])
    doc = {"model": args.model, "method": args.method}
    doc.update(_distribution_doc(space, dist))
    return _json(doc)


def cmd_partition(args):
    tree = _checked_tree(args)
    space = _space(args, tree)
    if args.model == TRICKLE:
        formula = chain.partition_function_trickle(tree)
        product = chain.stationary_product_trickle(tree, space)
    else:
        formula = chain.partition_function_landslide(tree)
        product = chain.stationary_product_landslide(tree, space)
    exact = chain.stationary_exact(chain.build_transition(tree, args.model, space))
    doc = {
        "model": args.model,
        "product_formula": format_rational(formula),
        "common_denominator": str(chain.common_denominator(exact)),
        "product_form_matches": product == exact,
    }
    fmt = _fmt(args, "json", ("json", "csv"))
    if fmt == "csv":
        return _csv([list(doc.values())], list(doc))
    return _json(doc)


def cmd_charpoly(args):
    tree = _checked_tree(args)
    if args.method == "formula":
        poly = polyalg.char_poly_product_formula(tree)
    else:
        space = _space(args, tree)
        poly = polyalg.char_poly_exact(chain.build_transition(tree, args.model, space))
    fmt = _fmt(args, "json", ("json", "csv"))
    if fmt == "csv":
        return _csv([[i, format_rational(c)] for i, c in enumerate(poly.c)], ["degree", "coefficient"])
    return _json({"model": args.model, "method": args.method, "charpoly": poly.to_json()})


def _group_numeric(values, tol=1e-6):
    """Cluster numerically equal eigenvalues (repeated roots spread out slightly)."""
    groups = []
    for v in sorted(values, key=lambda z: (round(z.real, 6), round(z.imag, 6))):
        if groups and abs(groups[-1][0] - v) < tol:
            groups[-1][1] += 1
        else:
            groups.append([v, 1])
    return groups


def cmd_spectrum(args):
    tree = _checked_tree(args)
    space = _space(args, tree)
    fmt = _fmt(args, "json", ("json", "csv"))
    if args.method == "numeric":
        m = chain.build_transition(tree, args.model, space)
        vals = np.linalg.eigvals(m.to_float())
        rows = [[repr(float(v.real)), repr(float(v.imag)), k] for v, k in _group_numeric(vals)]
        if fmt == "csv":
            return _csv(rows, ["real", "imag", "multiplicity"])
        return _json({"method": "numeric", "eigenvalues": [
            {"real": float(r[0]), "imag": float(r[1]), "multiplicity": r[2]} for r in rows]})
    if args.model != LANDSLIDE:
        table = monoid.generate_monoid(space, "N", cap=args.max_monoid)
    else:
        table = monoid.generate_monoid(space, "M", cap=args.max_monoid)
    probs = monoid.generator_probabilities(table, tree)
    pairs = monoid.spectrum_multiset(monoid.spectrum_via_monoid(table, probs))
    if fmt == "csv":
        return _csv([[format_rational(lam), m] for lam, m in pairs], ["eigenvalue", "multiplicity"])
    return _json({"method": "monoid", "eigenvalues": [
        {"value": format_rational(lam), "multiplicity": m} for lam, m in pairs]})


def cmd_monoid(args):
    tree = _tree(args)
    space = _space(args, tree)
    table = monoid.generate_monoid(space, args.set, cap=args.max_monoid)
    ok, cert = monoid.is_r_trivial(table)
    fmt = _fmt(args, "json", ("json", "csv"))
    if fmt == "csv":
        rows = []
        for i in range(table.size):
            const = format_config(space.unrank(int(table.images[i][0]))) if table.is_constant(i) else ""
            rows.append([i, table.word(i), const])
        return _csv(rows, ["index", "word", "constant"])
    doc = monoid.monoid_summary(table)
    doc["r_trivial"] = ok
    doc["certificate"] = None if cert is None else list(cert)
    if table.size <= monoid.ORACLE_MAX:
        doc["r_trivial_direct"] = monoid.is_r_trivial_direct(table)
    if ok:
        doc["lattice"] = monoid.idempotent_lattice(table).to_json()
    return _json(doc)


def cmd_cayley(args):
    tree = _tree(args)
    space = _space(args, tree)
    table = monoid.generate_monoid(space, args.set, cap=args.max_monoid)
    fmt = _fmt(args, "dot", ("dot", "csv", "json"))
    if fmt == "dot":
        return monoid.export_cayley(table, args.side)
    edges = monoid.cayley_edges(table, args.side)
    rows = [[table.word(i), table.names[g], table.word(j)] for i, j, g in edges]
    if fmt == "csv":
        return _csv(rows, ["source", "generator", "target"])
    return _json({"side": args.side, "edges": rows})


def _ks(args):
    if args.ks:
        return [int(k) for k in args.ks.split(",")]
    return list(range(args.k_min, args.k_max + 1))


def cmd_converge(args):
    tree = _checked_tree(args)
    space = _space(args, tree)
    initial = parse_config(args.initial, space) if args.initial else None
    report = convergence.convergence_report(
        tree, args.model, _ks(args), initial=initial, trials=args.trials, seed=args.seed,
        exact=not args.no_exact, space=space,
    )
    _fmt(args, "csv", ("csv",))
    return report.to_csv()


def cmd_upset_stat(args):
    tree = _checked_tree(args)
    space = _space(args, tree)
    table = monoid.generate_monoid(space, "chain", cap=args.max_monoid)
    u, masks = convergence.upset_statistic(table)
    fmt = _fmt(args, "csv", ("csv", "json"))
    if fmt == "json":
        doc = convergence.check_upset_claims(table, pairs=args.pairs, seed=args.seed)
        doc["elements"] = table.size
        doc["histogram"] = {str(k): int(v) for k, v in enumerate(np.bincount(u))}
        return _json(doc)
    rows = [[i, table.word(i), " ".join(space.vertices_of(int(masks[i]))), int(u[i])]
            for i in range(table.size)]
    return _csv(rows, ["index", "word", "upset", "u"])


def cmd_conjecture(args):
    thresholds = [int(t) for t in args.thresholds.split(",")]
    report = polyalg.verify_conjecture_1d(thresholds, engine=args.engine, lines=args.lines, seed=args.seed)
    _fmt(args, "json", ("json",))
    return _json(polyalg.report_to_json(report))


# -- parser ----------------------------------------------------------------------


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tree", help="tree JSON file")
    p.add_argument("--model", choices=(TRICKLE, LANDSLIDE), default=LANDSLIDE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the result here (plus FILE.manifest.json)")
    p.add_argument("--format", choices=("csv", "json", "dot"))
    p.add_argument("--max-states", type=int, default=None)
    p.add_argument("--max-monoid", type=int, default=monoid.DEFAULT_MONOID_CAP)
    p.add_argument("--extended", action="store_true", help="allow sources at interior vertices")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="treepile", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"treepile {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check a tree file")
    add("states", cmd_states, "list configurations in rank order")
    p = add("apply", cmd_apply, "apply operators to a configuration")
    p.add_argument("--config", required=True, help="comma-separated grain counts")
    p.add_argument("--op", action="append", default=[], help="KIND:VERTEX, applied in order")
    add("matrix", cmd_matrix, "exact transition matrix")
    p = add("stationary", cmd_stationary, "stationary distribution")
    p.add_argument("--method", choices=("exact", "product"), default="exact")
    p.add_argument("--solver", choices=("auto", "bareiss", "lifting"), default="auto")
    add("partition", cmd_partition, "partition function")
    p = add("charpoly", cmd_charpoly, "characteristic polynomial")
    p.add_argument("--method", choices=("exact", "formula"), default="exact")
    p = add("spectrum", cmd_spectrum, "eigenvalues with multiplicities")
    p.add_argument("--method", choices=("monoid", "numeric"), default="monoid")
    p = add("monoid", cmd_monoid, "generate a transformation monoid")
    p.add_argument("--set", choices=monoid.GENERATOR_SETS, default="M")
    p = add("cayley", cmd_cayley, "Cayley graph of a monoid")
    p.add_argument("--side", choices=("left", "right"), default="right")
    p.add_argument("--set", choices=monoid.GENERATOR_SETS, default="chain")
    p = add("converge", cmd_converge, "distance to stationarity per step")
    p.add_argument("--initial", help="starting configuration (default: worst case)")
    p.add_argument("--ks", help="comma-separated step counts")
    p.add_argument("--k-min", type=int, default=0)
    p.add_argument("--k-max", type=int, default=50)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--no-exact", action="store_true")
    p = add("upset-stat", cmd_upset_stat, "deterministic upset statistic on the chain monoid")
    p.add_argument("--pairs", type=int, default=10_000)
    p = add("conjecture", cmd_conjecture, "check the 1-D landslide partition function")
    p.add_argument("--thresholds", required=True, help="comma-separated, e.g. 2,1,2")
    p.add_argument("--engine", choices=("auto", "symbolic", "lines"), default="auto")
    p.add_argument("--lines", type=int, default=2)
    return parser


def manifest(args, argv):
    digest = None
    if getattr(args, "tree", None):
        with open(args.tree, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    return {
        "command": args.command,
        "argv": list(argv),
        "flags": flags,
        "input_sha256": digest,
        "seed": args.seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        text = args.func(args)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
            with open(args.out + ".manifest.json", "w", encoding="utf-8") as fh:
                fh.write(_json(manifest(args, argv)))
        else:
            sys.stdout.write(text)
    except TreepileError as exc:
        print(f"treepile {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"treepile {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
