"""Command-line front end: normalize, lts, bisim and verify.

Exit codes: 0 success / equivalent / all checks pass, 1 input or build
error, 2 stuck normalization, 3 inequivalent or a failed protocol check.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import protocols
from .bisim import branching_bisim, strong_bisim
from .errors import PqacpError, StuckTerm
from .graph import build_graph, check_measurement_consistency, dumps_json, to_dot
from .quantum import EPS_Q, basis_projector, random_density
from .registry import ActionRegistry
from .rewriter import normalize
from .sos import Configuration, validate_term
from .syntax import parse, to_text

OK, ERROR, STUCK, DIFFERENT = 0, 1, 2, 3
ENV_REGISTRY = "PQACP_REGISTRY"


# ------------------------------------------------------------------ inputs

def _read_term(arg: str, inline: bool):
    if inline:
        src = arg
    elif arg == "-":
        src = sys.stdin.read()
    else:
        try:
            src = Path(arg).read_text()
        except OSError as e:
            raise PqacpError(f"cannot read {arg}: {e.strerror}") from None
    return parse(src)


def _registry(args) -> ActionRegistry:
    path = args.registry or os.environ.get(ENV_REGISTRY)
    return ActionRegistry.load(path) if path else ActionRegistry()


def _graph(term, reg, args):
    validate_term(term, reg)
    return build_graph(Configuration(term, reg.initial_state()), args.depth, reg, tol=args.tol)


def _write(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_normalize(args) -> int:
    reg = _registry(args) if (args.registry or os.environ.get(ENV_REGISTRY)) else None
    term = _read_term(args.file, args.expr)
    try:
        nf, trace = normalize(term, reg)
    except StuckTerm as e:
        print(f"stuck: {e}", file=sys.stderr)
        return STUCK
    if args.format == "json":
        _write(json.dumps({"normal_form": to_text(nf), "trace": trace.lines(), "seed": args.seed},
                          indent=1, ensure_ascii=False) + "\n", args.output)
    else:
        _write("\n".join([to_text(nf), *trace.lines()]) + "\n", args.output)
    return OK


def graph_text(g) -> str:
    lines = [f"root {g.root}"]
    for n in g.nodes:
        term = "" if n.term is None else " " + to_text(n.term)
        lines.append(f"state {n.id} {n.kind} q{n.state}{term}")
    for p in sorted(g.psteps):
        lines.extend(f"{p} ~> {a} {w}" for a, w in g.psteps[p])
    for a in sorted(g.asteps):
        lines.extend(f"{a} -{e.label}-> {e.target}" for e in g.asteps[a])
    return "\n".join(lines) + "\n"


def cmd_lts(args) -> int:
    reg = _registry(args)
    g = _graph(_read_term(args.file, args.expr), reg, args)
    render = {"dot": to_dot, "json": dumps_json, "text": graph_text}[args.format]
    _write(render(g), args.output)
    info = sys.stdout if args.output else sys.stderr
    c = g.counts()
    print(f"states: {len(g.nodes)} ({c['prob_states']} probabilistic, {c['action_states']} action, "
          f"{c['nil']} nil, {c['truncated']} truncated); edges: {c['prob_edges']} probabilistic, "
          f"{c['action_edges']} action", file=info)
    for d in g.diagnostics:
        print(f"note: {d}", file=info)
    for w in check_measurement_consistency(g, reg, args.tol):
        print(f"warning: {w}", file=info)
    return OK


def cmd_bisim(args) -> int:
    reg = _registry(args)
    g1 = _graph(_read_term(args.file_a, args.expr), reg, args)
    g2 = _graph(_read_term(args.file_b, args.expr), reg, args)
    if args.mode == "strong":
        res = strong_bisim(g1, g2, tol=args.tol)
    else:
        res = branching_bisim(g1, g2, tol=args.tol)
    if args.format == "json":
        _write(res.dumps(), args.output)
    else:
        lines = [res.to_json()["verdict"]]
        if res.witness:
            lines += [f"  {k}: {v}" for k, v in res.witness.items()]
        _write("\n".join(lines) + "\n", args.output)
    return OK if res.equivalent else DIFFERENT


INPUTS = ("zero", "one", "plus", "minus", "random", "mixed")


def teleport_input(kind: str, seed: int) -> np.ndarray:
    """Named or seeded random one-qubit density matrix."""
    if kind == "zero":
        return basis_projector("0")
    if kind == "one":
        return basis_projector("1")
    if kind in ("plus", "minus"):
        v = np.array([1, 1 if kind == "plus" else -1], dtype=complex) / np.sqrt(2)
        return np.outer(v, v.conj())
    rng = np.random.default_rng(seed)
    return random_density(1, rng, rank=1 if kind == "random" else 2)


def cmd_verify(args) -> int:
    inp = teleport_input(args.input, args.seed) if args.protocol == "teleport" else None
    model = protocols.build(args.protocol, n=args.n, input_state=inp, mutation=args.mutation)
    if args.export:
        for k, p in model.export(args.export).items():
            print(f"wrote {k}: {p}", file=sys.stderr)
    rep = protocols.report(model, args.depth, args.tol, seed=args.seed)
    _write(protocols.dumps_report(rep), args.output)
    if args.plot:
        plot_report(model, rep, args.plot, args.depth)
    return OK if rep["pass"] else DIFFERENT


def plot_report(model, rep: dict, path, depth: int):
    """Two panels: check verdicts, and outcome mass under the canonical scheduler."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    g = model.graph(depth)
    mass: dict = {}
    for p in protocols.canonical_paths(g):
        if model.name == "Teleport":
            key = next((str(o) for o in p.origins() if o.name == "M"), p.end)
        else:
            ba = next((o.indices[0] for o in p.origins() if o.name == "Rand_Ba"), None)
            bb = next((o.indices[0] for o in p.origins() if o.name == "Rand_Bb"), None)
            key = p.end if ba is None or bb is None else \
                f"{len(protocols._matched(ba, bb, model.params['n']))} matched"
        mass[key] = mass.get(key, 0) + p.prob
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    names = [c["check"] for c in rep["checks"]]
    ax1.barh(names, [1] * len(names), color=["tab:green" if c["pass"] else "tab:red" for c in rep["checks"]])
    ax1.set_xticks([])
    ax1.set_title(f"{model.name} checks ({'pass' if rep['pass'] else 'FAIL'})")
    keys = sorted(mass)
    ax2.bar(keys, [float(mass[k]) for k in keys], color="tab:blue")
    ax2.set_ylabel("probability")
    ax2.set_title("round outcomes (canonical scheduler)")
    ax2.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ------------------------------------------------------------------ parser

def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--registry", help=f"action registry JSON (default ${ENV_REGISTRY})")
    common.add_argument("--depth", type=_positive_int, default=protocols.DEFAULT_DEPTH,
                        help="action-step depth bound for graph construction")
    common.add_argument("--tol", type=_positive_float, default=EPS_Q, help="quantum state tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized inputs")
    common.add_argument("-o", "--output", help="write the result here instead of stdout")
    common.add_argument("-e", "--expr", action="store_true", help="arguments are terms, not files")

    p = argparse.ArgumentParser(prog="pqacp", description="Probabilistic quantum process algebra toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("normalize", parents=[common], help="rewrite a closed term to basic form")
    s.add_argument("file")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_normalize)

    s = sub.add_parser("lts", parents=[common], help="build the configuration graph")
    s.add_argument("file")
    s.add_argument("--format", choices=("dot", "json", "text"), default="dot")
    s.set_defaults(func=cmd_lts)

    s = sub.add_parser("bisim", parents=[common], help="decide strong or branching bisimilarity")
    s.add_argument("file_a")
    s.add_argument("file_b")
    s.add_argument("--mode", choices=("strong", "branching"), default="strong")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_bisim)

    s = sub.add_parser("verify", parents=[common], help="run a protocol's acceptance checks")
    s.add_argument("protocol", choices=("teleport", "bb84", "e91"))
    s.add_argument("--n", type=int, default=1, help="key length for bb84 and e91")
    s.add_argument("--input", choices=INPUTS, default="zero", help="teleportation input state")
    s.add_argument("--mutation", choices=("drop_pauli", "flip_basis", "wrong_shadow"),
                   help="inject a known fault")
    s.add_argument("--format", choices=("json",), default="json")
    s.add_argument("--plot", help="render a summary figure (PNG/PDF/SVG)")
    s.add_argument("--export", help="write the model as .pqa files and a registry JSON")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on bad usage; keep 2 for stuck normalization
        return OK if not e.code else ERROR
    try:
        return args.func(args)
    except PqacpError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
