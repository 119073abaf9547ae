"""Command-line interface: JSON in, JSON out.

Exit status 0 on success, 2 on a named domain error, 3 on malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import schemas
from .bg import birkhoff_factor_oracle, bg_trivialise, permutation_lemma
from .building import abacus, geodesic
from .connection import (
    ConnectionGerm,
    birkhoff_gauge,
    is_logarithmic_lattice,
    log_lattice_from_flag,
)
from .errors import DomainError, SchemaError
from .generators import (
    plemelj_instance,
    random_fuchsian_system,
    random_holomorphic_gauge,
    random_laurent_gauge,
    rng,
)
from .lattice import AdmissiblePair, Lattice, smith_decomposition
from .rh import (
    FuchsianSystem,
    WeakSolutionState,
    explore,
    modify_adjacent,
    plemelj_search,
    replay,
    type_and_hn,
)
from .scalar_series import ConstMatrix, SeriesMatrix, precision, working_precision


def _lattice(obj, n=None) -> Lattice:
    if obj is None:
        return Lattice.standard(n)
    return Lattice(SeriesMatrix.from_json(obj))


def _compact(M: SeriesMatrix):
    return "I" if M.is_exact and M.equals(SeriesMatrix.identity(M.nrows)) else M.to_json()


# ---------------------------------------------------------------------------
# command handlers: (payload, args) -> report
# ---------------------------------------------------------------------------


def cmd_smith(data, args):
    M = _lattice(data["M"])
    lam = _lattice(data.get("lambda"), M.n)
    return smith_decomposition(lam, M, verify=True).to_json()


def cmd_geodesic(data, args):
    M = _lattice(data["M"])
    lam = _lattice(data.get("lambda"), M.n)
    return geodesic(lam, M).to_json()


def cmd_abacus(data, args):
    kw = {k: data[k] for k in ("dedupe", "fix_first_column", "limit") if k in data}
    diagrams = abacus(data["kappa"], **kw)
    return {"kappa": list(data["kappa"]), "count": len(diagrams), "diagrams": [d.to_json() for d in diagrams]}


def cmd_type(data, args):
    res = bg_trivialise(_lattice(data["lattice"]))
    out = res.to_json()
    out["i"] = res.type.triviality_index
    return out


def cmd_permlemma(data, args):
    P = SeriesMatrix.from_json(data["P"])
    res = permutation_lemma(P, data["kappa"])
    ident = tuple(range(P.nrows))
    return {
        "sigma": "id" if res.sigma == ident else list(res.sigma),
        "kappa": list(res.kappa),
        "Pi": _compact(res.Pi),
        "Q": _compact(res.Q),
        "P_tilde": _compact(res.P_tilde),
    }


def cmd_birkhoff(data, args):
    A = ConnectionGerm.from_matrix(SeriesMatrix.from_json(data["germ"]))
    N = data.get("N", args.precision)
    P = birkhoff_gauge(A, N)
    return {"N": N, "P": P.to_json()}


def cmd_loglattices(data, args):
    A = ConnectionGerm.from_matrix(SeriesMatrix.from_json(data["germ"]))
    flag = tuple(ConstMatrix.from_json(F) for F in data["flag"])
    pair = AdmissiblePair(flag, tuple(data["kappa"]))
    L = log_lattice_from_flag(A, pair)
    test = is_logarithmic_lattice(A, L)
    return {"lattice": L.to_json(), "logarithmic": test.logarithmic, "witness": test.witness.to_json()}


def _system(data) -> FuchsianSystem:
    return FuchsianSystem.from_json(data)


def cmd_rh(data, args):
    sub = args.rh_command
    sysm = _system(data)
    if sub == "type":
        return type_and_hn(sysm).to_json()
    state = WeakSolutionState.from_system(sysm)
    if sub == "modify":
        if args.log:
            with open(args.log) as fh:
                log = json.load(fh)
            if isinstance(log, dict):
                log = log["log"]
            return replay(state, log).to_json()
        if args.pole is None:
            raise SchemaError("rh modify needs --pole (or --log)")
        W = None
        if args.subspace:
            cols = json.loads(args.subspace)
            if cols:
                W = ConstMatrix.from_json(cols)
        return modify_adjacent(state, args.pole, W, direction=args.direction).to_json()
    if sub == "plemelj":
        if args.pole is None:
            raise SchemaError("rh plemelj needs --pole")
        return plemelj_search(state, args.pole, args.depth).to_json()
    if sub == "explore":
        return explore(state, max_depth=args.depth or 2, kappa_box=args.box, max_nodes=args.max_nodes)
    raise SchemaError(f"unknown rh subcommand {sub}")


def cmd_gen_fixture(data, args):
    r = rng(args.seed)
    kind = args.kind
    if kind == "system":
        jordan = tuple(int(x) for x in args.jordan.split(",")) if args.jordan else ()
        return random_fuchsian_system(r, args.n, args.p, jordan=jordan).to_json()
    if kind == "plemelj":
        return plemelj_instance(r, args.n, args.p).system.to_json()
    if kind == "lattice":
        return {"M": random_laurent_gauge(r, args.n).to_json()}
    if kind == "gauge":
        kappa = [r.randint(0, 3) for _ in range(args.n)]
        return {"P": random_holomorphic_gauge(r, args.n, 2).to_json(), "kappa": kappa}
    raise SchemaError(f"unknown fixture kind {kind}")


def cmd_oracle_check(data, args):
    if data and data.get("matrices"):
        mats = [SeriesMatrix.from_json(m) for m in data["matrices"]]
    else:
        r = rng(args.seed)
        mats = [random_laurent_gauge(r, r.randint(1, 4), degree=2) for _ in range(args.count)]
    mismatches = []
    for idx, G in enumerate(mats):
        a = bg_trivialise(Lattice(G)).type
        b = birkhoff_factor_oracle(G).type
        if a != b:
            mismatches.append({"case": idx, "bg": a.to_json(), "oracle": b.to_json()})
    return {"cases": len(mats), "mismatches": mismatches, "ok": not mismatches}


COMMANDS = {
    "smith": (cmd_smith, "lattice_pair"),
    "geodesic": (cmd_geodesic, "lattice_pair"),
    "abacus": (cmd_abacus, "abacus"),
    "type": (cmd_type, "lattice"),
    "permlemma": (cmd_permlemma, "permlemma"),
    "birkhoff": (cmd_birkhoff, "birkhoff"),
    "loglattices": (cmd_loglattices, "loglattices"),
    "rh": (cmd_rh, "system"),
    "gen-fixture": (cmd_gen_fixture, None),
    "oracle-check": (cmd_oracle_check, "oracle_check"),
}


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------


def _common(top: bool) -> argparse.ArgumentParser:
    # options may sit before or after the command; only the top level sets defaults
    def d(x):
        return x if top else argparse.SUPPRESS

    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--precision", type=int, default=d(None), help="series precision (default 32)")
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--format", choices=("json", "text"), default=d("json"))
    p.add_argument("--depth", type=int, default=d(None))
    p.add_argument("--box", type=int, default=d(None))
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common(False)
    parser = argparse.ArgumentParser(prog="btlattice", description=__doc__, parents=[_common(True)])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("smith", "geodesic", "abacus", "type", "permlemma", "birkhoff", "loglattices"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("input", nargs="?", default="-", help="JSON file (default stdin)")
    rh = sub.add_parser("rh", parents=[common])
    rh.add_argument("rh_command", choices=("type", "modify", "plemelj", "explore"))
    rh.add_argument("input", nargs="?", default="-")
    rh.add_argument("--pole", type=int, default=None, help="pole index")
    rh.add_argument("--subspace", default=None, help="JSON list of rows of the spanning columns")
    rh.add_argument("--direction", choices=("down", "up"), default="down")
    rh.add_argument("--log", default=None, help="replay a modification log (JSON file)")
    rh.add_argument("--max-nodes", type=int, default=500)
    gf = sub.add_parser("gen-fixture", parents=[common])
    gf.add_argument("--kind", choices=("system", "plemelj", "lattice", "gauge"), default="system")
    gf.add_argument("--n", type=int, default=2)
    gf.add_argument("--p", type=int, default=2)
    gf.add_argument("--jordan", default="", help="comma separated pole indices with a Jordan block")
    oc = sub.add_parser("oracle-check", parents=[common])
    oc.add_argument("input", nargs="?", default=None)
    oc.add_argument("--count", type=int, default=20)
    return parser


def _read(path):
    if path is None:
        return None
    try:
        text = sys.stdin.read() if path == "-" else open(path).read()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc


def _text(obj, indent=0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and len(json.dumps(v)) > 60:
                lines.append(f"{pad}{k}:")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v)}")
        return "\n".join(lines)
    if isinstance(obj, list):
        return "\n".join(f"{pad}- {json.dumps(v)}" for v in obj)
    return pad + json.dumps(obj)


def dispatch(argv=None):
    """Run one command; returns (report, exit status, output format)."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.precision is None:
        args.precision = working_precision()
    handler, schema = COMMANDS[args.command]
    try:
        data = _read(getattr(args, "input", None))
        if schema is not None:
            if data is not None:
                schemas.validate_input(schema, data)
            elif args.command != "oracle-check":
                raise SchemaError("missing input")
        with precision(args.precision):
            report = handler(data, args)
        return report, 0, args.format
    except DomainError as exc:
        out = exc.to_json()
        partial = getattr(exc, "partial", None)
        if partial is not None:
            out["partial"] = partial
        return out, 2, args.format
    except SchemaError as exc:
        return {"error": "SchemaError", "message": str(exc)}, 3, args.format
    except (ValueError, KeyError, TypeError) as exc:
        return {"error": "SchemaError", "message": f"{type(exc).__name__}: {exc}"}, 3, args.format


def main(argv=None) -> int:
    report, status, fmt = dispatch(argv)
    print(_text(report) if fmt == "text" else json.dumps(report, sort_keys=True))
    return status


if __name__ == "__main__":
    sys.exit(main())
