"""``afembed`` command-line front end.

Exit status: 0 success or affirmative verdict, 2 unreadable or invalid input,
3 negative verdict, 4 undecided at the given tolerance or truncation.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import bratteli, cpmaps, divisibility, matnum, qdcert, ultrasim
from . import io
from .algebra import as_dims
from .errors import AfembedError, InvariantViolation, ParseError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NO = 3
EXIT_UNDECIDED = 4

CONFIG_ENV = "AFEMBED_CONFIG"

# names accepted by --tol NAME=VALUE; a bare --tol VALUE sets "default"
TOLERANCE_NAMES = ("default", "cp", "upnorm", "projection_defect", "unit_defect",
                   "contraction_excess", "gap_margin")


@dataclass(frozen=True)
class RunConfig:
    tolerances: Dict[str, float] = field(default_factory=dict)
    seed: int = 0
    truncation: Optional[int] = None
    window: Optional[int] = None
    format: str = "json"

    def __post_init__(self):
        for name, val in self.tolerances.items():
            if name not in TOLERANCE_NAMES:
                raise InvariantViolation(f"unknown tolerance {name!r}")
            if not val > 0 and not (name == "gap_margin" and val == 0):
                raise InvariantViolation(f"tolerance {name} must be positive, got {val}")
        if self.format not in ("json", "text"):
            raise InvariantViolation(f"format must be json or text, got {self.format!r}")
        if self.window is not None and self.window < 1:
            raise InvariantViolation("window must be positive")
        if self.truncation is not None and self.truncation < 1:
            raise InvariantViolation("truncation must be positive")
        if (self.window is not None and self.truncation is not None
                and self.window > self.truncation):
            raise InvariantViolation(f"window {self.window} exceeds truncation {self.truncation}")

    def tol(self, name: str, fallback=None):
        return self.tolerances.get(name, self.tolerances.get("default", fallback))


def _parse_tol(items: Sequence[str]) -> Dict[str, float]:
    out = {}
    for item in items or ():
        name, sep, raw = item.partition("=")
        if not sep:
            name, raw = "default", item
        try:
            out[name.strip()] = float(raw)
        except ValueError:
            raise ParseError(f"--tol {item!r}: {raw!r} is not a number") from None
    return out


def load_config(args) -> RunConfig:
    base: dict = {}
    path = os.environ.get(CONFIG_ENV)
    if path:
        base = io.load_json(path)
        if not isinstance(base, dict):
            raise ParseError(f"{path}: config must be a JSON object")
    tols = dict(base.get("tol", {}))
    tols.update(_parse_tol(getattr(args, "tol", None)))
    pick = lambda key: getattr(args, key, None) if getattr(args, key, None) is not None else base.get(key)
    return RunConfig(
        tolerances={k: float(v) for k, v in tols.items()},
        seed=int(pick("seed") or 0),
        truncation=pick("truncation"),
        window=pick("window"),
        format=pick("format") or "json",
    )


def _int_list(text: str, flag: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ParseError(f"{flag}: expected comma-separated integers, got {text!r}") from None


def _dims_arg(text: str, flag: str):
    vals = _int_list(text, flag)
    try:
        return as_dims(vals)
    except InvariantViolation as exc:
        raise InvariantViolation(f"{flag}: {exc.message}") from None


# ---------------------------------------------------------------- commands

def cmd_divides(args, cfg):
    m = _dims_arg(args.source, "--source")
    n = _dims_arg(args.target, "--target")
    if args.all:
        wits = divisibility.enumerate_witnesses(m, n, limit=args.limit)
        report = {"source": m, "target": n, "divides": bool(wits), "count": len(wits),
                  "witnesses": [w.gamma for w in wits]}
        return report, EXIT_OK if wits else EXIT_NO
    wit = divisibility.divides(m, n)
    report = {"source": m, "target": n, "divides": wit is not None,
              "witness": wit.gamma if wit else None}
    return report, EXIT_OK if wit else EXIT_NO


def cmd_classify(args, cfg):
    chain = io.read_input(args.chain, io.parse_chain)
    target = _dims_arg(args.target, "--target")
    classes = bratteli.classify_morphisms(chain, target)
    report = {"target": target, "count": len(classes),
              "injective": sum(1 for c in classes if c.injective),
              "classes": classes}
    return report, EXIT_OK if classes else EXIT_NO


def cmd_embed(args, cfg):
    chain = io.read_input(args.chain, io.parse_chain)
    target = _dims_arg(args.target, "--target")
    check = bratteli.validate_chain(chain)
    if not check.valid:
        raise InvariantViolation(f"chain: {check.reason}")
    verdict = bratteli.decide_embedding(chain, target)
    return verdict, EXIT_OK if verdict.embeds else EXIT_NO


def cmd_uhf(args, cfg):
    moduli = _int_list(args.moduli, "--moduli")
    ok = bratteli.uhf_check(moduli, args.N)
    failing = [n for n in moduli if args.N % n]
    report = {"moduli": moduli, "N": args.N, "embeds": ok, "non_divisors": failing}
    return report, EXIT_OK if ok else EXIT_NO


def _matrix_field(data, key="matrix"):
    if isinstance(data, dict):
        return io.parse_matrix(io._require(data, key, "$"), f"$.{key}")
    return io.parse_matrix(data)


def _partial_isometry_input(data):
    b = io.parse_matrix(io._require(data, "b", "$"), "$.b")
    p = io.parse_matrix(data["p"], "$.p") if "p" in data else None
    q = io.parse_matrix(data["p_final"], "$.p_final") if "p_final" in data else None
    return b, p, q


def cmd_lift(args, cfg):
    kind = args.kind
    if kind == "projection":
        x = io.read_input(args.input, _matrix_field)
        max_def = cfg.tol("projection_defect", matnum.MAX_PROJECTION_DEFECT)
        ap = matnum.AlmostProjection.of(x)
        p = matnum.correct_projection(ap, max_def)
        report = {"kind": kind, "defect": ap.defect, "distance": matnum.norm(p - x),
                  "result": p}
    elif kind == "partial-isometry":
        b, p, q = io.read_input(args.input, _partial_isometry_input)
        w = matnum.lift_partial_isometry(b, p, q, cfg.tolerances.get("gap_margin", 0.0))
        report = {"kind": kind, "distance": matnum.norm(w - b), "result": w}
    elif kind == "contraction":
        V = io.read_input(args.input, _matrix_field)
        W = matnum.correct_near_contraction(
            V, cfg.tol("contraction_excess", matnum.MAX_CONTRACTION_EXCESS))
        report = {"kind": kind, "input_norm": matnum.norm(V), "norm": matnum.norm(W),
                  "distance": matnum.norm(W - V), "result": W}
    else:
        dims, units = io.read_input(args.input, io.parse_units)
        exact = matnum.lift_matrix_units(units, dims, cfg.tol("unit_defect", matnum.MAX_UNIT_DEFECT))
        report = {"kind": kind, "dims": dims,
                  "units": [{"index": list(k), "matrix": v} for k, v in sorted(exact.items())]}
    return report, EXIT_OK


def cmd_cp(args, cfg):
    m = io.read_input(args.map, io.parse_cp_map)
    verdict = cpmaps.is_cp(m, cfg.tol("cp", cpmaps.CP_TOL))
    report = {"verdict": "CP" if verdict.cp else "NOT_CP",
              "min_eigenvalue": verdict.min_eigenvalue,
              "norm": cpmaps.cp_norm(m) if verdict.cp else cpmaps.hermitian_map_norm_bound(m)}
    return report, EXIT_OK if verdict.cp else EXIT_NO


def cmd_stinespring(args, cfg):
    m = io.read_input(args.map, io.parse_cp_map)
    st = cpmaps.stinespring(m, cfg.tol("cp", cpmaps.CP_TOL))
    residual = float(np.max(np.abs(st.to_map().choi - m.choi)))
    report = {"multiplicity": st.multiplicity, "rho": st.rho, "V": st.V,
              "reconstruction_residual": residual}
    return report, EXIT_OK


def cmd_upnorm(args, cfg):
    family = io.read_input(args.family, io.parse_family, cfg.truncation, cfg.window)
    x = io.read_input(args.element, io.parse_element, family)
    tol = cfg.tol("upnorm", ultrasim.default_tol(x.declared_bound))
    res = ultrasim.tail_limit(x.norms(), family.window, family.degree, tol)
    report = {"up_norm": max(res.value, 0.0), "fit_residual": res.residual,
              "tail_spread": res.spread, "tol": tol, "T": family.T, "W": family.window}
    return report, EXIT_OK


def cmd_certify(args, cfg):
    elements = io.read_input(args.elements, io.parse_matrix_list)
    K = io.read_input(args.subspace, _matrix_field, "basis")
    return qdcert.certify(elements, K), EXIT_OK


def cmd_qd_search(args, cfg):
    elements = io.read_input(args.elements, io.parse_matrix_list)
    seed = args.seed if args.seed is not None else cfg.seed
    cert = qdcert.search_subspace(elements, args.max_dim, budget=args.budget, seed=seed)
    return cert, EXIT_OK


COMMANDS = {
    "divides": cmd_divides, "classify": cmd_classify, "embed": cmd_embed, "uhf": cmd_uhf,
    "lift": cmd_lift, "cp": cmd_cp, "stinespring": cmd_stinespring, "upnorm": cmd_upnorm,
    "certify": cmd_certify, "qd-search": cmd_qd_search,
}


# ---------------------------------------------------------------- rendering

def _text_lines(value, prefix: str = "") -> List[str]:
    if isinstance(value, dict):
        lines = []
        for k in sorted(value):
            lines += _text_lines(value[k], f"{prefix}{k}.")
        return lines
    if isinstance(value, list) and value and isinstance(value[0], (dict, list)):
        lines = []
        for i, v in enumerate(value):
            lines += _text_lines(v, f"{prefix}{i}.")
        return lines
    return [f"{prefix.rstrip('.')}: {json.dumps(value)}"]


def render(report, fmt: str) -> str:
    data = io.to_jsonable(report)
    if fmt == "text":
        return "\n".join(_text_lines(data))
    return json.dumps(data, sort_keys=True, indent=2)


# ---------------------------------------------------------------- parser

def _global_flags(parser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--tol", action="append", default=d, metavar="[NAME=]VALUE",
                        help=f"tolerance override; names: {', '.join(TOLERANCE_NAMES)}")
    parser.add_argument("--seed", type=int, default=d)
    parser.add_argument("--truncation", type=int, default=d, metavar="T")
    parser.add_argument("--window", type=int, default=d, metavar="W")
    parser.add_argument("--format", choices=("json", "text"), default=d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="afembed", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("divides", parents=[common], help="decide m | n for dimension vectors")
    p.add_argument("--source", required=True, help="comma-separated dimension vector m")
    p.add_argument("--target", required=True, help="comma-separated dimension vector n")
    p.add_argument("--all", action="store_true", help="enumerate every witness")
    p.add_argument("--limit", type=int, default=None)

    for name, helptext in (("classify", "classify unital morphisms up to conjugacy"),
                           ("embed", "decide unital embeddability of a chain")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--chain", required=True, help="chain JSON file")
        p.add_argument("--target", required=True, help="comma-separated target dimension vector")

    p = sub.add_parser("uhf", parents=[common], help="check a UHF modulus chain against M_N")
    p.add_argument("--moduli", required=True)
    p.add_argument("--N", type=int, required=True)

    p = sub.add_parser("lift", parents=[common], help="repair an almost-relation exactly")
    p.add_argument("kind", choices=("projection", "partial-isometry", "contraction", "units"))
    p.add_argument("input", help="JSON file with the approximate data")

    for name in ("cp", "stinespring"):
        p = sub.add_parser(name, parents=[common],
                           help="complete-positivity verdict" if name == "cp" else "Stinespring dilation")
        p.add_argument("--map", required=True, help="CP map JSON file")

    p = sub.add_parser("upnorm", parents=[common], help="ultraproduct norm of an element")
    p.add_argument("--family", required=True)
    p.add_argument("--element", required=True)

    p = sub.add_parser("certify", parents=[common], help="certificate for a given subspace")
    p.add_argument("--elements", required=True)
    p.add_argument("--subspace", required=True)

    p = sub.add_parser("qd-search", parents=[common], help="search for a good finite subspace")
    p.add_argument("--elements", required=True)
    p.add_argument("--max-dim", type=int, required=True)
    p.add_argument("--budget", type=int, default=1000)
    return parser


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    args = build_parser().parse_args(argv)
    fmt = getattr(args, "format", None) or "json"
    try:
        cfg = load_config(args)
        fmt = cfg.format
        report, code = COMMANDS[args.command](args, cfg)
    except AfembedError as exc:
        out.write(render({"error": exc.to_dict()}, fmt) + "\n")
        err.write(f"afembed: {exc.code}: {exc.message}\n")
        return exc.exit_code
    except (KeyError, TypeError) as exc:
        # structurally wrong JSON that slipped past the typed parsers
        e = ParseError(f"malformed input: {exc}")
        out.write(render({"error": e.to_dict()}, fmt) + "\n")
        err.write(f"afembed: {e.code}: {e.message}\n")
        return e.exit_code
    out.write(render(report, fmt) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
