"""Command-line entry point: ``trees``, ``solve``, ``certify`` and ``report``.

Exit codes: 0 ok, 2 combinatorial inconsistency, 3 solver incomplete,
4 a measured value contradicts its prediction.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from mpmath import mp, mpf
import mpmath

from . import __version__
from .errors import Incomplete, LameDessinsError, NotApplicable
from .mpnum import GUARD_BITS, height_budget, recognize_algebraic
from .trees import (RAMIFICATION_TABLE, Tree, all_trees, count_classes, enumerate_trees,
                    predict, ramification_bound, table_entry, table_row_label, tree_invariants)

log = logging.getLogger("lame_dessins")

SCHEMA = "lame-dessins/1"
SOLVER_VERSION = "1"

EXIT_OK, EXIT_INCONSISTENT, EXIT_INCOMPLETE, EXIT_CONTRADICTION = 0, 2, 3, 4

# above this degree `report` only shows cached measurements
REPORT_MEASURE_LIMIT = 7


@dataclass(frozen=True)
class RunConfig:
    precision_bits: int = 256
    max_restarts: int = 64
    rng_seed: int = 0
    cache_dir: Path | None = None
    output_format: str = "json"

    def __post_init__(self):
        if self.precision_bits < 128:
            raise ValueError("precision_bits must be at least 128")
        if self.output_format not in ("json", "markdown"):
            raise ValueError(f"unknown output format {self.output_format!r}")


def default_cache_dir() -> Path:
    env = os.environ.get("LAME_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "lame-dessins"


# ---------------------------------------------------------------------------
# cache
# ---------------------------------------------------------------------------


def _canonical_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


class Cache:
    """Checksummed JSON entries, one file per key, written by temp-file rename."""

    def __init__(self, root: Path | None):
        self.root = Path(root) if root is not None else None

    def _path(self, key: dict) -> Path:
        digest = hashlib.sha256(_canonical_bytes(key)).hexdigest()[:24]
        return self.root / f"{key['kind']}-N{key['N']}-{digest}.json"

    def get(self, key: dict):
        if self.root is None:
            return None
        path = self._path(key)
        try:
            entry = json.loads(path.read_text())
            if entry.get("schema") != SCHEMA or entry.get("key") != key:
                raise ValueError("key mismatch")
            if hashlib.sha256(_canonical_bytes(entry["payload"])).hexdigest() != entry["checksum"]:
                raise ValueError("checksum mismatch")
            return entry["payload"]
        except FileNotFoundError:
            return None
        except (ValueError, KeyError, TypeError, OSError) as exc:
            log.warning("ignoring cache entry %s: %s", path.name, exc)
            return None

    def put(self, key: dict, payload) -> None:
        if self.root is None:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        entry = {"schema": SCHEMA, "key": key, "payload": payload,
                 "checksum": hashlib.sha256(_canonical_bytes(payload)).hexdigest()}
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(entry, fh, sort_keys=True, indent=1)
            os.replace(tmp, self._path(key))
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise


def _key(kind: str, N: int, cfg: RunConfig, tree: str | None = None) -> dict:
    return {"kind": kind, "N": N, "tree": tree, "precision_bits": cfg.precision_bits,
            "rng_seed": cfg.rng_seed, "max_restarts": cfg.max_restarts,
            "solver_version": SOLVER_VERSION}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _is_prime(n: int) -> bool:
    from sympy import isprime

    return bool(isprime(n))


def cmd_trees(N: int) -> tuple[int, dict]:
    trees = enumerate_trees(N)
    rows = []
    prime = N > 3 and _is_prime(N)
    for t in trees:
        inv = tree_invariants(t)
        row = {"tree": t.label(), "branches": list(t.branches), "signature": inv.signature,
               "order": inv.order, "real": inv.is_real, "conjugate": inv.conjugate.label()}
        if prime:
            row["predicted"] = predict(N, t.signature).to_json()
        rows.append(row)
    excluded = [t.label() for t in all_trees(N) if not t.is_primitive]
    out = {"schema": SCHEMA, "command": "trees", "N": N, "trees": rows,
           "excluded_non_primitive": excluded}
    if excluded:
        out["note"] = (f"{', '.join(excluded)} not primitive (order < degree); "
                       "excluded from the census")
    code = EXIT_OK
    if prime:
        total, s0, s2 = count_classes(N)
        counted = (len(trees), sum(t.signature == 0 for t in trees), sum(t.signature == 2 for t in trees))
        out["census"] = {"predicted": [total, s0, s2], "measured": list(counted)}
        if counted != (total, s0, s2):
            code = EXIT_INCONSISTENT
    return code, out


def _exact_rational(z, bits: int) -> str | None:
    """``z`` as a small-height rational if it is one to working precision."""
    with mp.workprec(bits + GUARD_BITS):
        if abs(z.imag) > mpf(2) ** (-bits // 2) * max(1, abs(z)):
            return None
        if abs(z) < mpf(2) ** (-bits // 2):
            return "0"
        try:
            a = recognize_algebraic(z.real, 1, height_budget(1, bits), bits)
        except LameDessinsError:
            return None
        return str(a.as_fraction()) if a is not None else None


def _solution_payload(sol) -> dict:
    from .belyi import verify_solution

    out = sol.to_json()
    out["verification"] = {k: v for k, v in verify_solution(sol).items() if k != "residual_log2"}
    exact = {}
    for name, poly in zip("qgfh", (sol.q, sol.g, sol.f, sol.h)):
        exact[name] = [_exact_rational(c, sol.precision_bits) for c in poly.coeffs]
    if all(c is not None for v in exact.values() for c in v):
        out["exact_coefficients"] = exact
    return out


def _solve(N: int, cfg: RunConfig, cache: Cache):
    """Solutions (as payload dicts) for every tree of degree ``N``, through the cache."""
    from .belyi import SolveConfig, solve_all

    index_key = _key("solve-index", N, cfg)
    index = cache.get(index_key)
    if index is not None:
        payloads = [cache.get(_key("solution", N, cfg, lbl)) for lbl in index["trees"]]
        if all(p is not None for p in payloads):
            return payloads
    sols = solve_all(N, SolveConfig(precision_bits=cfg.precision_bits, max_restarts=cfg.max_restarts,
                                    rng_seed=cfg.rng_seed))
    payloads = [_solution_payload(s) for s in sols]
    for p in payloads:
        cache.put(_key("solution", N, cfg, p["tree"]), p)
    cache.put(index_key, {"trees": [p["tree"] for p in payloads]})
    return payloads


def cmd_solve(N: int, cfg: RunConfig, cache: Cache) -> tuple[int, dict]:
    try:
        payloads = _solve(N, cfg, cache)
    except Incomplete as exc:
        return EXIT_INCOMPLETE, {
            "schema": SCHEMA, "command": "solve", "N": N, "error": "incomplete",
            "missing": [t.label() if isinstance(t, Tree) else str(t) for t in exc.missing],
            "found": [s.decoded_tree.label() for s in exc.solutions if s.decoded_tree],
        }
    return EXIT_OK, {"schema": SCHEMA, "command": "solve", "N": N,
                     "precision_bits": cfg.precision_bits, "solutions": payloads}


def _check(quantity: str, measured, predicted, agrees: bool | None = None) -> dict:
    if agrees is None:
        agrees = None if predicted is None else measured == predicted
    return {"quantity": quantity, "measured": measured, "predicted": predicted, "agrees": agrees}


def _certify_tree(sol, N: int, prime: bool) -> tuple[dict, object]:
    from . import curves, monodromy, theta

    m = curves.model_from_solution(sol)
    pred = predict(N, m.signature, m.j_class) if prime and m.signature in (0, 2) else None
    checks = []
    tors = curves.torsion_order(m)
    dbl = curves.order_of_double(m)
    checks.append(_check("torsion_order", tors, pred.torsion_order if pred else None))
    checks.append(_check("order_of_2P", dbl, N if prime else None))
    L = curves.lattice(m)
    a, b = curves.marked_point_coordinates(m)
    te = theta.theta_eval(L, a, b)
    with mp.workprec(m.bits + GUARD_BITS):
        theta_log2 = round(float(mpmath.log(abs(te.theta_value), 2)), 1) if te.theta_value != 0 else None
    checks.append(_check("theta_vanishes_at_P", te.vanishes, True))
    hits = theta.scan_torsion(L, N)
    k = 2 * N
    cell = (Fraction(round(float(a) * k) % k, k), Fraction(round(float(b) * k) % k, k))
    checks.append(_check("theta_scan_contains_P", cell in hits, True))
    cert = monodromy.certify_dihedral(monodromy.LameODE.from_model(m), N)
    checks.append(_check("projective_monodromy_order", cert.projective_group_order, 2 * N))
    checks.append(_check("dihedral", cert.dihedral, True))
    checks.append(_check("linear_monodromy_order", cert.linear_group_order,
                         pred.full_monodromy_order if pred else None))
    checks.append(_check("monodromy_separation_margin_log2_at_least_16",
                         round(cert.separation_margin_log2, 1), 16,
                         agrees=cert.separation_margin_log2 >= 16))
    out = {
        "tree": m.tree.label(),
        "signature": m.signature,
        "model": m.to_json(),
        "marked_point": {"alpha": mpmath.nstr(a, 30), "beta": mpmath.nstr(b, 30)},
        "theta_abs_log2": theta_log2,
        "theta_zeros_on_grid": [[str(x), str(y)] for x, y in hits],
        "monodromy": cert.to_json(),
        "prediction": pred.to_json() if pred else None,
        "checks": checks,
    }
    return out, m


def cmd_certify(N: int, cfg: RunConfig, cache: Cache) -> tuple[int, dict]:
    from .belyi import BelyiSolution
    from . import curves

    code, sol_out = cmd_solve(N, cfg, cache)
    if code != EXIT_OK:
        sol_out["command"] = "certify"
        return code, sol_out
    prime = N > 3 and _is_prime(N)
    key = _key("certify", N, cfg)
    cached = cache.get(key)
    if cached is not None:
        return _certify_exit(cached), cached
    trees_out, models = [], []
    for p in sol_out["solutions"]:
        if not p["primitive"]:
            continue
        sol = BelyiSolution.from_json(p)
        t_out, m = _certify_tree(sol, N, prime)
        trees_out.append(t_out)
        models.append(m)
    orbits = curves.galois_orbits(models, N)
    for orb in orbits.orbits:
        for t_out, m in zip(trees_out, models):
            if m.tree not in orb.trees:
                continue
            t_out["field_of_moduli"] = orb.moduli.to_json() if orb.moduli else None
            if orb.moduli is None or not prime:
                continue
            try:
                rep = curves.reduction_report(m, N, orb.moduli)
            except (NotApplicable, LameDessinsError) as exc:
                t_out["reduction"] = {"skipped": str(exc)}
                continue
            t_out["reduction"] = rep.to_json()
            t_out["checks"].append(_check("good_reduction", rep.good_reduction,
                                          rep.prediction.good_reduction_predicted(rep.e_p),
                                          agrees=rep.criterion_agrees))
            if rep.predicted_v_delta_mod6 is not None:
                t_out["checks"].append(_check("v_delta_mod6", rep.v_delta_mod6, rep.predicted_v_delta_mod6))
            t_out["checks"].append(_check("ramification_divisible_by_e", rep.e_p, rep.prediction.e,
                                          agrees=rep.theorem_divisibility_holds))
    for t_out in trees_out:
        t_out["verdict"] = "pass" if all(c["agrees"] is not False for c in t_out["checks"]) else "fail"
    out = {"schema": SCHEMA, "command": "certify", "N": N, "precision_bits": cfg.precision_bits,
           "orbits": orbits.to_json()["orbits"],
           "orbit_sizes": sorted(len(o.trees) for o in orbits.orbits),
           "trees": trees_out}
    cache.put(key, out)
    return _certify_exit(out), out


def _certify_exit(out: dict) -> int:
    return EXIT_OK if all(t["verdict"] == "pass" for t in out["trees"]) else EXIT_CONTRADICTION


def cmd_report(p: int, cfg: RunConfig, cache: Cache) -> tuple[int, str]:
    lines = [f"# Lamé dessins at p = {p}", ""]
    lines.append("Cells are tagged: [paper] value read from the published table, "
                 "[predicted] value computed from the closed-form bound, [measured] value computed numerically.")
    lines += ["", "## Ramification table", "",
              "| row | applies to p | e |", "|---|---|---|"]
    for residues, s, (off, den) in RAMIFICATION_TABLE:
        applies = p % 12 in residues
        if applies:
            cell = f"{table_entry(p, s)} [paper], {ramification_bound(p, s)} [predicted]"
        else:
            cell = "n/a"
        lines.append(f"| {table_row_label(residues, s, off, den)} | {'yes' if applies else 'no'} | {cell} |")
    code = EXIT_OK
    try:
        total, s0, s2 = count_classes(p)
    except NotApplicable:
        total = None
    trees = enumerate_trees(p)
    if total is not None:
        lines += ["", "## Census", "", "| quantity | predicted | measured |", "|---|---|---|",
                  f"| trees | {total} [predicted] | {len(trees)} [measured] |",
                  f"| signature 0 | {s0} [predicted] | {sum(t.signature == 0 for t in trees)} [measured] |",
                  f"| signature 2 | {s2} [predicted] | {sum(t.signature == 2 for t in trees)} [measured] |"]
        if (total, s0, s2) != (len(trees), sum(t.signature == 0 for t in trees),
                               sum(t.signature == 2 for t in trees)):
            code = EXIT_INCONSISTENT
    cert = cache.get(_key("certify", p, cfg))
    if cert is None and p <= REPORT_MEASURE_LIMIT:
        c_code, cert = cmd_certify(p, cfg, cache)
        if c_code == EXIT_INCOMPLETE:
            cert = None
    if cert is not None:
        lines += ["", "## Galois orbits", "", "| trees | degree of j | field discriminant |", "|---|---|---|"]
        for o in cert["orbits"]:
            deg = len(o["j_min_poly"]) - 1 if o["j_min_poly"] else "unknown"
            disc = o["field"]["discriminant"] if o["field"] else "unknown"
            lines.append(f"| {' '.join(o['trees'])} | {deg} [measured] | {disc} [measured] |")
        lines += ["", "## Measured against predicted", "",
                  "| tree | quantity | measured | predicted | agrees |", "|---|---|---|---|---|"]
        for t in cert["trees"]:
            for c in t["checks"]:
                pred = "n/a" if c["predicted"] is None else f"{c['predicted']} [predicted]"
                lines.append(f"| {t['tree']} | {c['quantity']} | {c['measured']} [measured] | "
                             f"{pred} | {c['agrees']} |")
        if any(t["verdict"] != "pass" for t in cert["trees"]):
            code = max(code, EXIT_CONTRADICTION)
    else:
        lines += ["", "## Predictions", "", "| tree | signature | e | torsion order |", "|---|---|---|---|"]
        for t in trees:
            pr = predict(p, t.signature)
            lines.append(f"| {t.label()} | {t.signature} [measured] | {pr.e} [predicted] | "
                         f"{pr.torsion_order} [predicted] |")
        lines += ["", f"Numerical measurements are not run above degree {REPORT_MEASURE_LIMIT}; "
                  "run `certify` first to include them."]
    return code, "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _markdown(out: dict) -> str:
    cmd = out.get("command")
    lines = [f"# {cmd} N={out.get('N')}", ""]
    if cmd == "trees":
        lines += ["| tree | signature | order | real | conjugate |", "|---|---|---|---|---|"]
        for r in out["trees"]:
            lines.append(f"| {r['tree']} | {r['signature']} | {r['order']} | {r['real']} | {r['conjugate']} |")
        if out.get("note"):
            lines += ["", f"Note: {out['note']}"]
    elif cmd == "solve" and "solutions" in out:
        lines += ["| tree | signature | residual exponent |", "|---|---|---|"]
        for s in out["solutions"]:
            lines.append(f"| {s['tree']} | {s['signature']} | {s['residual_exponent']} [measured] |")
    elif cmd == "certify" and "trees" in out:
        lines += ["| tree | verdict | quantity | measured | predicted |", "|---|---|---|---|---|"]
        for t in out["trees"]:
            for c in t["checks"]:
                pred = "n/a" if c["predicted"] is None else f"{c['predicted']} [predicted]"
                lines.append(f"| {t['tree']} | {t['verdict']} | {c['quantity']} | "
                             f"{c['measured']} [measured] | {pred} |")
    else:
        lines.append("```json")
        lines.append(json.dumps(out, indent=1, sort_keys=True))
        lines.append("```")
    return "\n".join(lines) + "\n"


def _emit(out, fmt: str, stream) -> None:
    if isinstance(out, str):
        stream.write(out if fmt == "markdown" else json.dumps({"schema": SCHEMA, "report": out}) + "\n")
    elif fmt == "markdown":
        stream.write(_markdown(out))
    else:
        stream.write(json.dumps(out, sort_keys=True, indent=1) + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lame-dessins",
                                 description="Dihedral Lamé operators from plane trees")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need: str):
        p.add_argument(f"--{need}", type=int, required=True)
        p.add_argument("--precision", type=int, default=256)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-restarts", type=int, default=64)
        p.add_argument("--cache-dir", type=Path, default=None)
        p.add_argument("--no-cache", action="store_true")
        p.add_argument("--format", choices=("json", "markdown"), default=None)
        p.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("trees", help="census of trees of a degree"), "degree")
    common(sub.add_parser("solve", help="Shabat polynomials of every tree"), "degree")
    common(sub.add_parser("certify", help="full pipeline with predictions"), "degree")
    common(sub.add_parser("report", help="markdown report for a prime"), "prime")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    default_fmt = "markdown" if args.command == "report" else "json"
    try:
        cfg = RunConfig(precision_bits=args.precision, max_restarts=args.max_restarts,
                        rng_seed=args.seed, cache_dir=args.cache_dir or default_cache_dir(),
                        output_format=args.format or default_fmt)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    cache = Cache(None if args.no_cache else cfg.cache_dir)
    try:
        if args.command == "trees":
            code, out = cmd_trees(args.degree)
        elif args.command == "solve":
            code, out = cmd_solve(args.degree, cfg, cache)
        elif args.command == "certify":
            code, out = cmd_certify(args.degree, cfg, cache)
        else:
            code, out = cmd_report(args.prime, cfg, cache)
    except (ValueError, NotApplicable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    _emit(out, cfg.output_format, sys.stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
