"""Command-line driver.

Exit status: 0 success or positive verdict, 1 negative verdict (rejected,
DISTINCT, not converged), 2 usage error, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import circuit as circ
from . import oracle, pathsum, qnum, usynth
from . import isolang as iso
from .qlc import ParseError, QTypeError, check, parse, pretty, run_term, typecheck
from .qlc.machine import BoxError, FuelExhausted

SCHEMA_VERSION = "v1"
EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Rejected(Exception):
    """A user input that parses or checks negatively: exit 1."""


def load_schema(command: str) -> dict:
    """The JSON schema for a subcommand such as ``"qlc run"``."""
    name = command.replace(" ", "-") + f".{SCHEMA_VERSION}.json"
    return json.loads(resources.files("qlang").joinpath("schemas", name).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    shots: int = 1024
    max_qubits: int = qnum.MAX_QUBITS
    tolerance: float = 1e-9
    output: str = "human"

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        if self.tolerance <= 0:
            raise UsageError("tolerance must be positive")
        if self.shots < 1:
            raise UsageError("shots must be positive")
        if self.max_qubits < 1:
            raise UsageError("max-qubits must be positive")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed))

    def as_json(self) -> dict:
        d = asdict(self)
        d.pop("output")
        return d


@dataclass
class Outcome:
    status: int
    data: dict
    text: str


# -- reports ------------------------------------------------------------------------------------

def emit_report(counts: dict, errors: dict | None = None, timings: dict | None = None) -> dict:
    """Resource report with a stable field order."""
    out = {
        "gates": dict(sorted(counts.get("gates", {}).items())),
        "total_gates": counts.get("total_gates", 0),
        "qubits": counts.get("qubits", 0),
        "ancillas": counts.get("ancillas", 0),
        "init": counts.get("init", 0),
        "measurements": counts.get("measure", 0),
        "discards": counts.get("discard", 0),
    }
    if errors:
        out["errors"] = dict(errors)
    if timings:
        out["timings"] = {k: round(v, 6) for k, v in timings.items()}
    return out


def circuit_report(c: circ.Circuit, **kw) -> dict:
    return emit_report(circ.gate_count(c), **kw)


def format_report(r: dict) -> str:
    lines = [f"{name}: {n}" for name, n in r["gates"].items()]
    lines += [f"{k}: {r[k]}" for k in ("total_gates", "qubits", "ancillas", "init", "measurements", "discards")]
    for k, v in r.get("errors", {}).items():
        lines.append(f"{k}: {v:.3e}")
    for k, v in r.get("timings", {}).items():
        lines.append(f"time[{k}]: {v:.3f}s")
    return "\n".join(lines)


# -- file helpers -------------------------------------------------------------------------------

def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _load_circuit(path: str) -> circ.Circuit:
    try:
        return circ.loads(_read(path))
    except json.JSONDecodeError as e:
        raise Rejected(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from None
    except circ.CircuitError as e:
        raise Rejected(f"{path}: {e}") from None


def _load_matrix(path: str) -> np.ndarray:
    try:
        return qnum.parse_matrix_text(_read(path))
    except qnum.QNumError as e:
        raise Rejected(f"{path}: {e}") from None


def _parse_term(path: str, parser=parse):
    try:
        return parser(_read(path))
    except ParseError as e:
        raise Rejected(f"{path}:{e.line}:{e.col}: {e.args[0].split(': ', 1)[-1]}") from None


def _load_iso(path: str) -> iso.Module:
    try:
        return iso.load(_read(path))
    except iso.IsoSyntaxError as e:
        where = f"{e.line}:{e.col}:" if e.line is not None else ""
        raise Rejected(f"{path}:{where} {e.msg}") from None


# -- subcommands ---------------------------------------------------------------------------------

def cmd_qlc_check(a, cfg) -> Outcome:
    term = _parse_term(a.file)
    try:
        ty = typecheck(term)
    except QTypeError as e:
        return Outcome(EXIT_FALSE, {"ok": False, "type": None, "error": str(e)}, f"rejected: {e}")
    return Outcome(EXIT_OK, {"ok": True, "type": str(ty), "error": None}, str(ty))


def cmd_qlc_run(a, cfg) -> Outcome:
    try:
        checked = check(_parse_term(a.file))
    except QTypeError as e:
        raise Rejected(f"ill-typed program: {e}") from None
    term, ty = checked.term, checked.type
    rng = cfg.rng()
    counts: dict = {}
    try:
        for _ in range(cfg.shots):
            r = run_term(term, rng, fuel=a.fuel, max_qubits=cfg.max_qubits)
            key = pretty(r.value)
            counts[key] = counts.get(key, 0) + 1
    except qnum.WidthError as e:
        raise Rejected(str(e)) from None
    except (FuelExhausted, BoxError) as e:
        raise Rejected(str(e)) from None
    counts = dict(sorted(counts.items()))
    data = {"type": str(ty), "shots": cfg.shots, "counts": counts}
    if str(ty) == "bit":
        data = {"tt": counts.get("tt", 0), "ff": counts.get("ff", 0), **data}
    lines = [f"{k}: {v}" for k, v in counts.items()] + [f"shots: {cfg.shots}"]
    return Outcome(EXIT_OK, data, "\n".join(lines))


def cmd_oracle_synth(a, cfg) -> Outcome:
    term = _parse_term(a.file, oracle.parse_bool)
    inputs = a.inputs.split(",") if a.inputs else None
    try:
        lan = oracle.synth_landauer(term, inputs)
        c = lan.circuit if a.landauer else oracle.bennett_wrap(lan)
    except (oracle.OracleError, TypeError) as e:
        raise Rejected(str(e)) from None
    report = circuit_report(c)
    data = {
        "inputs": list(inputs or oracle.input_names(term)),
        "kind": "landauer" if a.landauer else "oracle",
        "circuit": circ.to_json_obj(c),
        "report": report,
    }
    if a.output:
        Path(a.output).write_text(circ.dumps(c, indent=2) + "\n", encoding="utf-8")
    text = format_report(report) if a.output else circ.dumps(c, indent=2) + "\n" + format_report(report)
    return Outcome(EXIT_OK, data, text)


def cmd_oracle_verify(a, cfg) -> Outcome:
    c = _load_circuit(a.circuit)
    term = _parse_term(a.spec, oracle.parse_bool)
    inputs = a.inputs.split(",") if a.inputs else oracle.input_names(term)
    try:
        res = oracle.verify_oracle(c, term, len(inputs), inputs)
    except oracle.OracleError as e:
        raise Rejected(str(e)) from None
    data = {"ok": res.ok, "checked": res.checked, "counterexample": res.counterexample}
    if res.ok:
        return Outcome(EXIT_OK, data, f"OK ({res.checked} basis inputs)")
    ce = res.counterexample
    return Outcome(EXIT_FALSE, data, f"FAIL on x={ce['x']} y={ce['y']}: expected {ce['expected']}, got {ce['got']}")


def cmd_usynth_householder(a, cfg) -> Outcome:
    u = _load_matrix(a.file)
    n = u.shape[0].bit_length() - 1
    if 1 << n != u.shape[0]:
        raise Rejected("matrix dimension must be a power of two")
    if n > min(cfg.max_qubits, 6):
        raise Rejected(f"{n} qubits exceed the synthesis width limit")
    try:
        c, counts = usynth.synth_householder(u)
    except usynth.SynthError as e:
        raise Rejected(str(e)) from None
    err = qnum.phase_distance(circ.to_unitary(c), u)
    report = circuit_report(c, errors={"phase_distance": err})
    data = {"circuit": circ.to_json_obj(c), "report": report, "cnot": counts["cnot"],
            "rotations": counts["rotations"], "error": err}
    if a.output:
        Path(a.output).write_text(circ.dumps(c, indent=2) + "\n", encoding="utf-8")
    text = format_report(report) if a.output else circ.dumps(c, indent=2) + "\n" + format_report(report)
    status = EXIT_OK if err <= max(cfg.tolerance, 1e-6) else EXIT_INTERNAL
    return Outcome(status, data, text)


def cmd_usynth_ion(a, cfg) -> Outcome:
    u = _load_matrix(a.file)
    if a.layers < 1:
        raise UsageError("--layers must be at least 1")
    try:
        res = usynth.bfgs_synth(u, a.layers, cfg.rng(), budget=a.budget, restarts=a.restarts)
    except usynth.SynthError as e:
        raise Rejected(str(e)) from None
    theta = [float(x) for x in res.theta]
    data = {"layers": a.layers, "theta": theta, "error": res.error, "iterations": res.iterations,
            "converged": res.converged}
    lines = [f"{x:.17g}" for x in theta] + [f"error: {res.error:.6e}", f"iterations: {res.iterations}",
                                             f"converged: {str(res.converged).lower()}"]
    return Outcome(EXIT_OK if res.converged else EXIT_FALSE, data, "\n".join(lines))


def cmd_usynth_bound(a, cfg) -> Outcome:
    try:
        b = usynth.ms_layer_lower_bound(a.n)
    except usynth.SynthError as e:
        raise UsageError(str(e)) from None
    return Outcome(EXIT_OK, {"n": a.n, "bound": b}, str(b))


def cmd_pathsum_verify(a, cfg) -> Outcome:
    c1, c2 = _load_circuit(a.a), _load_circuit(a.b)
    try:
        v = pathsum.equiv(c1, c2, tol=max(cfg.tolerance, 1e-8), max_qubits=min(cfg.max_qubits, 6))
    except pathsum.Unsupported as e:
        return Outcome(EXIT_FALSE, {"verdict": "UNSUPPORTED", "witness": None, "reason": str(e)},
                       f"UNSUPPORTED: {e}")
    except (pathsum.PathSumError, qnum.WidthError) as e:
        raise Rejected(str(e)) from None
    if v.equivalent:
        return Outcome(EXIT_OK, {"verdict": "EQUIV", "witness": None, "reason": None}, "EQUIV")
    return Outcome(EXIT_FALSE, {"verdict": "DISTINCT", "witness": list(v.witness), "reason": None}, str(v))


def _pick_iso(mod: iso.Module, a) -> iso.Iso:
    try:
        return mod.iso(a.iso or mod.program.last_iso())
    except (iso.IsoError, iso.IsoSyntaxError) as e:
        raise Rejected(str(e)) from None


def cmd_iso_check(a, cfg) -> Outcome:
    mod = _load_iso(a.file)
    own = iso.parse_program(_read(a.file)).order
    results = []
    for name in own:
        try:
            r = iso.check_iso(mod.generic(name), depth=a.depth, tol=cfg.tolerance)
            results.append({"name": name, "ok": r.ok, "type": r.type, "quantum": r.quantum,
                            "errors": r.errors, "warnings": r.warnings})
        except iso.IsoError as e:
            results.append({"name": name, "ok": False, "type": None, "quantum": False,
                            "errors": [str(e)], "warnings": []})
    ok = all(r["ok"] for r in results)
    lines = []
    for r in results:
        lines.append(f"ok {r['name']} : {r['type']}" if r["ok"] else f"rejected {r['name']}")
        lines += [f"  error: {e}" for e in r["errors"]] + [f"  warning: {w}" for w in r["warnings"]]
    return Outcome(EXIT_OK if ok else EXIT_FALSE, {"ok": ok, "isos": results}, "\n".join(lines))


def cmd_iso_run(a, cfg) -> Outcome:
    mod = _load_iso(a.file)
    f = _pick_iso(mod, a)
    try:
        value = iso.AmpValue.parse(iso.parse_expr(a.value))
        dom = f.type[0]
        for _, v in value.terms:
            if not iso.value_has_type(v, dom):
                raise Rejected(f"value {iso.show(v)} does not have type {dom}")
        out = iso.apply_quantum(f, value, fuel=a.fuel)
    except iso.IsoSyntaxError as e:
        raise Rejected(f"--value: {e}") from None
    except iso.IsoError as e:
        raise Rejected(str(e)) from None
    terms = [[a_.real, a_.imag, iso.show(v)] for a_, v in out.terms]
    data = {"iso": f.name, "input": str(value), "output": str(out), "terms": terms, "norm": out.norm()}
    return Outcome(EXIT_OK, data, str(out))


def cmd_iso_matrix(a, cfg) -> Outcome:
    mod = _load_iso(a.file)
    f = _pick_iso(mod, a)
    try:
        m = iso.to_matrix(f, depth=a.depth, fuel=a.fuel)
    except iso.IsoError as e:
        raise Rejected(str(e)) from None
    if m.shape[0] != m.shape[1]:
        raise Rejected(f"matrix is {m.shape[0]}x{m.shape[1]}, not square")
    unitary = qnum.is_unitary(m, cfg.tolerance) if m.size else True
    basis = [iso.show(v) for v in iso.enumerate_values(f.type[0], a.depth)]
    data = {"iso": f.name, "dim": m.shape[0], "basis": basis, "unitary": unitary,
            "rows": [[[z.real, z.imag] for z in row] for row in m]}
    return Outcome(EXIT_OK if unitary else EXIT_FALSE, data, qnum.format_matrix_text(m).rstrip("\n"))


# -- argument parsing ---------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=1024)
    p.add_argument("--max-qubits", type=int, default=qnum.MAX_QUBITS)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--json", action="store_true", help="emit one JSON object on stdout")
    p.add_argument("--timings", action="store_true", help="add wall-clock timings (human output only)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    top = argparse.ArgumentParser(prog="qlang", description="Quantum programming toolchain.")
    groups = top.add_subparsers(dest="group", required=True)

    def leaf(group_parsers, name, fn, help_):
        p = group_parsers.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn, cmd=name)
        return p

    g = groups.add_parser("qlc", help="quantum lambda calculus").add_subparsers(dest="sub", required=True)
    leaf(g, "check", cmd_qlc_check, "type-check a program").add_argument("file")
    p = leaf(g, "run", cmd_qlc_run, "run a program for --shots shots")
    p.add_argument("file")
    p.add_argument("--fuel", type=int, default=100_000)

    g = groups.add_parser("oracle", help="oracle synthesis").add_subparsers(dest="sub", required=True)
    p = leaf(g, "synth", cmd_oracle_synth, "compile a boolean term to a reversible oracle")
    p.add_argument("file")
    p.add_argument("--inputs", help="comma-separated input order")
    p.add_argument("--landauer", action="store_true", help="emit the garbage-producing embedding")
    p.add_argument("-o", "--output", help="also write the circuit JSON to this file")
    p = leaf(g, "verify", cmd_oracle_verify, "check a circuit against a boolean term")
    p.add_argument("circuit")
    p.add_argument("spec")
    p.add_argument("--inputs", help="comma-separated input order")

    g = groups.add_parser("usynth", help="unitary synthesis").add_subparsers(dest="sub", required=True)
    p = leaf(g, "householder", cmd_usynth_householder, "exact CNOT+rotation synthesis")
    p.add_argument("file")
    p.add_argument("-o", "--output", help="also write the circuit JSON to this file")
    p = leaf(g, "ion", cmd_usynth_ion, "fit the trapped-ion layer ansatz with BFGS")
    p.add_argument("file")
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--restarts", type=int, default=5)
    leaf(g, "bound", cmd_usynth_bound, "MS-layer lower bound").add_argument("--n", type=int, required=True)

    g = groups.add_parser("pathsum", help="path-sum equivalence").add_subparsers(dest="sub", required=True)
    p = leaf(g, "verify", cmd_pathsum_verify, "decide circuit equivalence up to global phase")
    p.add_argument("a")
    p.add_argument("b")

    g = groups.add_parser("iso", help="reversible iso language").add_subparsers(dest="sub", required=True)
    p = leaf(g, "check", cmd_iso_check, "check every iso declared in a file")
    p.add_argument("file")
    p.add_argument("--depth", type=int, default=iso.core.DEFAULT_DEPTH)
    p = leaf(g, "run", cmd_iso_run, "apply an iso to a value")
    p.add_argument("file")
    p.add_argument("--value", required=True)
    p.add_argument("--iso", help="iso name or instance such as map[not] (default: main or the last one)")
    p.add_argument("--fuel", type=int, default=iso.core.DEFAULT_FUEL)
    p = leaf(g, "matrix", cmd_iso_matrix, "print the matrix of an iso")
    p.add_argument("file")
    p.add_argument("--iso")
    p.add_argument("--depth", type=int, default=iso.core.DEFAULT_DEPTH)
    p.add_argument("--fuel", type=int, default=iso.core.DEFAULT_FUEL)
    return top


def dispatch(argv: list[str], stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    command = f"{a.group} {a.cmd}"
    header = {"schema": f"qlang/{a.group}-{a.cmd}/{SCHEMA_VERSION}", "command": command}
    try:
        cfg = RunConfig(a.seed, a.shots, a.max_qubits, a.tol, "json" if a.json else "human")
    except UsageError as e:
        print(f"usage error: {e}", file=stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        out = a.fn(a, cfg)
    except UsageError as e:
        return _fail(header, cfg, EXIT_USAGE, f"usage error: {e}", stdout, stderr)
    except Rejected as e:
        return _fail(header, cfg, EXIT_FALSE, str(e), stdout, stderr)
    except Exception as e:  # invariant violation inside the toolchain
        return _fail(header, cfg, EXIT_INTERNAL, f"internal error: {type(e).__name__}: {e}", stdout, stderr)
    if cfg.output == "json":
        obj = {**header, "config": cfg.as_json(), "status": out.status, **out.data}
        print(json.dumps(obj, indent=2), file=stdout)
    else:
        print(out.text, file=stdout)
        if a.timings:
            print(f"time: {time.perf_counter() - t0:.3f}s", file=stdout)
    return out.status


def _fail(header, cfg, status, msg, stdout, stderr) -> int:
    if cfg.output == "json":
        obj = {**header, "config": cfg.as_json(), "status": status, "error": msg}
        print(json.dumps(obj, indent=2), file=stdout)
    else:
        print(msg, file=stderr)
    return status


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
