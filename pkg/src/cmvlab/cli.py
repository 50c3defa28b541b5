"""``cmvlab`` command-line front end.

Every subcommand prints a JSON document on stdout (or writes it to ``--out``).
Failures print a JSON error record on stderr and exit with

    0 ok, 2 invariant violated, 3 precision exhausted, 4 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .cmv import CmvOperator, VerblunskySequence
from .contfrac import Frequency, cf_expand, convergents
from .errors import CmvlabError, DomainError, InvariantViolation, SchemaMismatch
from .gordon import (
    BASIS_STATES,
    check_three_block,
    check_two_block,
    eigenvalue_excluder,
    gordon_sequence_test,
    rotcode_phase_measure,
    three_block_phase_fraction,
)
from .store import dumps, envelope, read_scan, scan_document, write_json, write_scan
from .tracemap import spectrum_scan
from .transfer import (
    check_sgz_identity,
    det2,
    gz_cocycle,
    norm2,
    one_step_identity_deviation,
    perturbation_gap,
    szego_cocycle,
)
from .words import (
    RotationInterval,
    factor_complexity,
    mechanical_word,
    rotation_word,
    sturmian_word,
    substitution_word,
)

GLUE_OPTS = ("--beta", "--gamma", "--z", "--boundary", "--phi", "--range", "--n0", "--n1", "--n", "--steps")


class ConfigError(DomainError):
    """Malformed command line or configuration file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def parse_complex(text) -> complex:
    """``"re,im"``, ``"re"`` or a Python complex literal."""
    if isinstance(text, (int, float, complex)):
        return complex(text)
    if isinstance(text, (list, tuple)) and len(text) == 2:
        return complex(float(text[0]), float(text[1]))
    s = str(text).strip()
    try:
        if "," in s:
            re_, im_ = s.split(",")
            return complex(float(re_), float(im_))
        return complex(s.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"cannot parse complex value {text!r}")


def parse_range(text: str) -> range:
    """``"3-8"`` or ``"3:9"`` (half open) or ``"5"``."""
    s = str(text).strip()
    try:
        if ":" in s:
            a, b = s.split(":")
            return range(int(a), int(b))
        if "-" in s[1:]:
            a, b = s[0] + s[1:].split("-", 1)[0], s[1:].split("-", 1)[1]
            return range(int(a), int(b) + 1)
        return range(int(s), int(s) + 1)
    except ValueError:
        raise ConfigError(f"cannot parse range {text!r}")


def _theta(args):
    if getattr(args, "cf", None):
        terms = [int(t) for t in args.cf.split(",") if t.strip()]
        return Frequency.from_cf(terms)
    return Frequency.coerce(args.theta)


def _fix_argv(argv):
    """Glue ``--gamma -0.5,0`` into ``--gamma=-0.5,0`` so argparse accepts it."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in GLUE_OPTS and i + 1 < len(argv) and argv[i + 1][:1] == "-" and argv[i + 1][1:2] in "0123456789.":
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


@dataclass
class ExperimentConfig:
    """Inputs of a reproducible ``run``."""

    beta: complex = 0.5
    gamma: complex = -0.5
    theta: str = "golden"
    phi: float | None = None
    grid: int = 4096
    budget: int = 18
    refine: int = 0
    k_range: tuple = (3, 8)
    max_points: int = 128
    seed: int = 0
    out_dir: str = "."
    plot: bool = True
    allow_degenerate: bool = False

    def __post_init__(self):
        self.beta, self.gamma = parse_complex(self.beta), parse_complex(self.gamma)
        if abs(self.beta) >= 1 or abs(self.gamma) >= 1:
            raise ConfigError("beta and gamma must lie in the open unit disk")
        if self.beta == self.gamma and not self.allow_degenerate:
            raise ConfigError("beta equals gamma; set allow_degenerate to run the constant case")
        self.grid, self.budget = int(self.grid), int(self.budget)
        if self.grid < 64 or self.grid & (self.grid - 1):
            raise ConfigError("grid must be a power of two, at least 64")
        if self.budget < 5:
            raise ConfigError("budget must be >= 5")
        self.k_range = tuple(int(k) for k in self.k_range)
        if len(self.k_range) != 2 or self.k_range[0] < 3 or self.k_range[1] < self.k_range[0]:
            raise ConfigError("k_range must be [k_lo, k_hi] with 3 <= k_lo <= k_hi")
        self.theta = str(self.theta)

    @classmethod
    def from_dict(cls, d: dict):
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise SchemaMismatch(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}")
        if not isinstance(d, dict):
            raise SchemaMismatch("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["k_range"] = list(self.k_range)
        return d


def _emit(doc, out=None):
    text = dumps(doc)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _check_scan_invariants(scan) -> list:
    """Problems with a scan that contradict proven identities (empty when clean)."""
    problems = []
    meas = scan.measure_by_budget()
    if any(b > a + 1e-12 for a, b in zip(meas, meas[1:])):
        problems.append("bounded measure increased with budget")
    bounded = scan.bounded_mask()
    tol = 1e-8 * np.maximum(1.0, (scan.trace_sup / 2) ** 3)
    bad = bounded & ~(scan.invariant_drift <= tol)
    if bad.any():
        problems.append(f"Fricke-Vogt drift above tolerance at {int(bad.sum())} bounded points")
    return problems


# -- subcommands ---------------------------------------------------------

def cmd_cf(args):
    freq = _theta(args)
    a = cf_expand(freq, args.terms)
    conv = convergents(a)
    _emit({"theta": freq.name or str(freq.approx), "a": list(a), "terminated": a.terminated,
           "p": conv.p, "q": conv.q}, args.out)


def cmd_word(args):
    freq = _theta(args)
    if args.range:
        if ":" not in args.range:
            raise ConfigError("--range must be n0:n1")
        r = parse_range(args.range)
        args.n0, args.n1 = r.start, r.stop
    if args.variant == "coding" and not args.interval:
        args.interval = "1-theta,1"
    if args.substitution is not None:
        w = substitution_word(freq.cf(max(args.substitution, 1)), args.substitution)
    elif args.interval:
        w = rotation_word(freq, args.phi if args.phi is not None else 0.0,
                          RotationInterval.parse(args.interval), args.n0, args.n1)
    elif args.phi is None:
        w = sturmian_word(freq, args.n0, args.n1)
    else:
        w = mechanical_word(freq, args.phi, args.n0, args.n1, args.variant)
    doc = {"word": str(w), "start": w.start, "length": len(w), "provenance": w.provenance}
    if args.complexity:
        doc["complexity"] = {str(n): factor_complexity(w, n) for n in range(1, args.complexity + 1)}
    _emit(doc, args.out)


MAX_SEQUENCE_SITES = 2_000_000


def _sequence(args, n0, n1):
    return VerblunskySequence.sturmian(parse_complex(args.beta), parse_complex(args.gamma), _theta(args),
                                       n0, n1, phi=args.phi, allow_degenerate=args.allow_degenerate)


def cmd_cmv(args):
    if args.window:
        args.n0, args.n1 = -(args.window // 2), args.window - args.window // 2
    t_start = args.n0 + (args.n0 % 2)
    # the coefficient window grows to cover a truncation longer than the requested sites
    n1 = max(args.n1, t_start + args.truncate) if args.truncate else args.n1
    seq = _sequence(args, args.n0, n1)
    op = CmvOperator(seq)
    doc = {"n0": args.n0, "n1": n1, "alpha": [complex(a) for a in seq.values]}
    if args.dump_matrix:
        D = op.dense()
        with open(args.dump_matrix, "w", encoding="utf-8") as fh:
            for row in D:
                fh.write(",".join(f"{v.real:.17g}{v.imag:+.17g}j" for v in row) + "\n")
        doc["matrix_file"] = args.dump_matrix
        doc["matrix_sites"] = [seq.start + 1, seq.stop - 1]
    if args.truncate:
        ev = op.truncated_spectrum(args.truncate, parse_complex(args.boundary), t_start)
        doc["truncation_sites"] = [t_start, t_start + args.truncate]
        doc["eigen_angles"] = [float(x) for x in np.mod(np.angle(ev), 2 * np.pi)]
    _emit(doc, args.out)


def cmd_transfer(args):
    z = parse_complex(args.z)
    n = args.n
    lo, hi = min(0, n), max(0, n, 2 * abs(n))
    seq = _sequence(args, lo, hi + 1)
    mat = szego_cocycle(seq, n, 0, z) if args.kind == "szego" else gz_cocycle(seq, n, 0, z)
    doc = {"kind": args.kind, "n": n, "z": z, "matrix": [[complex(v) for v in row] for row in mat]}
    checks = set(args.check or [])
    if args.check_identity:
        checks.add("identity")
    if "identity" in checks and n > 0:
        doc["identity_deviation"] = check_sgz_identity(seq, z, n)
        doc["one_step_deviation"] = float(one_step_identity_deviation(seq.alpha_at(1), seq.alpha_at(0), z))
    if "cocycle" in checks:
        Z, Zi = gz_cocycle(seq, n, 0, z), gz_cocycle(seq, 0, n, z)
        doc["cocycle_inverse_deviation"] = float(norm2(Z @ Zi - np.eye(2)))
        doc["det"] = complex(det2(Z))
    if "perturbation" in checks and n > 0:
        rng = np.random.default_rng(args.seed)
        vals = seq.segment(0, n)
        r = max(abs(parse_complex(args.beta)), abs(parse_complex(args.gamma)))
        noise = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
        tilde = vals + args.delta * noise / np.sqrt(2)
        scale = np.minimum(1.0, r / np.maximum(np.abs(tilde), 1e-300))
        tilde = tilde * scale
        rep = perturbation_gap(vals, tilde, z, n, r)
        doc["perturbation"] = {"lhs": rep.lhs, "bound": rep.bound, "sharp_bound": rep.sharp_bound,
                               "delta": rep.delta, "r": rep.r, "ok": rep.ok}
        if not rep.ok:
            raise InvariantViolation(f"perturbation bound violated: {rep.lhs} > {rep.bound}")
    _emit(doc, args.out)


def _run_scan(cfg_beta, cfg_gamma, freq, grid, budget, refine):
    if grid < 64 or grid & (grid - 1):
        raise ConfigError("grid must be a power of two, at least 64")
    cf = freq.cf(budget)
    if len(cf) < budget:
        raise ConfigError(f"theta has only {len(cf)} partial quotients, budget needs {budget}")
    return spectrum_scan(cfg_beta, cfg_gamma, cf, grid, budget, refine)


def cmd_scan(args):
    freq = _theta(args)
    beta, gamma = parse_complex(args.beta), parse_complex(args.gamma)
    scan = _run_scan(beta, gamma, freq, args.grid, args.budget, args.refine)
    config = {"beta": beta, "gamma": gamma, "theta": freq.name, "grid": args.grid,
              "budget": args.budget, "refine": args.refine}
    if args.out:
        write_scan(args.out, scan, config)
    else:
        _emit(scan_document(scan, config))
    if args.plot:
        from .plotting import render_scan

        render_scan(scan, args.plot, title=f"theta={freq.name}")
    problems = _check_scan_invariants(scan)
    if problems:
        raise InvariantViolation("; ".join(problems))


def cmd_gordon(args):
    beta, gamma = parse_complex(args.beta), parse_complex(args.gamma)
    freq = _theta(args)
    violations = 0
    if args.mode == "exclude":
        scan = read_scan(args.scan) if args.scan else _run_scan(beta, gamma, freq, args.grid, args.budget, 0)
        summary = eigenvalue_excluder(beta, gamma, freq, scan, parse_range(args.k_range), args.max_points)
        doc = summary.to_dict()
        violations = len(summary.failures)
    elif args.mode in ("two", "three"):
        if args.scale is None:
            raise ConfigError("--scale is required for modes two and three")
        n = args.scale
        z = parse_complex(args.z)
        seq = _sequence(args, -n, 2 * n)
        if args.mode == "two":
            checks = [check_two_block(seq, z, n, phi) for phi in BASIS_STATES]
        else:
            checks = [check_three_block(seq, z, n, phi) for phi in BASIS_STATES]
        doc = {"mode": args.mode, "checks": [c.to_dict() for c in checks]}
        violations = sum(not c.bound_ok for c in checks)
    elif args.mode == "sequence":
        q = convergents(freq.cf(args.levels + 1), args.levels).q
        scales = sorted(set(q[3:]))
        if 3 * scales[-1] > MAX_SEQUENCE_SITES:
            raise ConfigError(f"q_{args.levels} = {scales[-1]} needs more than {MAX_SEQUENCE_SITES} sites; "
                              "lower --levels")
        seq = _sequence(args, -scales[-1], 2 * scales[-1])
        rep = gordon_sequence_test(seq, scales, [float(c) for c in args.C.split(",")], args.tol)
        doc = {"mode": "sequence", "scales": rep.scales, "defects": rep.defects,
               "log_values": {str(k): v for k, v in rep.log_values.items()}, "passes": rep.summary}
        if args.phases:
            interval = RotationInterval.parse(args.interval) if args.interval else RotationInterval.sturmian()
            doc["phase_fraction"] = three_block_phase_fraction(freq, interval, args.levels, args.phases, args.seed)
            doc["phase_measure"] = asdict(rotcode_phase_measure(freq.cf(args.levels + 1),
                                                                range(1, args.levels)))
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown mode {args.mode}")
    _emit(envelope("gordon-certificates", doc), args.out)
    if violations and args.fail_on_violation:
        raise InvariantViolation(f"{violations} Gordon bound(s) violated")


def cmd_plot(args):
    from .plotting import render_scan

    scan = read_scan(args.scan)
    render_scan(scan, args.out, title=args.title)
    _emit({"svg": args.out, "rows": int(scan.angles.size)})


def run(config: ExperimentConfig) -> dict:
    """Scan, certify and plot; returns the paths written.

    Raises InvariantViolation after writing everything when any check fails.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    freq = Frequency.coerce(config.theta)
    scan = _run_scan(config.beta, config.gamma, freq, config.grid, config.budget, config.refine)
    echo = config.to_dict()
    paths = {"scan_json": str(out / "scan.json"), "scan_csv": str(out / "scan.csv"),
             "certificates": str(out / "certificates.json")}
    write_scan(paths["scan_json"], scan, echo)
    write_scan(paths["scan_csv"], scan)
    lo, hi = config.k_range
    summary = eigenvalue_excluder(config.beta, config.gamma, freq, scan, range(lo, hi + 1), config.max_points)
    write_json(paths["certificates"], envelope("gordon-certificates", summary.to_dict(), echo))
    if config.plot:
        from .plotting import render_scan

        paths["svg"] = str(out / "spectrum.svg")
        render_scan(scan, paths["svg"], title=f"theta={freq.name}")
    problems = _check_scan_invariants(scan)
    if summary.failures:
        problems.append(f"{len(summary.failures)} Gordon bound(s) violated")
    if problems:
        raise InvariantViolation("; ".join(problems))
    return paths


def cmd_run(args):
    cfg = ExperimentConfig.load(args.config)
    if args.out_dir:
        cfg.out_dir = args.out_dir
    _emit(run(cfg))


# -- parser --------------------------------------------------------------

def _add_theta(p, default="golden"):
    p.add_argument("--theta", default=default, help="golden, silver, cf:a1,a2,... or a decimal")
    p.add_argument("--cf", help="periodic partial quotients, e.g. 1,2")


def _add_coeffs(p):
    p.add_argument("--beta", default="0.5", help="re,im")
    p.add_argument("--gamma", default="-0.5", help="re,im")
    p.add_argument("--phi", type=float, default=None, help="phase; default theta")
    p.add_argument("--allow-degenerate", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cmvlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cmvlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("cf", help="continued fraction digits and convergents")
    _add_theta(s)
    s.add_argument("--terms", type=int, default=10)
    s.add_argument("--out")
    s.set_defaults(func=cmd_cf)

    s = sub.add_parser("word", help="mechanical, rotation or substitution words")
    _add_theta(s)
    s.add_argument("--phi", type=float, default=None)
    s.add_argument("--variant", choices=["floor", "ceiling", "coding"], default="floor")
    s.add_argument("--n0", type=int, default=0)
    s.add_argument("--n1", type=int, default=34)
    s.add_argument("--range", help="n0:n1, overrides --n0/--n1")
    s.add_argument("--interval", help="rotation-coding interval l,r (half open)")
    s.add_argument("--substitution", type=int, default=None, help="emit v_k")
    s.add_argument("--complexity", type=int, default=0, help="report p(n) for n up to this")
    s.add_argument("--out")
    s.set_defaults(func=cmd_word)

    s = sub.add_parser("cmv", help="Verblunsky window, dense block and truncated spectrum")
    _add_theta(s)
    _add_coeffs(s)
    s.add_argument("--n0", type=int, default=-32)
    s.add_argument("--n1", type=int, default=32)
    s.add_argument("--window", type=int, default=None, help="symmetric window of N sites, overrides --n0/--n1")
    s.add_argument("--dump-matrix", help="CSV file for the dense block")
    s.add_argument("--truncate", type=int, default=0, help="size of a unitary truncation")
    s.add_argument("--boundary", default="1", help="unimodular boundary parameter")
    s.add_argument("--out")
    s.set_defaults(func=cmd_cmv)

    s = sub.add_parser("transfer", help="Szego or GZ cocycle")
    _add_theta(s)
    _add_coeffs(s)
    s.add_argument("--z", default="1,0")
    s.add_argument("--n", "--steps", dest="n", type=int, default=10)
    s.add_argument("--kind", choices=["gz", "szego"], default="gz")
    s.add_argument("--check", action="append", choices=["identity", "cocycle", "perturbation"])
    s.add_argument("--check-identity", action="store_true")
    s.add_argument("--delta", type=float, default=1e-6, help="perturbation size for --check perturbation")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_transfer)

    s = sub.add_parser("scan", help="trace-map spectrum scan")
    _add_theta(s)
    s.add_argument("--beta", default="0.5")
    s.add_argument("--gamma", default="-0.5")
    s.add_argument("--grid", type=int, default=4096)
    s.add_argument("--budget", type=int, default=18)
    s.add_argument("--refine", type=int, default=0)
    s.add_argument("--out", help="scan.json or scan.csv")
    s.add_argument("--plot", help="also write an SVG here")
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("gordon", help="Gordon certificates")
    _add_theta(s)
    _add_coeffs(s)
    s.add_argument("--mode", choices=["two", "three", "sequence", "exclude"], default="exclude")
    s.add_argument("--z", default="1,0")
    s.add_argument("--scale", type=int, default=None)
    s.add_argument("--scan", help="scan.json to take bounded points from")
    s.add_argument("--grid", type=int, default=4096)
    s.add_argument("--budget", type=int, default=18)
    s.add_argument("--k-range", default="3-8")
    s.add_argument("--max-points", type=int, default=128)
    s.add_argument("--levels", type=int, default=10, help="convergent levels for sequence mode")
    s.add_argument("--C", default="1.5,2", help="comma-separated constants for sequence mode")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--phases", type=int, default=0, help="sample this many phases (sequence mode)")
    s.add_argument("--interval", help="rotation-coding interval for phase sampling")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--fail-on-violation", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_gordon)

    s = sub.add_parser("plot", help="render a scan file as SVG")
    s.add_argument("scan")
    s.add_argument("--out", default="spectrum.svg")
    s.add_argument("--title")
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("run", help="full experiment from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    argv = _fix_argv(list(sys.argv[1:] if argv is None else argv))
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except CmvlabError as exc:
        return _fail(type(exc).__name__, str(exc), exc.exit_code)
    except (ValueError, TypeError) as exc:
        return _fail("ConfigError", str(exc), ConfigError.exit_code)
    return 0


def _fail(name: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": name, "message": message, "exit_code": code}) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
