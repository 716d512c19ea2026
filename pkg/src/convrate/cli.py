"""Command-line front end.

Subcommands: ``analyze`` (build abstraction parameters), ``mk-check``
(closed-form (m,K) verdict), ``simulate`` (plant/abstraction co-simulation
to CSV), ``jsr`` (brute-force averaged spectral radius), ``schedule``
(online gate decisions to CSV), and ``repro-counterexample`` (recompute the
built-in demo system's characteristic values).

Exit codes: 0 success / property proven; 1 not proven, guarantee violated,
alarm fired, or analysis infeasible; 2 usage, parse, or parameter errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import counterexample
from .builders import build_robustness_abstraction, lyapunov_abstraction
from .errors import ParameterError
from .io import DocumentError, load_system, params_to_document
from .mk import MkConstraint, mk_verdict
from .model import AbstractionParams, SystemModel
from .scheduler import (
    POLICIES,
    ExponentialTarget,
    PracticalTarget,
    run_schedule,
    schedule_csv_lines,
)
from .sequences import (
    admissible_prefixes,
    averaged_spectral_radius,
    transition_product,
    validate_mk,
    worst_case_sequence,
)
from .simulate import check_guarantee, co_simulate, trace_csv_lines


def _parse_matrix_arg(value: str, flag: str):
    """Inline JSON matrix, or the path of a JSON file holding one."""
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        path = Path(value)
        if path.exists():
            try:
                return json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise DocumentError(f"{flag}: {value}: {exc.msg}") from None
        raise DocumentError(f"{flag}: expected inline JSON or an existing file, got {value!r}") from None


def _build_params(system: SystemModel, args) -> AbstractionParams:
    if args.method == "robust":
        if args.rho is None:
            raise ParameterError("--rho is required for --method robust")
        return build_robustness_abstraction(system, args.rho, beta=args.beta)
    Q = None
    if getattr(args, "Q", None) is not None:
        Q = _parse_matrix_arg(args.Q, "--Q")
    return lyapunov_abstraction(system, Q)


def _parse_sigma(text: str, steps: int | None) -> tuple[int, ...]:
    if text.startswith("mk-worst:"):
        try:
            m_text, k_text = text[len("mk-worst:"):].split(",")
            mk = MkConstraint(int(m_text), int(k_text))
        except (ValueError, TypeError):
            raise DocumentError(f"--sigma: malformed pattern {text!r}, expected mk-worst:m,K") from None
        if steps is None:
            raise ParameterError("--steps is required with an mk-worst sigma pattern")
        return worst_case_sequence(mk, steps)
    path = Path(text)
    if path.exists():
        text = path.read_text().replace("\n", ",").replace(" ", ",")
    try:
        entries = tuple(int(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise DocumentError(f"--sigma: could not parse mode list {text!r}") from None
    if not entries:
        raise DocumentError("--sigma: empty mode sequence")
    return entries


def _parse_x0(text: str, system: SystemModel) -> np.ndarray:
    if text.startswith("dominant:"):
        modes = tuple(int(tok) for tok in text[len("dominant:"):].split(","))
        product = transition_product(system, modes)
        values, vectors = np.linalg.eig(product)
        top = int(np.argmax(np.abs(values)))
        vector = vectors[:, top]
        if np.max(np.abs(vector.imag)) > 1e-9 * np.max(np.abs(vector.real) + 1e-300):
            raise ParameterError(
                "--x0 dominant: the dominant eigenvector is complex; pass coordinates explicitly"
            )
        vector = vector.real
        return vector / np.linalg.norm(vector)
    try:
        return np.array([float(tok) for tok in text.split(",")])
    except ValueError:
        raise DocumentError(f"--x0: could not parse vector {text!r}") from None


def _make_disturbances(text: str, steps: int, system: SystemModel):
    """Returns (disturbance array or None, w_bar series or None, meta)."""
    if text == "zero":
        return None, None, {"disturbance": "zero"}
    if text.startswith("const:"):
        magnitude = float(text[len("const:"):])
        if magnitude < 0:
            raise ParameterError("--w const: magnitude must be >= 0")
        w = np.zeros((steps, system.n))
        w[:, 0] = magnitude
        return w, np.full(steps, magnitude), {"disturbance": text}
    if text.startswith("seed:"):
        seed = int(text[len("seed:"):])
        bound = system.disturbance_bound
        if bound is None:
            raise ParameterError(
                "--w seed: the system document declares no disturbance_bound"
            )
        rng = np.random.default_rng(seed)
        directions = rng.standard_normal((steps, system.n))
        norms = np.linalg.norm(directions, axis=1)
        norms[norms == 0] = 1.0
        radii = bound * rng.random(steps)
        w = directions / norms[:, None] * radii[:, None]
        return w, np.full(steps, bound), {"disturbance": text, "seed": seed}
    raise DocumentError(f"--w: expected zero, const:<v> or seed:<s>, got {text!r}")


def _emit(lines: list[str], out: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_analyze(args) -> int:
    system = load_system(args.system)
    params = _build_params(system, args)
    print(f"method: {params.method}")
    print(f"alpha: {params.alpha!r}")
    print(f"beta: {params.beta!r}")
    for mode in params.mode_ids():
        label = system.labels.get(mode, f"mode-{mode}")
        print(f"rho[{mode}]: {params.rho[mode]!r}  ({label})")
    for key, value in params.diagnostics.items():
        if key != "warnings":
            print(f"diagnostics.{key}: {value}")
    for warning in params.diagnostics.get("warnings", []):
        print(f"warning: {warning}", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(json.dumps(params_to_document(params), indent=2) + "\n")
    return 0


def cmd_mk_check(args) -> int:
    system = load_system(args.system)
    params = _build_params(system, args)
    mk = MkConstraint(args.m, args.K)
    verdict = mk_verdict(params, mk, r0=args.r0)
    record = {
        "m": mk.m,
        "K": mk.K,
        "m_bar": mk.m_bar,
        "rho_tilde": verdict.rho_tilde,
        "alpha_tilde": verdict.alpha_tilde,
        "combined_overshoot": verdict.combined_overshoot,
        "proven_stable": verdict.proven_stable,
    }
    if verdict.safe_initial_radius is not None:
        record["safe_initial_radius"] = verdict.safe_initial_radius
    if args.json:
        print(json.dumps(record, indent=2))
    else:
        print(f"(m,K) = ({mk.m},{mk.K}), up to {mk.m_bar} skips per window")
        print(f"rho_tilde: {verdict.rho_tilde!r}")
        print(f"alpha_tilde: {verdict.alpha_tilde!r}")
        print(f"combined overshoot alpha*alpha_tilde: {verdict.combined_overshoot!r}")
        if verdict.safe_initial_radius is not None:
            print(f"safe initial radius: {verdict.safe_initial_radius!r}")
        if verdict.proven_stable:
            print("verdict: proven stable")
        else:
            print("verdict: not proven (the criterion is sufficient only; "
                  "run 'convrate jsr' for brute-force evidence)")
    return 0 if verdict.proven_stable else 1


def cmd_simulate(args) -> int:
    system = load_system(args.system)
    params = _build_params(system, args)
    seq = _parse_sigma(args.sigma, args.steps)
    steps = args.steps if args.steps is not None else len(seq)
    if steps > len(seq):
        raise ParameterError(f"--steps {steps} exceeds the sigma sequence length {len(seq)}")
    x0 = _parse_x0(args.x0, system) if args.x0 else np.ones(system.n) / math.sqrt(system.n)
    disturbances, w_bar, meta = _make_disturbances(args.w, steps, system)
    trace = co_simulate(system, params, seq, x0, disturbances, w_bar, steps, meta)
    _emit(trace_csv_lines(trace), args.out)
    if trace.diverged:
        print(f"trace diverged: vbar exceeded the overflow guard at step {len(trace)}",
              file=sys.stderr)
    report = check_guarantee(trace, rel_tol=args.rel_tol)
    if not report.holds:
        print(f"guarantee violated at k={report.first_violation}: "
              f"|x_k| > vbar_k (max ratio {report.max_ratio:.6g})", file=sys.stderr)
        return 1
    print(f"guarantee holds; max |x_k|/vbar_k = {report.max_ratio:.6g}", file=sys.stderr)
    return 0


def _jsr_worker(payload):
    system, mk, length, max_length, prefix = payload
    result = averaged_spectral_radius(system, mk, length, max_length=max_length,
                                      prefix=prefix)
    return result.rho_hat, result.sequence, result.count


def cmd_jsr(args) -> int:
    system = load_system(args.system)
    mk = MkConstraint(args.m, args.K)
    if args.jobs > 1 and len(system.modes) > 1:
        depth = 1
        while depth < min(args.length, 10) and len(admissible_prefixes(mk, depth)) < 2 * args.jobs:
            depth += 1
        prefixes = admissible_prefixes(mk, depth)
        payloads = [(system, mk, args.length, args.max_length, prefix) for prefix in prefixes]
        best = (-1.0, (), 0)
        total = 0
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for rho_hat, sequence, count in pool.map(_jsr_worker, payloads):
                total += count
                if rho_hat > best[0]:
                    best = (rho_hat, sequence, count)
        rho_hat, sequence = best[0], best[1]
        count = total
    else:
        result = averaged_spectral_radius(system, mk, args.length,
                                          max_length=args.max_length)
        rho_hat, sequence, count = result.rho_hat, result.sequence, result.count
    print(f"rho_hat_{args.length}({mk.m},{mk.K}) = {rho_hat!r}")
    print("attained by sigma = " + ",".join(str(s) for s in sequence))
    print(f"sequences evaluated: {count}")
    if rho_hat >= 1.0:
        print("rho_hat >= 1: some admissible length-"
              f"{args.length} product fails to contract; if the attaining "
              "sequence extends periodically within the constraint, the "
              "system is unstable", file=sys.stderr)
    return 0


def cmd_schedule(args) -> int:
    system = load_system(args.system)
    params = _build_params(system, args)
    if args.C is not None:
        if args.rho_hat is not None or args.alpha_hat is not None:
            raise ParameterError("--C and --rho-hat/--alpha-hat are mutually exclusive")
        target = PracticalTarget(args.C)
    else:
        if args.rho_hat is None or args.alpha_hat is None:
            raise ParameterError("provide either --C or both --rho-hat and --alpha-hat")
        target = ExponentialTarget(args.rho_hat, args.alpha_hat)
    policy = POLICIES[args.policy]()
    w_bar = args.w_bar
    if w_bar is None:
        w_bar = system.disturbance_bound if isinstance(target, PracticalTarget) else 0.0
    run = run_schedule(params, target, args.steps, policy=policy, w_bar=w_bar,
                       v0=args.v0, seed=args.seed)
    _emit(schedule_csv_lines(run.records), args.out)
    if run.alarm_fired:
        first = next(rec for rec in run.records if rec.alarm)
        print(f"alarm at k={first.k}: {first.alarm}", file=sys.stderr)
        return 1
    return 0


def cmd_repro_counterexample(args) -> int:
    rep = counterexample.report(length=args.length)
    print(counterexample.format_report(rep))
    return 0 if rep.passed else 1


def _add_params_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=("robust", "lyapunov"), default="lyapunov",
                        help="abstraction construction route (default: lyapunov)")
    parser.add_argument("--rho", type=float, default=None,
                        help="nominal decay rate (required for --method robust)")
    parser.add_argument("--beta", type=float, default=None,
                        help="disturbance gain; defaults to its smallest admissible value")
    parser.add_argument("--Q", default=None,
                        help="Lyapunov weight matrix as inline JSON or a JSON file path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convrate",
        description="Convergence rate abstractions for weakly-hard control: "
                    "analysis, verification, simulation, scheduling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="build abstraction parameters for a system")
    p.add_argument("system", help="system document (JSON)")
    _add_params_flags(p)
    p.add_argument("--out", default=None, help="also write the parameters as JSON")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("mk-check", help="closed-form (m,K) stability verdict")
    p.add_argument("system")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    _add_params_flags(p)
    p.add_argument("--r0", type=float, default=None,
                   help="radius of the region where the abstraction is valid; "
                        "reports the safe initial radius")
    p.add_argument("--json", action="store_true", help="emit a machine-readable record")
    p.set_defaults(func=cmd_mk_check)

    p = sub.add_parser("simulate", help="co-simulate plant and abstraction to CSV")
    p.add_argument("system")
    p.add_argument("--sigma", required=True,
                   help="mode sequence: 'mk-worst:m,K', a comma list, or a file")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--x0", default=None,
                   help="initial state: comma list, or 'dominant:<sigma window>' for the "
                        "dominant eigenvector of that window's transition product")
    p.add_argument("--w", default="zero", help="disturbance: zero | const:<v> | seed:<s>")
    p.add_argument("--rel-tol", type=float, default=1e-9,
                   help="relative slack of the guarantee check")
    _add_params_flags(p)
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("jsr", help="brute-force averaged spectral radius over (m,K) sequences")
    p.add_argument("system")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--length", type=int, default=24)
    p.add_argument("--max-length", dest="max_length", type=int, default=24,
                   help="enumeration cap; lengths beyond it are refused with "
                        "the would-be sequence count")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_jsr)

    p = sub.add_parser("schedule", help="run the online scheduling gate, decisions to CSV")
    p.add_argument("system")
    _add_params_flags(p)
    p.add_argument("--rho-hat", dest="rho_hat", type=float, default=None)
    p.add_argument("--alpha-hat", dest="alpha_hat", type=float, default=None)
    p.add_argument("--C", type=float, default=None, help="practical-stability state bound")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--policy", choices=sorted(POLICIES), default="greedy")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--w-bar", dest="w_bar", type=float, default=None,
                   help="per-step disturbance bound (practical mode); defaults to the "
                        "document's disturbance_bound")
    p.add_argument("--v0", type=float, default=None,
                   help="initial abstraction value for practical mode")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("repro-counterexample",
                       help="recompute the built-in demo system's reference values")
    p.add_argument("--length", type=int, default=24,
                   help="brute-force sequence length (reference brackets need 24)")
    p.set_defaults(func=cmd_repro_counterexample)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, LookupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
