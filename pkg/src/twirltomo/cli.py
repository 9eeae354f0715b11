"""Command-line harness: seeded, reproducible protocol runs.

Every verb loads a channel-spec document (where applicable), executes one
protocol, and writes four files into --out:

* ``manifest.json``  -- protocol, config, seed, tool version, timestamp
* ``results.json``   -- the complete result payload (no timestamp; a rerun
  of the same manifest is byte-identical)
* ``report.txt``     -- human-readable table
* ``report.csv``     -- plot-ready rows

Exit codes: 0 success, 2 validation failure, 3 capacity failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .channels import (ChannelModel, check_cp_bound, check_positive_bound,
                       coarse_grain)
from .channel_spec import load_channel, parse_channel_document
from .dense import DenseBackend, haar_twirl_moment
from .errors import CapacityError, ConfigError, SpecValidationError
from .localtwirl import LocalTwirlConfig, run_local_twirl
from .pauli import Pauli
from .rng import master
from .seqpt import (SeqptConfig, estimate_chi_selective,
                    frames_independent_probability, run_blind_discovery,
                    success_probability)


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, sort_keys=True) + "\n")


def _write_outputs(out: Path, protocol: str, manifest_extra: dict,
                   results: dict, table: str, csv_rows: list[list]):
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"protocol": protocol, "tool_version": __version__,
                "timestamp": time.time(), **manifest_extra}
    _write_json(out / "manifest.json", manifest)
    _write_json(out / "results.json", results)
    (out / "report.txt").write_text(table)
    with open(out / "report.csv", "w", newline="") as fh:
        csv.writer(fh).writerows(csv_rows)


def _load_spec(args, warnings: list[str]):
    with open(args.spec) as fh:
        raw = json.load(fh)
    doc = parse_channel_document(raw)
    channel = load_channel(args.spec, warnings)
    return doc, channel


def _oracle_diag(channel: ChannelModel) -> dict[str, float] | None:
    if channel.n > 3:
        return None
    chi = channel.chi
    return {str(Pauli.from_label(channel.n, l)): float(chi.mat[l, l].real)
            for l in range(4 ** channel.n)}


# ---------------------------------------------------------------------------
# verbs


def _cmd_exact_chi(args) -> int:
    warnings: list[str] = []
    doc, channel = _load_spec(args, warnings)
    chi = channel.chi
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    chi.save_json(out / "chi.json")
    chi.save_csv(out / "chi.csv")
    diag = chi.diagonal().real
    order = np.argsort(diag)[::-1]
    lines = [f"exact chi for {doc.name} (n={doc.n})"]
    lines += [f"  warning: {w}" for w in warnings]
    lines.append(f"{'label':>8} {'chi_ll':>12}")
    rows = [["label", "chi_ll"]]
    for l in order[:16]:
        label = str(Pauli.from_label(doc.n, int(l)))
        lines.append(f"{label:>8} {diag[l]:>12.8f}")
        rows.append([label, repr(float(diag[l]))])
    _write_outputs(out, "exact_chi",
                   {"spec": {"path": str(args.spec), "document": doc.to_json_dict()},
                    "seed": None, "config": {}},
                   {"n": doc.n, "trace": float(diag.sum()),
                    "warnings": warnings,
                    "diagonal": {str(Pauli.from_label(doc.n, l)): float(diag[l])
                                 for l in range(4 ** doc.n)}},
                   "\n".join(lines) + "\n", rows)
    print(f"wrote chi matrix and reports to {out}")
    return 0


def _cmd_seqpt(args) -> int:
    warnings: list[str] = []
    doc, channel = _load_spec(args, warnings)
    cfg = SeqptConfig(shots=args.shots, epsilon=args.epsilon, delta=args.delta,
                      variant=args.variant, seed=args.seed)
    backend = DenseBackend()
    oracle = _oracle_diag(channel)
    out = Path(args.out)
    if args.mode == "select":
        label = Pauli.from_string(args.label)
        est = estimate_chi_selective(channel, label, cfg, backend)
        key = str(label)
        results = {"n": doc.n, "mode": "select", "label": key,
                   "config": cfg.to_json_dict(), "warnings": warnings,
                   "chi_hat": est.chi_hat, "stderr": est.stderr,
                   "survival_rate": est.survival_rate}
        rows = [["label", "estimate", "stderr", "oracle", "pass"]]
        oracle_v = oracle.get(key) if oracle else None
        ok = "" if oracle_v is None else str(abs(est.chi_hat - oracle_v) <= 3 * est.stderr)
        rows.append([key, repr(est.chi_hat), repr(est.stderr),
                     "" if oracle_v is None else repr(oracle_v), ok])
        table = (f"selective estimate for {doc.name}, label {key}\n"
                 f"  chi_hat = {est.chi_hat:.6f} +- {est.stderr:.6f} "
                 f"(survival {est.survival_rate:.6f})\n")
        _write_outputs(out, "seqpt_selective",
                       {"spec": {"path": str(args.spec), "document": doc.to_json_dict()},
                        "seed": args.seed, "config": cfg.to_json_dict()},
                       results, table, rows)
    else:
        res = run_blind_discovery(channel, cfg, backend)
        results = res.to_json_dict()
        results["warnings"] = warnings
        ordered = sorted(res.estimates.items(), key=lambda kv: -kv[1].chi_hat)
        lines = [f"blind discovery for {doc.name} ({cfg.variant}, M={cfg.shots})",
                 f"  usable pair fraction {res.usable_pair_fraction:.4f}; "
                 f"residual mass {res.residual_mass:.4f}",
                 f"{'label':>8} {'chi_hat':>10} {'stderr':>9} {'flag':>11}"]
        rows = [["label", "estimate", "stderr", "oracle", "pass"]]
        below_marked = False
        for key, est in ordered:
            if not below_marked and est.chi_hat < res.threshold:
                lines.append(f"  ----- threshold 2/M = {res.threshold:.2e} -----")
                below_marked = True
            flag = "borderline" if est.borderline else ""
            lines.append(f"{key:>8} {est.chi_hat:>10.5f} {est.stderr:>9.5f} {flag:>11}")
            oracle_v = oracle.get(key) if oracle else None
            ok = "" if oracle_v is None else str(abs(est.chi_hat - oracle_v) <= 3 * est.stderr)
            rows.append([key, repr(est.chi_hat), repr(est.stderr),
                         "" if oracle_v is None else repr(oracle_v), ok])
        if not below_marked:
            lines.append(f"  (threshold 2/M = {res.threshold:.2e})")
        _write_outputs(out, "seqpt_blind",
                       {"spec": {"path": str(args.spec), "document": doc.to_json_dict()},
                        "seed": args.seed, "config": cfg.to_json_dict()},
                       results, "\n".join(lines) + "\n", rows)
    print(f"wrote results to {out}")
    return 0


def _cmd_local_twirl(args) -> int:
    warnings: list[str] = []
    doc, channel = _load_spec(args, warnings)
    cfg = LocalTwirlConfig(shots=args.shots, cutoff=args.cutoff, seed=args.seed)
    est = run_local_twirl(channel, cfg)
    results = est.to_json_dict()
    results["warnings"] = warnings
    oracle = _oracle_diag(channel)
    cg = coarse_grain(channel.chi) if oracle else None
    lines = [f"local twirl for {doc.name} (M={cfg.shots}, cutoff={est.weight.cutoff})",
             f"{'w':>3} {'p_w':>10} {'stderr':>9} {'amplification':>14}"]
    rows = [["label", "estimate", "stderr", "oracle", "pass"]]
    for w, (v, s, a) in enumerate(zip(est.weight.values, est.weight.stderr,
                                      est.weight.amplification)):
        lines.append(f"{w:>3} {v:>10.5f} {s:>9.5f} {a:>14.3f}")
        ov = None if cg is None else float(cg.by_weight[w])
        ok = "" if ov is None else str(abs(v - ov) <= max(3 * s, 1e-9))
        rows.append([f"w={w}", repr(float(v)), repr(float(s)),
                     "" if ov is None else repr(ov), ok])
    if est.support is not None:
        lines.append(f"{'support':>8} {'chi_col':>10} {'stderr':>9}")
        for s_vec, v in sorted(est.support.values.items()):
            key = "".join(map(str, s_vec))
            sd = est.support.stderr[s_vec]
            lines.append(f"{key:>8} {v:>10.5f} {sd:>9.5f}")
            ov = None if cg is None else float(cg.by_support[s_vec])
            ok = "" if ov is None else str(abs(v - ov) <= max(3 * sd, 1e-9))
            rows.append([key, repr(float(v)), repr(float(sd)),
                         "" if ov is None else repr(ov), ok])
        lines.append(f"excess outcome mass beyond cutoff: {est.support.excess_mass:.2e}")
    _write_outputs(Path(args.out), "local_twirl",
                   {"spec": {"path": str(args.spec), "document": doc.to_json_dict()},
                    "seed": args.seed, "config": cfg.to_json_dict()},
                   results, "\n".join(lines) + "\n", rows)
    print(f"wrote results to {args.out}")
    return 0


def _cmd_bounds_check(args) -> int:
    warnings: list[str] = []
    doc, channel = _load_spec(args, warnings)
    chi = channel.chi
    cls = channel.classification
    cp_viol = check_cp_bound(chi)
    pos_viol, diag_viol = check_positive_bound(chi)
    eigs = np.linalg.eigvalsh(chi.mat) if cls.hermitian_preserving else None
    results = {
        "n": doc.n, "warnings": warnings,
        "classification": cls.to_json_dict(),
        "cp_bound_violations": [[l, lp, lhs, rhs] for l, lp, lhs, rhs in cp_viol],
        "positive_bound_violations": [[l, lp, lhs, rhs] for l, lp, lhs, rhs in pos_viol],
        "diagonal_range_violations": [[l, v] for l, v in diag_viol],
        "chi_eigenvalues": None if eigs is None else eigs.tolist(),
    }
    lines = [f"bounds check for {doc.name}",
             f"  classification: {cls.to_json_dict()}",
             f"  cp-bound violations: {len(cp_viol)}",
             f"  positive-bound violations: {len(pos_viol)} pairs, {len(diag_viol)} diagonal"]
    if eigs is not None:
        lines.append(f"  chi eigenvalue range: [{eigs.min():.6f}, {eigs.max():.6f}]")
    rows = [["check", "violations"],
            ["cp_bound", str(len(cp_viol))],
            ["positive_bound_pairs", str(len(pos_viol))],
            ["diagonal_range", str(len(diag_viol))]]
    _write_outputs(Path(args.out), "bounds_check",
                   {"spec": {"path": str(args.spec), "document": doc.to_json_dict()},
                    "seed": None, "config": {}},
                   results, "\n".join(lines) + "\n", rows)
    print(f"wrote results to {args.out}")
    return 0


def _cmd_haar_verify(args) -> int:
    rng = master(args.seed)
    results = {"dim": args.dim, "shots": args.shots, "seed": args.seed,
               "quadruples": []}
    lines = [f"haar moment verification, D={args.dim}, {args.shots} samples/quadruple",
             f"{'#':>3} {'closed form':>24} {'estimate':>24} {'sigmas':>7} {'pass':>5}"]
    rows = [["index", "closed_re", "closed_im", "estimate_re", "estimate_im",
             "stderr", "sigmas", "pass"]]
    all_ok = True
    for k in range(args.quadruples):
        ops = [rng.normal(size=(args.dim, args.dim))
               + 1j * rng.normal(size=(args.dim, args.dim)) for _ in range(4)]
        res = haar_twirl_moment(*ops, samples=args.shots, rng=rng)
        ok = res.deviation_sigmas <= 3.0
        all_ok &= ok
        results["quadruples"].append({
            "closed_form": [res.closed_form.real, res.closed_form.imag],
            "estimate": [res.estimate.real, res.estimate.imag],
            "stderr": res.stderr, "sigmas": res.deviation_sigmas, "pass": ok})
        lines.append(f"{k:>3} {res.closed_form:>24.6f} {res.estimate:>24.6f} "
                     f"{res.deviation_sigmas:>7.2f} {str(ok):>5}")
        rows.append([str(k), repr(res.closed_form.real), repr(res.closed_form.imag),
                     repr(res.estimate.real), repr(res.estimate.imag),
                     repr(res.stderr), repr(res.deviation_sigmas), str(ok)])
    results["all_pass"] = all_ok
    _write_outputs(Path(args.out), "haar_verify",
                   {"spec": None, "seed": args.seed,
                    "config": {"dim": args.dim, "shots": args.shots,
                               "quadruples": args.quadruples}},
                   results, "\n".join(lines) + "\n", rows)
    print(f"wrote results to {args.out}; all pass: {all_ok}")
    return 0


def _cmd_success_prob(args) -> int:
    lines = [f"{'n':>3} {'mub':>10} {'clifford':>10} {'indep-frames':>13}"]
    rows = [["n", "mub", "clifford_closed_form", "independent_frames_rate"]]
    results = {"table": []}
    for n in range(1, args.max_n + 1):
        pm = success_probability("mub", n)
        pc = success_probability("clifford", n)
        pf = frames_independent_probability(n)
        results["table"].append({"n": n, "mub": pm, "clifford": pc,
                                 "independent_frames": pf})
        lines.append(f"{n:>3} {pm:>10.6f} {pc:>10.6f} {pf:>13.6f}")
        rows.append([str(n), repr(pm), repr(pc), repr(pf)])
    _write_outputs(Path(args.out), "success_prob",
                   {"spec": None, "seed": None, "config": {"max_n": args.max_n}},
                   results, "\n".join(lines) + "\n", rows)
    print(f"wrote results to {args.out}")
    return 0


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twirltomo",
                                 description="twirling-based process tomography harness")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, spec=True):
        if spec:
            p.add_argument("--spec", required=True, help="channel-spec JSON path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("exact-chi", help="exact chi matrix of the channel")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_exact_chi)

    p = sub.add_parser("seqpt", help="selective / blind diagonal estimation")
    p.add_argument("mode", choices=["select", "blind"])
    common(p)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--variant", choices=["mub", "clifford"], default="mub")
    p.add_argument("--label", help="Pauli string for select mode, e.g. ZI")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.set_defaults(func=_cmd_seqpt)

    p = sub.add_parser("local-twirl", help="one-qubit twirl weight/support estimation")
    common(p)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--cutoff", type=int, default=None)
    p.set_defaults(func=_cmd_local_twirl)

    p = sub.add_parser("bounds-check", help="chi bound and classification report")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bounds_check)

    p = sub.add_parser("haar-verify", help="Monte Carlo check of the Haar moment identity")
    common(p, spec=False)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--shots", type=int, default=100000)
    p.add_argument("--quadruples", type=int, default=10)
    p.set_defaults(func=_cmd_haar_verify)

    p = sub.add_parser("success-prob", help="pair-success probability table")
    p.add_argument("--out", required=True)
    p.add_argument("--max-n", type=int, default=6)
    p.set_defaults(func=_cmd_success_prob)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.verb == "seqpt" and args.mode == "select" and not args.label:
            print("error: seqpt select requires --label", file=sys.stderr)
            return 2
        return args.func(args)
    except (SpecValidationError, ConfigError, ValueError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
