"""Command-line entry point ``anneal-emu``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import analog, circuit_noise
from .circuit_noise import load_noise, measure_distribution, simulate_noisy_circuit
from .discretize import TrotterPlan, build_circuit, commutator_norms, trotter_bound_steps
from .experiments import (
    RuntimeModel,
    estimate_analog_runtime,
    estimate_circuit_runtime,
    find_min_steps,
    noisy_tvd_curve,
)
from .metrics import fidelity, tvd
from .model import index_to_ket, ket_to_index, load_model
from .reference import evolve_exact
from .report import PUBLISHED_COMMUTATOR_CONSTANT, run_report, write_csv
from .svmc import SvmcConfig, run_svmc


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _ints(text):
    return [int(x) for x in text.split(",") if x]


def _floats(text):
    return [float(x) for x in text.split(",") if x]


def cmd_solve(args):
    model, sched = load_model(args.model)
    _emit(evolve_exact(model, sched, args.jt).to_json(), args.out)


def cmd_emulate(args):
    model, sched = load_model(args.model)
    plan = TrotterPlan(args.nm, args.nt, args.jt)
    circ = build_circuit(plan, model, sched)
    if args.circuit_out:
        Path(args.circuit_out).write_text(circ.to_json())
    ref = evolve_exact(model, sched, args.jt).final_state
    noise = load_noise(args.noise)
    rho = simulate_noisy_circuit(circ, noise)
    row = {"JT": args.jt, "N_M": args.nm, "N_T": args.nt, "model": args.model, "noise": args.noise,
           "tvd": tvd(np.abs(ref) ** 2, measure_distribution(rho, noise)), "fidelity": fidelity(ref, rho)}
    _write_rows(args.out, list(row), [row])


def _write_rows(out, cols, rows):
    if out:
        write_csv(Path(out), cols, rows)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(cols)
        for r in rows:
            w.writerow([r.get(c, "") for c in cols])


def cmd_search(args):
    model, sched = load_model(args.model)
    res = find_min_steps(model, sched, args.jt, args.tvd_target)
    doc = {"JT": args.jt, "feasible": res.feasible, "N_M": res.N_M, "N_T": res.N_T,
           "tvd": res.tvd, "fidelity": res.fidelity, "cells_evaluated": res.evaluated}
    if res.feasible:
        doc["bound_steps"] = trotter_bound_steps(args.jt, res.N_M, args.tvd_target, PUBLISHED_COMMUTATOR_CONSTANT)
        doc["bound_steps_spectral"] = trotter_bound_steps(args.jt, res.N_M, args.tvd_target,
                                                          commutator_norms(model))
    _emit(json.dumps(doc, indent=2), args.out)


def cmd_noise_sweep(args):
    model, sched = load_model(args.model)
    rows = []
    if args.noise in analog.PRESETS:
        for jt in _floats(args.jt):
            p = analog.run_analog(args.noise, model, sched, jt, seed=args.seed)
            rows.append({"JT": jt, "model": args.model, "noise": args.noise,
                         "tvd": tvd(evolve_exact(model, sched, jt).populations, p)})
    else:
        for jt in _floats(args.jt):
            curve = noisy_tvd_curve(model, sched, jt, args.noise, args.nt, _ints(args.nm))
            rows += [{"JT": jt, "N_M": nm, "N_T": args.nt, "model": args.model, "noise": args.noise,
                      "tvd": v} for nm, v in curve.items()]
    _write_rows(args.out, ["JT", "N_M", "N_T", "model", "noise", "tvd", "fidelity"], rows)


def cmd_svmc(args):
    model, sched = load_model(args.model)
    res = run_svmc(model, sched, SvmcConfig(args.beta, args.sweeps, args.trials, args.seed))
    doc = {"beta": args.beta, "seed": args.seed,
           "distribution": {index_to_ket(i, model.n_qubits): float(p) for i, p in enumerate(res.distribution)}}
    if args.reference:
        ref = json.loads(Path(args.reference).read_text())
        if isinstance(ref, dict):
            ref = ref.get("populations", ref)
            vec = np.zeros(model.dim)
            for k, v in ref.items():
                vec[ket_to_index(k)] = v
            ref = vec
        doc["tvd"] = tvd(np.asarray(ref, float), res.distribution)
    _emit(json.dumps(doc, indent=2), args.out)


def cmd_runtime(args):
    model, _ = load_model(args.model)
    rt = RuntimeModel.for_model(model, C1=args.c1, C2=args.c2, analog_energy_scale=args.energy_scale)
    circ = estimate_circuit_runtime(args.nm, args.nt, rt)
    ana = estimate_analog_runtime(args.jt, rt)
    doc = {"N_M": args.nm, "N_T": args.nt, "JT": args.jt, "chi1": rt.chi1,
           "circuit_ns": circ, "analog_ns": ana, "ratio": circ / ana if ana else None}
    _emit(json.dumps(doc, indent=2), args.out)


def cmd_report(args):
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
    else:
        cfg = {"preset": args.preset}
    if args.model:
        cfg["model"] = args.model
    cfg["seed"] = args.seed
    manifest = run_report(cfg, args.out)
    print(json.dumps(manifest, indent=2))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anneal-emu", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, jt=True):
        sp.add_argument("--model", default="t4", help="preset name or JSON model file")
        if jt:
            sp.add_argument("--jt", type=float, required=True)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output file (stdout if omitted)")

    sp = sub.add_parser("solve", help="reference solution")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("emulate", help="discretized circuit, optionally noisy")
    common(sp)
    sp.add_argument("--nm", type=int, required=True)
    sp.add_argument("--nt", type=int, required=True)
    sp.add_argument("--noise", default="ideal",
                    help=f"one of {sorted(circuit_noise.PRESETS)} or a JSON file")
    sp.add_argument("--circuit-out", help="write the gate circuit as JSON")
    sp.set_defaults(func=cmd_emulate)

    sp = sub.add_parser("search", help="cheapest (N_M, N_T) reaching the TVD target")
    common(sp)
    sp.add_argument("--tvd-target", type=float, default=0.01)
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("noise-sweep", help="TVD vs N_M (circuit noise) or vs JT (analog noise)")
    common(sp, jt=False)
    sp.add_argument("--jt", required=True, help="comma-separated JT values")
    sp.add_argument("--noise", required=True,
                    help=f"circuit preset, analog preset {sorted(analog.PRESETS)}, or JSON file")
    sp.add_argument("--nm", default=",".join(map(str, range(1, 21))), help="comma-separated N_M grid")
    sp.add_argument("--nt", type=int, default=2)
    sp.set_defaults(func=cmd_noise_sweep)

    sp = sub.add_parser("svmc", help="spin-vector Monte Carlo")
    common(sp, jt=False)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--sweeps", type=int, default=10001)
    sp.add_argument("--reference", help="JSON distribution (list or output of `solve`)")
    sp.set_defaults(func=cmd_svmc)

    sp = sub.add_parser("runtime", help="circuit vs analog runtime estimate")
    common(sp)
    sp.add_argument("--nm", type=int, required=True)
    sp.add_argument("--nt", type=int, required=True)
    sp.add_argument("--c1", type=float, default=25.0)
    sp.add_argument("--c2", type=float, default=25.0)
    sp.add_argument("--energy-scale", type=float, default=1.0)
    sp.set_defaults(func=cmd_runtime)

    sp = sub.add_parser("report", help="CSV/SVG/JSON bundle from a preset or config")
    sp.add_argument("--preset", default="table1")
    sp.add_argument("--config", help="JSON report config")
    sp.add_argument("--model")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
