"""Batch reports: CSV tables, SVG figures and a JSON manifest.

A report config is a JSON object::

    {"model": "t4", "seed": 0, "output_dir": "out",
     "sweeps": [{"kind": "table1", "name": "table1", "jt": [0.01, 1, 100]}, ...]}

Supported sweep kinds and their keys are listed in ``SWEEP_KEYS``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .analog import PRESETS as ANALOG_PRESETS
from .analog import run_analog
from .circuit_noise import PRESETS as NOISE_PRESETS
from .circuit_noise import load_noise
from .discretize import TrotterPlan, build_circuit, commutator_norms, trotter_bound_steps
from .experiments import (
    RuntimeModel,
    config_hash,
    estimate_analog_runtime,
    estimate_circuit_runtime,
    evaluate_plan,
    find_min_steps,
    noisy_tvd,
)
from .metrics import density_diff_map, tvd
from .model import index_to_ket, load_model
from .reference import evolve_exact
from .svmc import SvmcConfig, run_svmc

PUBLISHED_COMMUTATOR_CONSTANT = 54.7660
METRIC_COLUMNS = ["JT", "N_M", "N_T", "model", "noise", "tvd", "fidelity"]

SWEEP_KEYS = {
    "table1": {"jt", "epsilon"},
    "noise": {"settings", "presets"},
    "noise-curve": {"jt", "noise", "nt", "nm"},
    "analog": {"model", "jt"},
    "svmc": {"beta", "n_trials", "n_sweeps", "reference_jt"},
    "runtime": {"plans"},
}
TOP_KEYS = {"preset", "model", "seed", "output_dir", "sweeps"}

TABLE1_JT = [0.01, 0.1, 1, 10, 100, 1000]
TABLE2_SETTINGS = [[1.06, 2, 2], [3.40, 3, 2], [5.26, 4, 2], [100, 70, 2]]

PRESET_CONFIGS = {
    "table1": {"sweeps": [
        {"kind": "table1", "name": "table1", "jt": TABLE1_JT},
        {"kind": "runtime", "name": "runtime", "plans": [[1, 5, 1], [10, 17, 1], [100, 70, 2], [1000, 660, 2]]},
    ]},
    "table2": {"sweeps": [
        {"kind": "noise", "name": "table2", "settings": TABLE2_SETTINGS,
         "presets": ["ideal", "noisy-1", "noisy-2", "noisy-3"]},
        {"kind": "noise-curve", "name": "noise_curve", "jt": [1.06, 3.40, 5.26],
         "noise": "noisy-1", "nt": 2, "nm": list(range(1, 21))},
    ]},
    "fig-analog": {"sweeps": [
        {"kind": "analog", "name": "analog_scl", "model": "scl-100ns", "jt": [1, 5, 10, 20, 30, 40, 100]},
        {"kind": "analog", "name": "analog_ame_15mK", "model": "ame-15mK", "jt": [1, 5, 10, 20, 30, 40, 100]},
        {"kind": "analog", "name": "analog_ame_2.38mK", "model": "ame-2.38mK", "jt": [1, 5, 10, 20, 30, 40, 100]},
        {"kind": "analog", "name": "analog_pe", "model": "pe-0.03", "jt": [10, 50, 100, 200, 300, 400]},
    ]},
    "svmc": {"sweeps": [{"kind": "svmc", "name": "svmc", "beta": [3.19, 0.5092]}]},
}


class ConfigError(ValueError):
    pass


def validate_config(cfg: dict) -> dict:
    """Fill defaults and reject unknown keys, naming each offender."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if "preset" in cfg:
        if cfg["preset"] not in PRESET_CONFIGS:
            raise ConfigError(f"unknown preset {cfg['preset']!r}")
        cfg = {**PRESET_CONFIGS[cfg["preset"]], **{k: v for k, v in cfg.items() if k != "preset"}}
    bad = [k for k in cfg if k not in TOP_KEYS]
    for i, sw in enumerate(cfg.get("sweeps", [])):
        kind = sw.get("kind")
        if kind not in SWEEP_KEYS:
            bad.append(f"sweeps[{i}].kind={kind!r}")
            continue
        bad += [f"sweeps[{i}].{k}" for k in sw if k not in SWEEP_KEYS[kind] | {"kind", "name"}]
    if bad:
        raise ConfigError(f"invalid config keys: {', '.join(map(str, bad))}")
    return {"model": "t4", "seed": 0, "output_dir": "report", "sweeps": [], **cfg}


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.10g}"
    return x


def write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "annealemu"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    _plt().close(fig)


class _Context:
    def __init__(self, cfg):
        self.model, self.schedule = load_model(cfg["model"])
        self.model_name = cfg["model"] if isinstance(cfg["model"], str) else "custom"
        self.seed = cfg["seed"]
        self._refs = {}

    def ref(self, jt):
        if jt not in self._refs:
            self._refs[jt] = evolve_exact(self.model, self.schedule, jt)
        return self._refs[jt]


def _table1(ctx, sw, out, name):
    cols = METRIC_COLUMNS + ["total_steps", "bound_steps", "bound_steps_spectral", "reference_steps"]
    eps = sw.get("epsilon", 0.01)
    spectral = commutator_norms(ctx.model)
    rows = []
    for jt in sw.get("jt", []):
        r = ctx.ref(jt)
        found = find_min_steps(ctx.model, ctx.schedule, jt, reference_state=r.final_state)
        row = {"JT": float(jt), "model": ctx.model_name, "noise": "none", "reference_steps": r.n_steps}
        if found.feasible:
            row.update(N_M=found.N_M, N_T=found.N_T, tvd=found.tvd, fidelity=found.fidelity,
                       total_steps=found.total_steps,
                       bound_steps=trotter_bound_steps(jt, found.N_M, eps, PUBLISHED_COMMUTATOR_CONSTANT),
                       bound_steps_spectral=trotter_bound_steps(jt, found.N_M, eps, spectral))
        rows.append(row)
    write_csv(out / f"{name}.csv", cols, rows)
    files = [f"{name}.csv"]
    if rows:
        plt = _plt()
        fig, ax = plt.subplots(figsize=(6, 4))
        pops = np.array([ctx.ref(r["JT"]).populations for r in rows])
        from .model import ground_states

        gs, _ = ground_states(ctx.model)
        for g in gs:
            ax.plot([r["JT"] for r in rows], pops[:, g], marker="o", label=f"|{index_to_ket(g, ctx.model.n_qubits)}>")
        ax.set_xscale("log")
        ax.set_xlabel("JT")
        ax.set_ylabel("population")
        ax.legend(fontsize=7)
        _save(fig, out / f"{name}_populations.svg")
        files.append(f"{name}_populations.svg")
    return files


def _noise(ctx, sw, out, name):
    rows = []
    for jt, nm, nt in sw.get("settings", []):
        ref = ctx.ref(jt)
        plan = TrotterPlan(int(nm), int(nt), float(jt))
        for preset in sw.get("presets", []):
            noise = load_noise(preset)
            rows.append({"JT": float(jt), "N_M": nm, "N_T": nt, "model": ctx.model_name, "noise": preset,
                         "tvd": noisy_tvd(ctx.model, ctx.schedule, plan, noise, ref.populations)})
    write_csv(out / f"{name}.csv", METRIC_COLUMNS, rows)
    files = [f"{name}.csv"]
    settings = sw.get("settings", [])
    if settings:
        # density-difference maps for the first setting: ideal circuit vs. dephased circuit
        from .circuit_noise import simulate_noisy_circuit

        jt, nm, nt = settings[0]
        circ = build_circuit(TrotterPlan(int(nm), int(nt), float(jt)), ctx.model, ctx.schedule)
        exact = ctx.ref(jt).final_state
        plt = _plt()
        fig, axes = plt.subplots(1, 2, figsize=(8, 4))
        for ax, preset in zip(axes, ["ideal", "noisy-1"]):
            rho = simulate_noisy_circuit(circ, load_noise(preset))
            ax.imshow(density_diff_map(rho, exact), cmap="viridis")
            ax.set_title(preset)
        _save(fig, out / f"{name}_density_diff.svg")
        files.append(f"{name}_density_diff.svg")
    return files


def _noise_curve(ctx, sw, out, name):
    rows = []
    noise_name = sw.get("noise", "noisy-1")
    noise = load_noise(noise_name)
    nt = int(sw.get("nt", 2))
    for jt in sw.get("jt", []):
        ref = ctx.ref(jt)
        for nm in sw.get("nm", range(1, 21)):
            plan = TrotterPlan(int(nm), nt, float(jt))
            rows.append({"JT": float(jt), "N_M": nm, "N_T": nt, "model": ctx.model_name,
                         "noise": noise_name if isinstance(noise_name, str) else "custom",
                         "tvd": noisy_tvd(ctx.model, ctx.schedule, plan, noise, ref.populations)})
    write_csv(out / f"{name}.csv", METRIC_COLUMNS, rows)
    files = [f"{name}.csv"]
    if rows:
        plt = _plt()
        fig, ax = plt.subplots(figsize=(6, 4))
        for jt in sw.get("jt", []):
            sel = [r for r in rows if r["JT"] == float(jt)]
            ax.plot([r["N_M"] for r in sel], [r["tvd"] for r in sel], marker="o", label=f"JT={jt}")
        ax.set_xlabel("N_M")
        ax.set_ylabel("TVD")
        ax.legend()
        _save(fig, out / f"{name}.svg")
        files.append(f"{name}.svg")
    return files


def _analog(ctx, sw, out, name):
    preset = sw["model"]
    rows = []
    for jt in sw.get("jt", []):
        p = run_analog(preset, ctx.model, ctx.schedule, float(jt), seed=ctx.seed)
        rows.append({"JT": float(jt), "model": ctx.model_name,
                     "noise": preset if isinstance(preset, str) else "custom",
                     "tvd": tvd(ctx.ref(jt).populations, p)})
    write_csv(out / f"{name}.csv", METRIC_COLUMNS, rows)
    files = [f"{name}.csv"]
    if rows:
        plt = _plt()
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot([r["JT"] for r in rows], [r["tvd"] for r in rows], marker="o", label=str(preset))
        ax.axhline(0.1, color="grey", lw=0.8, ls="--")
        ax.set_xscale("log")
        ax.set_xlabel("JT")
        ax.set_ylabel("TVD vs ideal")
        ax.legend()
        _save(fig, out / f"{name}.svg")
        files.append(f"{name}.svg")
    return files


def _svmc(ctx, sw, out, name):
    ref = ctx.ref(sw.get("reference_jt", 1000)).populations
    cols = ["beta", "model", "tvd", "tvd_stderr"] + [
        f"p_{index_to_ket(i, ctx.model.n_qubits)}" for i in range(ctx.model.dim)]
    rows = []
    for beta in sw.get("beta", []):
        cfg = SvmcConfig(float(beta), n_sweeps=sw.get("n_sweeps", 10001),
                         n_trials=sw.get("n_trials", 1000), seed=ctx.seed)
        res = run_svmc(ctx.model, ctx.schedule, cfg)
        blocks = [tvd(ref, b) for b in res.block_distributions]
        row = {"beta": float(beta), "model": ctx.model_name, "tvd": tvd(ref, res.distribution),
               "tvd_stderr": float(np.std(blocks, ddof=1) / np.sqrt(len(blocks))) if len(blocks) > 1 else ""}
        row.update({cols[4 + i]: float(p) for i, p in enumerate(res.distribution)})
        rows.append(row)
    write_csv(out / f"{name}.csv", cols, rows)
    return [f"{name}.csv"]


def _runtime(ctx, sw, out, name):
    rt = RuntimeModel.for_model(ctx.model)
    cols = ["JT", "N_M", "N_T", "circuit_ns", "circuit_layers_ns", "analog_ns", "ratio"]
    rows = []
    for jt, nm, nt in sw.get("plans", []):
        circ = estimate_circuit_runtime(int(nm), int(nt), rt)
        layers = build_circuit(TrotterPlan(int(nm), int(nt), float(jt)), ctx.model, ctx.schedule).depth
        analog = estimate_analog_runtime(float(jt), rt)
        rows.append({"JT": float(jt), "N_M": nm, "N_T": nt, "circuit_ns": circ,
                     "circuit_layers_ns": layers * rt.C1, "analog_ns": analog,
                     "ratio": circ / analog if analog else ""})
    write_csv(out / f"{name}.csv", cols, rows)
    files = [f"{name}.csv"]
    if rows:
        plt = _plt()
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot([r["JT"] for r in rows], [r["circuit_ns"] for r in rows], marker="o", label="circuit")
        ax.plot([r["JT"] for r in rows], [r["analog_ns"] for r in rows], marker="s", label="analog")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("JT")
        ax.set_ylabel("runtime (ns)")
        ax.legend()
        _save(fig, out / f"{name}.svg")
        files.append(f"{name}.svg")
    return files


_HANDLERS = {"table1": _table1, "noise": _noise, "noise-curve": _noise_curve,
             "analog": _analog, "svmc": _svmc, "runtime": _runtime}


def run_report(config, output_dir=None) -> dict:
    """Run every sweep in ``config`` (dict, JSON path or preset name) and write the bundle.

    Returns the manifest, which is also written as ``manifest.json``.
    """
    if isinstance(config, str) and config in PRESET_CONFIGS:
        config = {"preset": config}
    elif not isinstance(config, dict):
        config = json.loads(Path(config).read_text())
    cfg = validate_config(config)
    out = Path(output_dir or cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    ctx = _Context(cfg)
    h = config_hash(cfg | {"output_dir": None})
    entries = []
    for i, sw in enumerate(cfg["sweeps"]):
        name = sw.get("name", f"{sw['kind']}_{i}")
        files = _HANDLERS[sw["kind"]](ctx, sw, out, name)
        entries.append({"name": name, "kind": sw["kind"], "files": files,
                        "config_hash": config_hash(sw | {"model": cfg["model"], "seed": cfg["seed"]})})
    manifest = {"config_hash": h, "seed": cfg["seed"], "model": cfg["model"], "sweeps": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest
