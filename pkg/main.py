"""
How to run:
1. Install the pinned packages: pip install -r requirements.txt
2. Optionally cap worker threads in a local .env file: WVSIM_THREADS=4 (0 = all cores)
3. Run one of the subcommands, e.g.
    - python main.py weak-value --config configs/modified_anomalous.json --exact
    - python main.py sweep-xi --config configs/conventional_sweep.json --seed 7
    - python main.py wavefunction --config configs/scan_free.json
    - python main.py diagram configs/benchmark_diagram.json --action compile
    - python main.py kd --config configs/kd.json
    - python main.py summarize runs/sweep_xi/sweep.csv

Overview / descriptions:
1. Read the JSON run config, apply --seed / --exact / --out overrides, validate
2. Build the protocol, boundary, sampler or grid state from the config
3. Run exact-probability or finite-shot experiments
4. Write JSON / CSV results atomically into the output directory

Exit codes:
- 0 success, 2 config error, 3 physicality violation, 4 degenerate estimator
- every error prints one line "ERR:<code>:<field> <message>" on stderr
"""

import argparse
import io
import json
import os
import re
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from dotenv import load_dotenv

import diagram
import run_config
import summarize_sweep
import wavefunction
from exceptions import ConfigError, UndefinedWeakValueError, WeakValueSimError
from framework import kirkwood_dirac
from protocols import kd_grid_protocol, kd_weak_route, required_settings, run_exact
from sampling import bias_variance_sweep, exact_sweep, run_sampled

DEFAULT_OUT = {
    "weak-value": "runs/weak_value",
    "sweep-xi": "runs/sweep_xi",
    "wavefunction": "runs/wavefunction",
    "diagram": "runs/diagram",
    "kd": "runs/kd",
}


# --------------------------
# Output helpers
# --------------------------
def write_atomic(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile("w", dir=path.parent, delete=False, encoding="utf-8", newline="", suffix=".tmp") as f:
        f.write(text)
        tmp = f.name
    os.replace(tmp, path)
    return path


def write_json(path: Path, doc: dict) -> Path:
    return write_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, df) -> Path:
    buf = io.StringIO()
    df.to_csv(buf, index=False, float_format="%.17g", lineterminator="\n")
    return write_atomic(path, buf.getvalue())


def pair(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def grid_pairs(m: np.ndarray) -> list:
    return [[pair(z) for z in row] for row in m]


def worker_count() -> int:
    raw = os.getenv("WVSIM_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"WVSIM_THREADS must be an integer, got {raw!r}", field="WVSIM_THREADS") from exc
    if n < 0:
        raise ConfigError("WVSIM_THREADS must be >= 0", field="WVSIM_THREADS")
    return n or (os.cpu_count() or 1)


def load_config(args) -> run_config.RunConfig:
    doc = run_config.read_config_doc(args.config)
    if args.seed is not None:
        doc.setdefault("sampler", {})
        if not isinstance(doc["sampler"], dict):
            raise ConfigError("sampler must be an object", field="sampler")
        doc["sampler"]["seed"] = args.seed
    if args.exact:
        doc["exact"] = True
    if args.out is not None:
        doc["output"] = {"dir": args.out}
    elif "output" not in doc:
        doc["output"] = {"dir": DEFAULT_OUT[args.command]}
    return run_config.validate_config(doc)


# --------------------------
# Subcommands
# --------------------------
def cmd_weak_value(cfg: run_config.RunConfig, workers: int, progress: bool) -> Path:
    out_dir = Path(cfg.output.dir)
    spec = run_config.build_spec(cfg)
    print(f"[info] protocol={spec.name} xi={spec.xi} exact={cfg.exact}")

    if cfg.exact:
        report = run_exact(spec)
        doc = {"mode": "exact", "report": report.to_json_dict()}
        print(f"[info] estimate={report.estimate:.12g} target={report.exact_target:.12g}")
    else:
        sampler = run_config.build_sampler(cfg, required_settings(spec))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda r: run_sampled(spec, sampler, r), range(sampler.repetitions)))
        doc = {"mode": "shots", "seed": sampler.seed, "reports": [r.to_json_dict() for r in reports]}
        print(f"[info] first estimate={reports[0].estimate:.6g} +/- {reports[0].stderr:.3g}")
        if cfg.xi_grid:
            df = bias_variance_sweep(lambda xi: run_config.build_spec(cfg, xi), cfg.xi_grid, sampler, workers, progress)
            print(f"[sweep] wrote {write_csv(out_dir / 'sweep.csv', df)}")

    return write_json(out_dir / "weak_value.json", doc)


def cmd_sweep_xi(cfg: run_config.RunConfig, workers: int, progress: bool) -> Path:
    if cfg.xi_grid is None:
        raise ConfigError("sweep-xi needs xi_grid", field="xi_grid")
    family = lambda xi: run_config.build_spec(cfg, xi)  # noqa: E731
    if cfg.exact:
        df = exact_sweep(family, cfg.xi_grid, cfg.sampler.seed)
    else:
        sampler = run_config.build_sampler(cfg, required_settings(family(cfg.xi_grid[0])))
        print(f"[sweep] {len(cfg.xi_grid)} points x {sampler.repetitions} reps, seed {sampler.seed}")
        df = bias_variance_sweep(family, cfg.xi_grid, sampler, workers, progress)
    return write_csv(Path(cfg.output.dir) / "sweep.csv", df)


def cmd_wavefunction(cfg: run_config.RunConfig, workers: int, progress: bool) -> Path:
    wf = cfg.wavefunction
    out_dir = Path(cfg.output.dir)
    psi = run_config.build_state(wf.state)
    print(f"[wave] N={psi.n} method={wf.method} exact={cfg.exact}")

    if wf.method == "compare":
        report = wavefunction.efficiency_compare(
            psi, wf.target_fidelity, wf.xi, cfg.sampler.seed, wf.repetitions, wf.max_total_shots, workers, progress
        )
        print(f"[wave] scanning={report.shots_scanning} scan_free={report.shots_scan_free} ratio={report.ratio}")
        return write_json(out_dir / "compare.json", report.to_json_dict())

    sampler = None if cfg.exact else run_config.build_sampler(cfg, wavefunction.XY)
    if wf.method == "scan_free":
        result = wavefunction.scan_free(psi, sampler)
    else:
        result = wavefunction.lundeen_scan(psi, wf.xi, sampler)
    print(f"[wave] fidelity={result.fidelity:.12g} shots={result.total_shots}")

    write_csv(out_dir / "wavefunction.csv", result.to_frame(psi))
    summary = result.summary(None if cfg.exact else cfg.sampler.seed)
    if wf.method == "scanning":
        summary["xi"] = wf.xi
    return write_json(out_dir / "summary.json", summary)


def cmd_diagram(args) -> Path:
    src = Path(args.input)
    if not src.exists():
        raise ConfigError(f"diagram file not found: {src}", field="diagram")
    d = diagram.from_json(src.read_text(encoding="utf-8"))
    doc = {"action": args.action, "value": pair(diagram.evaluate(d))}

    if args.action == "rotate":
        rotated = diagram.rotate(d, args.k)
        doc.update(k=args.k, diagram=json.loads(diagram.to_json(rotated)), rotated_value=pair(diagram.evaluate(rotated)))
    elif args.action == "split":
        if not 0 <= args.idx < diagram.NODE_COUNT:
            raise ConfigError(f"node index must be 0..{diagram.NODE_COUNT - 1}, got {args.idx}", field="idx")
        children = diagram.spectral_split(d, args.idx)
        doc["idx"] = args.idx
        doc["children"] = [
            {"weight": w, "value": pair(diagram.evaluate(c)), "diagram": json.loads(diagram.to_json(c))}
            for w, c in children
        ]
        doc["recombined"] = pair(diagram.recombine(children))
    elif args.action == "compile":
        inst = diagram.compile(d)
        doc.update(
            t0=grid_pairs(inst.ct.t0),
            t1=grid_pairs(inst.ct.t1),
            initial=grid_pairs(inst.boundary.initial),
            final_effect=grid_pairs(inst.boundary.final_effect),
            scale=pair(inst.scale),
            measured_value=pair(inst.measured_value()),
        )

    out_dir = Path(args.out or DEFAULT_OUT["diagram"])
    return write_json(out_dir / f"diagram_{args.action}.json", doc)


def _weak_route_entry(rho: np.ndarray, ket_a: np.ndarray, ket_b: np.ndarray) -> list | None:
    # the weak-value route needs <b|rho|b> > 0; the direct framework route does not
    try:
        return pair(kd_weak_route(rho, ket_a, ket_b))
    except UndefinedWeakValueError:
        return None


def cmd_kd(cfg: run_config.RunConfig, workers: int, progress: bool) -> Path:
    rho, basis_a, basis_b = run_config.build_kd(cfg.kd)
    analytic = kirkwood_dirac(rho, basis_a, basis_b)
    measured = kd_grid_protocol(rho, basis_a, basis_b)
    weak_route = [
        [_weak_route_entry(rho, basis_a[:, i], basis_b[:, j]) for j in range(basis_b.shape[1])]
        for i in range(basis_a.shape[1])
    ]
    doc = {
        "basis_a": cfg.kd.basis_a,
        "basis_b": cfg.kd.basis_b,
        "dim": int(rho.shape[0]),
        "analytic": grid_pairs(analytic),
        "framework": grid_pairs(measured),
        "weak_route": weak_route,
        "max_deviation": float(np.max(np.abs(analytic - measured))),
        "total": pair(analytic.sum()),
    }
    print(f"[info] KD grid dim={rho.shape[0]} max deviation={doc['max_deviation']:.3g}")
    return write_json(Path(cfg.output.dir) / "kd.json", doc)


def cmd_summarize(args) -> Path:
    txt, _ = summarize_sweep.summarize(Path(args.csv), Path(args.out) if args.out else None)
    return txt


# --------------------------
# Entry point
# --------------------------
class ConfigArgumentParser(argparse.ArgumentParser):
    """Usage errors surface as ERR:2:<argument> lines like every other config error."""

    def error(self, message: str):
        named = re.match(r"argument ([^:/]+)", message) or re.search(r"required: ([^,\s]+)", message)
        field = named.group(1).lstrip("-").replace("-", "_") if named else "args"
        raise ConfigError(message, field=field)


def build_parser() -> argparse.ArgumentParser:
    ap = ConfigArgumentParser(prog="main.py", description="Weak-value measurement simulations")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Path to the JSON run config")
    common.add_argument("--out", help="Output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, help="Sampler seed (overrides sampler.seed)")
    common.add_argument("--exact", action="store_true", help="Use exact probabilities instead of shots")
    common.add_argument("--progress", action="store_true", help="Show progress bars on stderr")

    sub.add_parser("weak-value", parents=[common], help="Estimate a weak value with one protocol")
    sub.add_parser("sweep-xi", parents=[common], help="Bias / variance sweep over xi_grid")
    sub.add_parser("wavefunction", parents=[common], help="Direct wavefunction measurement")
    sub.add_parser("kd", parents=[common], help="Kirkwood-Dirac grid, analytic and measured")

    dg = sub.add_parser("diagram", help="Evaluate / rewrite / compile a diagram JSON")
    dg.add_argument("input", help="Diagram JSON file")
    dg.add_argument("--action", choices=["evaluate", "rotate", "split", "compile"], default="evaluate")
    dg.add_argument("--k", type=int, default=1, help="Rotation steps for --action rotate")
    dg.add_argument("--idx", type=int, default=3, help="Node index for --action split")
    dg.add_argument("--out", help="Output directory")

    sm = sub.add_parser("summarize", help="Summarize a sweep CSV")
    sm.add_argument("csv", help="Sweep CSV written by sweep-xi")
    sm.add_argument("--out", help="Output directory (default: next to the CSV)")
    return ap


CONFIG_COMMANDS = {
    "weak-value": cmd_weak_value,
    "sweep-xi": cmd_sweep_xi,
    "wavefunction": cmd_wavefunction,
    "kd": cmd_kd,
}


def main(argv=None) -> int:
    load_dotenv(".env")

    try:
        args = build_parser().parse_args(argv)
        if args.command == "diagram":
            written = cmd_diagram(args)
        elif args.command == "summarize":
            written = cmd_summarize(args)
        else:
            cfg = load_config(args)
            written = CONFIG_COMMANDS[args.command](cfg, worker_count(), args.progress)
    except WeakValueSimError as exc:
        print(exc.reason(), file=sys.stderr)
        return exc.exit_code

    print(f"[done] wrote {written}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
