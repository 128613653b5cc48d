"""Command-line driver.

    tradenet <subcommand> --config FILE --out DIR [--seed S] [--set key=value ...]
                          [--force] [--threads N]

Exit status: 0 success, 1 usage or config error, 2 runtime error,
3 no realization reached the quasi-stationary state.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import fit_record, histogram_to_csv, table_to_csv
from .config import format_config, parse_config
from .ensemble import EnsembleOutput, ExperimentConfig, default_threads
from .errors import ConfigError, EnsembleError, TradenetError
from . import experiments as X
from .rng import RNG_ALGORITHM

SUBCOMMANDS = ("simulate", "sweep", "percolation", "collapse", "pareto", "clique", "corners")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_NOT_CONVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tradenet",
                                description="Wealth exchange with preferential trading and its trade network.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="key = value experiment file (or a manifest.json)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--force", action="store_true", help="overwrite an existing manifest")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--edges", action="store_true", help="also export each graph as an edge list")
    return p


def read_config(path: str, overrides, seed) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        text = json.loads(text)["config"]
    if seed is not None:
        overrides = [*overrides, f"master_seed={seed}"]
    return parse_config(text, overrides)


# -- writers ----------------------------------------------------------------

def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8")


def write_ensemble(out: EnsembleOutput, d: Path, edges: bool = False) -> dict:
    """Standard per-ensemble files; returns the manifest entry."""
    d.mkdir(parents=True, exist_ok=True)
    for name in ("wealth", "degree", "weight", "strength"):
        h = getattr(out, f"{name}_hist")
        if h is not None:
            _write(d / f"{name}_hist.csv", histogram_to_csv(h))
    if out.percolation is not None:
        p = out.percolation
        _write(d / "percolation.csv", table_to_csv({
            "n": np.full(p.rho.size, p.n), "rho": p.rho, "mean_sm": p.mean_sm,
            "n_realizations": np.full(p.rho.size, p.n_realizations)}))
    if out.lambda_curve is not None:
        c = out.lambda_curve
        _write(d / "lambda_wealth.csv", table_to_csv({
            "lambda": c.lambda_bins, "mean_wealth": c.mean_wealth, "product": c.product,
            "count": c.counts}))
    if out.conditional is not None:
        c = out.conditional
        _write(d / "conditional_means.csv", table_to_csv({
            "k": c.k_values, "mean_strength": c.mean_strength, "mean_wealth": c.mean_wealth,
            "count": c.counts}))
    if edges:
        for r in out.used:
            if r.graph is not None:
                r.graph.write_edges(d / f"graph_{r.set_index}_{r.net_index}.edges")
    entry = dict(out.manifest)
    entry["fits"] = {k: fit_record(v) for k, v in out.fits.items()}
    if out.lambda_curve is not None:
        entry["chi"] = {"value": out.lambda_curve.chi, "stderr": out.lambda_curve.chi_stderr,
                        "excluded_bins": out.lambda_curve.excluded_bins}
    if out.conditional is not None:
        entry["phi"] = {"value": out.conditional.phi, "stderr": out.conditional.phi_stderr}
        entry["mu"] = {"value": out.conditional.mu, "stderr": out.conditional.mu_stderr}
    if out.percolation is not None:
        try:
            entry["rho_c"] = out.percolation.threshold
        except TradenetError:
            entry["rho_c"] = None
    return entry


def _collapse_record(c):
    if c is None:
        return None
    return {"eta": c.eta, "zeta": c.zeta, "score": c.score, "derived_gamma": c.derived_gamma}


def run_subcommand(name: str, cfg: ExperimentConfig, out_dir: Path, threads: int,
                   edges: bool = False) -> dict:
    """Run one subcommand, write its files, return the manifest body."""
    results: dict = {"subcommand": name}
    if name in ("simulate", "pareto"):
        ens = X.pareto_study(cfg, threads, edges)
        results["runs"] = {str(n): write_ensemble(o, out_dir / f"N{n}", edges)
                           for n, o in ens.items()}
        rows = [(n, o.fits["wealth"]) for n, o in ens.items() if "wealth" in o.fits]
        _write(out_dir / "pareto.csv", table_to_csv({
            "n": [n for n, _ in rows], "nu": [f.exponent - 1 for _, f in rows],
            "stderr": [f.stderr for _, f in rows]}))
    elif name == "sweep":
        ens = X.sweep_study(cfg, threads, edges)
        results["runs"] = {}
        rows = {k: [] for k in ("alpha", "n", "nu", "gamma_k", "gamma_w", "gamma_s", "chi",
                                "phi", "mu")}
        for (a, n), o in ens.items():
            results["runs"][f"alpha{a:g}_N{n}"] = write_ensemble(o, out_dir / f"alpha{a:g}_N{n}",
                                                                 edges)
            f = o.fits
            rows["alpha"].append(a)
            rows["n"].append(n)
            rows["nu"].append(f["wealth"].exponent - 1 if "wealth" in f else np.nan)
            for key, fit in (("gamma_k", "degree"), ("gamma_w", "weight"), ("gamma_s", "strength")):
                rows[key].append(f[fit].exponent if fit in f else np.nan)
            rows["chi"].append(o.lambda_curve.chi if o.lambda_curve else np.nan)
            rows["phi"].append(o.conditional.phi if o.conditional else np.nan)
            rows["mu"].append(o.conditional.mu if o.conditional else np.nan)
        _write(out_dir / "sweep.csv", table_to_csv(rows))
    elif name == "percolation":
        st = X.percolation_study(cfg, threads, edges)
        cols = {"n": [], "rho": [], "mean_sm": [], "n_realizations": []}
        for n, c in st.curves.items():
            cols["n"] += [n] * c.rho.size
            cols["rho"] += c.rho.tolist()
            cols["mean_sm"] += c.mean_sm.tolist()
            cols["n_realizations"] += [c.n_realizations] * c.rho.size
        _write(out_dir / "percolation.csv", table_to_csv(cols))
        results["thresholds"] = {str(n): v for n, v in st.thresholds.items()}
        results["theta"] = fit_record(st.theta) if st.theta else None
        results["shift_collapse_theta"] = st.shift_theta
        results["runs"] = {str(n): write_ensemble(o, out_dir / f"N{n}", edges)
                           for n, o in st.ensembles.items()}
    elif name == "collapse":
        st = X.collapse_study(cfg, threads, edges)
        results["degree_collapse"] = _collapse_record(st.degree)
        results["strength_collapse"] = _collapse_record(st.strength)
        results["runs"] = {str(n): write_ensemble(o, out_dir / f"N{n}", edges)
                           for n, o in st.ensembles.items()}
    elif name == "clique":
        res = X.clique_study(cfg, threads, edges)
        results["runs"] = {}
        for r in res:
            tag = f"alpha{r.alpha:g}"
            entry = write_ensemble(r.ensemble, out_dir / tag, edges)
            c, d = r.log_weight_hist
            _write(out_dir / tag / "log_weight.csv", table_to_csv({"ln_w": c, "density": d}))
            entry.update(peak_log_weight=r.peak_log_weight, t_single=r.t_single,
                         t_clique=r.t_clique)
            results["runs"][tag] = entry
    elif name == "corners":
        res = X.corners_study(cfg, threads, edges)
        results["runs"] = {}
        lines = []
        for r in res:
            tag = f"alpha{r.alpha:g}_beta{r.beta:g}"
            entry = write_ensemble(r.ensemble, out_dir / tag, edges)
            entry.update(tail_nu=r.tail_exponent, n_links=r.n_links, max_degree=r.max_degree,
                         richest_degree=r.richest_degree, star=r.star, dimer=r.dimer)
            results["runs"][tag] = entry
            lines.append(f"{tag}: links {r.n_links}, max degree {r.max_degree}, "
                         f"star={r.star}, dimer={r.dimer}\n")
        _write(out_dir / "topology.txt", "".join(lines))
    else:
        raise UsageError(f"unknown subcommand {name!r}")
    return results


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = read_config(args.config, args.overrides, args.seed)
        out_dir = Path(args.out)
        manifest = out_dir / "manifest.json"
        if manifest.exists() and not args.force:
            raise UsageError(f"{manifest} exists; pass --force to overwrite")
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be positive")
    except (ConfigError, UsageError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"tradenet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir.mkdir(parents=True, exist_ok=True)
    threads = args.threads or default_threads()
    try:
        body = run_subcommand(args.subcommand, cfg, out_dir, threads, args.edges)
    except EnsembleError as exc:
        print(f"tradenet: not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (TradenetError, ValueError, OSError) as exc:
        print(f"tradenet: {args.subcommand} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    doc = {"artifact_version": __version__, "rng_algorithm": RNG_ALGORITHM,
           "master_seed": cfg.master_seed, "config": format_config(cfg), **body}
    manifest.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n", encoding="utf-8")
    print(f"wrote {out_dir}")
    return EXIT_OK


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if dataclasses.is_dataclass(v):
        return dataclasses.asdict(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


if __name__ == "__main__":
    sys.exit(main())
