"""Command-line interface: simulate, audit, select, score, bench.

Configuration comes from an optional JSON file plus flag overrides (flags
win). Every run writes the fully resolved configuration next to its outputs,
and all randomness derives from the single --seed, so a run can be reproduced
from its echo file alone. Exit codes: 0 success, 2 configuration error, 3
data error, 4 internal numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import plots
from .conformal import METHOD_NAMES, MethodConfig, fit_method
from .data import DataError, Dataset, load_csv, load_oracle_sidecar, write_csv
from .learners import LearnerConfig
from .metrics import cvi_report, cvp_curve, marginal_stats, reliability_diagram, wsc
from .reliability import cpa_train, estimator_preset
from .rng import RngStream
from .selection import cc_select, predict_with_trust
from .serialize import load_selection_bundle, save_selection_bundle
from .synth import gen_setting_d, generate_setting, run_protocol

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_BASE_ALIASES = {
    "auto": "auto",
    "ols": LearnerConfig.make("ols"),
    "knn5": LearnerConfig.make("knn", k=5),
    "knn20": LearnerConfig.make("knn", k=20),
    "forest": LearnerConfig.make("forest", trees=200, max_depth=None,
                                 min_leaf=5, max_features=None),
    "gbt": LearnerConfig.make("gbt-squared", trees=200, lr=0.1, max_depth=3),
}

_DEFAULTS = {
    "simulate": {"setting": "c", "n": 2000, "p": 10, "seed": 0,
                 "replicates": None, "out": "data.csv"},
    "audit": {"alpha": 0.1, "seed": 0, "method": "cp-residual", "base": "auto",
              "estimator": "baseline", "k": 5, "rho": 0.5, "gamma": 0.02,
              "bins": 10, "data": None, "target": None, "oracle": None,
              "setting": None, "n": 2000, "p": 10, "test": None, "test_n": None,
              "wsc_delta": 0.1, "wsc_directions": 100,
              "outdir": "audit-out", "jobs": 1, "plots": True},
    "select": {"alpha": 0.1, "seed": 0,
               "candidates": "cp-residual,cp-studentized,cqr", "base": "auto",
               "estimator": "baseline", "k": 5, "rho": 0.5,
               "trust_margin": 0.05, "data": None, "target": None,
               "setting": None, "n": 2000, "p": 10,
               "outdir": "select-out", "jobs": 1, "plots": True},
    "score": {"bundle": None, "input": None, "target": None,
              "out": "scores.csv", "jobs": 1},
    "bench": {"alpha": 0.1, "seed": 0, "settings": "c",
              "methods": "cp-residual,cp-studentized,cqr,qrf", "base": "ols",
              "estimator": "baseline", "k": 5, "rho": 0.5,
              "n_select": 2000, "n_test": 2000, "reps": 20,
              "sweep_rho": None, "sweep_n": None,
              "outdir": "bench-out", "jobs": 1, "plots": True},
}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpaudit",
        description="Audit, compare and select prediction-interval methods "
                    "by their conditional coverage.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON config file; flags override its values")
        return p

    p = add("simulate", "generate a synthetic benchmark dataset as CSV")
    p.add_argument("--setting", choices=("a", "b", "c", "d", "feasibility"))
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--out")

    p = add("audit", "audit one interval method's conditional coverage")
    p.add_argument("--data")
    p.add_argument("--target")
    p.add_argument("--oracle", help="oracle sidecar CSV for --data")
    p.add_argument("--setting", choices=("a", "b", "c", "d", "feasibility"))
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--method", choices=METHOD_NAMES)
    p.add_argument("--base", choices=sorted(_BASE_ALIASES))
    p.add_argument("--estimator")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--bins", type=int)
    p.add_argument("--test", help="held-out labelled CSV for marginal/worst-slab checks")
    p.add_argument("--test-n", dest="test_n", type=int,
                   help="generate this many held-out rows (synthetic sources)")
    p.add_argument("--wsc-delta", dest="wsc_delta", type=float)
    p.add_argument("--wsc-directions", dest="wsc_directions", type=int)
    p.add_argument("--outdir")
    p.add_argument("--jobs", type=int)
    p.add_argument("--no-plots", dest="plots", action="store_false")

    p = add("select", "pick the best method by repeated-split validity scoring")
    p.add_argument("--data")
    p.add_argument("--target")
    p.add_argument("--setting", choices=("a", "b", "c", "d", "feasibility"))
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--candidates")
    p.add_argument("--base", choices=sorted(_BASE_ALIASES))
    p.add_argument("--estimator")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--trust-margin", dest="trust_margin", type=float)
    p.add_argument("--outdir")
    p.add_argument("--jobs", type=int)
    p.add_argument("--no-plots", dest="plots", action="store_false")

    p = add("score", "score new inputs with a saved selection bundle")
    p.add_argument("--bundle")
    p.add_argument("--input")
    p.add_argument("--target", help="label column to drop from the input, if any")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int)

    p = add("bench", "run the selection-deployment protocol on synthetic settings")
    p.add_argument("--settings")
    p.add_argument("--methods")
    p.add_argument("--base", choices=sorted(_BASE_ALIASES))
    p.add_argument("--estimator")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--n-select", dest="n_select", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--sweep-rho", dest="sweep_rho",
                   help="comma-separated split ratios to sweep")
    p.add_argument("--sweep-n", dest="sweep_n",
                   help="comma-separated selection sizes to sweep")
    p.add_argument("--outdir")
    p.add_argument("--jobs", type=int)
    p.add_argument("--no-plots", dest="plots", action="store_false")
    return parser


def _resolve_config(args: argparse.Namespace) -> dict:
    command = args.command
    merged = dict(_DEFAULTS[command])
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                file_conf = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {config_path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        unknown = set(file_conf) - set(merged)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        merged.update(file_conf)
    merged.update(overrides)
    merged["command"] = command
    return merged


def _validate_common(conf: dict) -> None:
    alpha = conf.get("alpha")
    if alpha is not None and not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    rho = conf.get("rho")
    if rho is not None and not 0.0 < rho < 1.0:
        raise ConfigError(f"rho must be in (0, 1), got {rho}")
    k = conf.get("k")
    if k is not None and k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")


def _resolve_dataset(conf: dict, rng: RngStream) -> Dataset:
    if conf.get("data"):
        if not conf.get("target"):
            raise ConfigError("--target is required with --data")
        d = load_csv(conf["data"], conf["target"])
        if conf.get("oracle"):
            d = load_oracle_sidecar(d, conf["oracle"])
        return d
    if conf.get("setting"):
        return generate_setting(conf["setting"], conf["n"], rng, p=conf.get("p", 10))
    raise ConfigError("provide either --data/--target or --setting/--n")


def _method_config(name: str, base_alias: str) -> MethodConfig:
    if name not in METHOD_NAMES:
        raise ConfigError(f"unknown method {name!r}; know {METHOD_NAMES}")
    base = _BASE_ALIASES[base_alias]
    if name in ("cp-residual", "cp-studentized", "cv-plus", "lcp", "rlcp", "bootstrap"):
        return MethodConfig.make(name, base=base)
    return MethodConfig.make(name)


def _estimator(conf: dict):
    try:
        est = estimator_preset(conf["estimator"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return dataclasses.replace(est, K=conf["k"], rho=conf["rho"])


def _echo_config(conf: dict, outdir: Path) -> None:
    doc = {k: v for k, v in sorted(conf.items())}
    with open(outdir / "resolved-config.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_json(doc: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_rows(path: Path, header: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def cmd_simulate(conf: dict) -> int:
    rng = RngStream(conf["seed"]).child("simulate")
    setting = conf["setting"]
    if setting == "d" and conf.get("replicates"):
        ds, reps = gen_setting_d(conf["n"], conf["p"], rng, R=conf["replicates"])
        write_csv(ds, conf["out"])
        rep_path = str(conf["out"]) + ".replicates.csv"
        _write_rows(Path(rep_path), [f"rep{r + 1}" for r in range(reps.shape[1])],
                    [[_fmt(v) for v in row] for row in reps])
    else:
        ds = generate_setting(setting, conf["n"], rng, p=conf["p"])
        write_csv(ds, conf["out"])
    print(f"wrote {conf['out']} ({ds.n} rows, {ds.p} features)")
    return EXIT_OK


def cmd_audit(conf: dict) -> int:
    _validate_common(conf)
    outdir = Path(conf["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    _echo_config(conf, outdir)
    root = RngStream(conf["seed"])
    d = _resolve_dataset(conf, root.child("data"))
    method = _method_config(conf["method"], conf["base"])
    est = _estimator(conf)

    estimator = cpa_train(d, conf["alpha"], method, est, root.child("cpa"))
    etas_parts, label_parts = [], []
    for member in estimator.members:
        if member.labels is None:
            continue
        etas_parts.append(member.predict(member.labels.X))
        label_parts.append(member.labels.indicators)
    etas = np.concatenate(etas_parts)
    labels = np.concatenate(label_parts)

    report = cvi_report(etas, conf["alpha"], conf["gamma"]).to_dict()
    curve = cvp_curve(etas, conf["alpha"])
    diagram = reliability_diagram(etas, labels, conf["bins"])
    report["ece"] = diagram.ece
    report["method"] = conf["method"]
    report["estimator"] = conf["estimator"]
    report["n_labels"] = int(labels.size)
    report["member_flags"] = sorted({f for m in estimator.members for f in m.flags})

    test_set = None
    if conf.get("test"):
        test_set = load_csv(conf["test"], conf["target"] or "target")
    elif conf.get("test_n") and conf.get("setting"):
        test_set = generate_setting(conf["setting"], conf["test_n"],
                                    root.child("test"), p=conf.get("p", 10))
    if test_set is not None:
        deployed = fit_method(method, d, conf["alpha"], root.child("deploy"))
        coverage, avg_len = marginal_stats(deployed, test_set)
        lo, hi = deployed.predict(test_set.X)
        covered = ((lo <= test_set.y) & (test_set.y <= hi)).astype(float)
        slab = wsc(test_set.X, covered, delta=conf["wsc_delta"],
                   n_directions=conf["wsc_directions"], rng=root.child("wsc"))
        report["coverage"] = coverage
        report["avg_length"] = avg_len if math.isfinite(avg_len) else None
        report["avg_length_infinite"] = not math.isfinite(avg_len)
        report["wsc"] = slab.value
        report["wsc_slab"] = list(slab.slab)
        report["wsc_flags"] = list(slab.flags)

    _write_json(report, outdir / "report.json")
    _write_rows(outdir / "cvp.csv", ["proportion", "quantile"],
                [[_fmt(p), _fmt(q)] for p, q in zip(curve.props, curve.quantiles)])
    _write_rows(outdir / "diagram.csv",
                ["bin", "count", "mean_confidence", "empirical_accuracy"],
                [[r["bin"], r["count"], _fmt(r["mean_confidence"]),
                  _fmt(r["empirical_accuracy"])] for r in diagram.to_rows()])
    if conf["plots"]:
        plots.save_cvp_figure(curve, outdir / "cvp.png",
                              title=f"Validity profile: {conf['method']}")
        plots.save_diagram_figure(diagram, outdir / "diagram.png")
    print(f"audit written to {outdir} (cvi={report['cvi']:.4f}, ece={report['ece']:.4f})")
    return EXIT_OK


def cmd_select(conf: dict) -> int:
    _validate_common(conf)
    outdir = Path(conf["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    _echo_config(conf, outdir)
    root = RngStream(conf["seed"])
    d = _resolve_dataset(conf, root.child("data"))
    names = [s.strip() for s in conf["candidates"].split(",") if s.strip()]
    if not names:
        raise ConfigError("empty candidate list")
    candidates = [_method_config(n, conf["base"]) for n in names]
    est = _estimator(conf)

    result = cc_select(d, conf["alpha"], candidates, K=conf["k"], rho=conf["rho"],
                       est=est, rng=root.child("cc"),
                       trust_margin=conf["trust_margin"], jobs=conf["jobs"])
    doc = {
        "alpha": conf["alpha"],
        "candidates": names,
        "scores": [[None if not math.isfinite(v) else v for v in row]
                   for row in result.scores.tolist()],
        "score_flags": result.flags,
        "mean_cvi": [None if not math.isfinite(v) else v
                     for v in result.mean_cvi.tolist()],
        "selected_index": result.selected,
        "selected_method": names[result.selected],
        "trust_margin": result.trust_margin,
    }
    _write_json(doc, outdir / "selection.json")
    save_selection_bundle(result, outdir / "bundle.json")
    if conf["plots"]:
        plots.save_selection_figure(result.scores, names, result.selected,
                                    outdir / "selection.png")
    print(f"selected {names[result.selected]}; bundle written to {outdir}")
    return EXIT_OK


def _load_feature_csv(path):
    """Feature-only CSV: every column numeric; an `id` column becomes row ids."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"empty file: {path}") from None
        rows = []
        for r, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise DataError(f"row {r} has {len(row)} cells, expected {len(header)}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise DataError(f"non-numeric cell in row {r} of {path}") from None
    if not rows:
        raise DataError(f"file has a header but no data rows: {path}")
    X = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(X)):
        raise DataError(f"NaN/Inf cell in {path}")
    ids = np.arange(X.shape[0])
    if "id" in header:
        idx = header.index("id")
        ids = X[:, idx].astype(int)
        X = np.delete(X, idx, axis=1)
        header = header[:idx] + header[idx + 1:]
    return ids, X, header


def cmd_score(conf: dict) -> int:
    if not conf.get("bundle") or not conf.get("input"):
        raise ConfigError("score needs --bundle and --input")
    result = load_selection_bundle(conf["bundle"])
    ids, X, names = _load_feature_csv(conf["input"])
    if conf.get("target") and conf["target"] in names:
        idx = names.index(conf["target"])
        X = np.delete(X, idx, axis=1)
    if X.shape[1] != result.dataset.p:
        raise DataError(
            f"input has {X.shape[1]} features but the bundle was trained on "
            f"{result.dataset.p}")
    (l, u), trust, flag = predict_with_trust(result, X)
    _write_rows(Path(conf["out"]), ["id", "l", "u", "trust", "flag"],
                [[int(ids[i]), _fmt(float(l[i])), _fmt(float(u[i])),
                  _fmt(float(trust[i])), int(flag[i])] for i in range(X.shape[0])])
    print(f"scored {X.shape[0]} rows -> {conf['out']}")
    return EXIT_OK


def cmd_bench(conf: dict) -> int:
    _validate_common(conf)
    outdir = Path(conf["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    _echo_config(conf, outdir)
    root = RngStream(conf["seed"])
    settings = [s.strip().lower() for s in conf["settings"].split(",") if s.strip()]
    names = [s.strip() for s in conf["methods"].split(",") if s.strip()]
    methods = [_method_config(n, conf["base"]) for n in names]
    est = _estimator(conf)
    sweeps = {}
    if conf.get("sweep_rho"):
        sweeps["rho"] = [float(v) for v in str(conf["sweep_rho"]).split(",")]
    if conf.get("sweep_n"):
        sweeps["N"] = [int(v) for v in str(conf["sweep_n"]).split(",")]

    report = run_protocol(settings, methods, n_select=conf["n_select"],
                          n_test=conf["n_test"], reps=conf["reps"], est=est,
                          alpha=conf["alpha"], rng=root.child("bench"),
                          rho=conf["rho"], K=conf["k"],
                          sweeps=sweeps or None, jobs=conf["jobs"])
    _write_json(report.data, outdir / "protocol.json")
    for setting in settings:
        block = report.setting(setting)
        method_rows, rep_rows = [], []
        for row in block["per_rep"]:
            rep_rows.append([row["rep"], _fmt(row["tau_w"]), _fmt(row["ndcg1"]),
                             _fmt(row["ndcg3"]), _fmt(row["hit3"]),
                             "" if row["selected"] is None else row["selected"]])
            for m, name in enumerate(names):
                method_rows.append([
                    row["rep"], name, _fmt(row["est_cvi"][m]),
                    _fmt(row["oracle_cvi"][m]), _fmt(row["coverage"][m]),
                    _fmt(row["avg_length"][m]), _fmt(row["wsc"][m]),
                    "" if row["w1"][m] is None else _fmt(row["w1"][m])])
        _write_rows(outdir / f"bench_{setting}_reps.csv",
                    ["rep", "tau_w", "ndcg1", "ndcg3", "hit3", "selected"], rep_rows)
        _write_rows(outdir / f"bench_{setting}_methods.csv",
                    ["rep", "method", "est_cvi", "oracle_cvi", "coverage",
                     "avg_length", "wsc", "w1"], method_rows)
    if conf["plots"]:
        plots.save_bench_figure(report.data["settings"], outdir / "bench.png")
    print(f"protocol written to {outdir}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "audit": cmd_audit,
    "select": cmd_select,
    "score": cmd_score,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        conf = _resolve_config(args)
        return _COMMANDS[conf["command"]](conf)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - translated to exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
