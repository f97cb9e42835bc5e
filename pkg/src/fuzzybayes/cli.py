"""Command line front end: seeded data generation, fitting, prediction,
polynomial-baseline comparison and chain diagnostics.

Every command is a pure function of its inputs and seeds, so re-running
with the same arguments reproduces output files byte for byte.  Exit codes:
0 success, 1 usage problem, 2 runtime failure (which also leaves a
``.failed`` marker in the output directory).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import datagen
from .diagnostics import autocorrelation, geweke, summarize
from .fuzzy import from_json, to_json
from .models import (
    FuzzyModel,
    GlmModel,
    mse,
    posterior_predictive,
    predictive_mean,
)
from .probability import LikelihoodSpec, UniformPrior
from .sampler import SamplerConfig, load_chains, run_chains, save_chains


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# small shared helpers


def _clean(obj):
    """JSON-safe copy: numpy scalars to python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else repr(float(v)) for v in row])


def _mark_failed(out_dir, message):
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, ".failed"), "w") as fh:
            fh.write(message + "\n")
    except OSError:
        pass


def _load_config_file(path):
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as e:
        raise UsageError(f"config file {path} is not valid JSON: {e}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return cfg


def _merged_option(args, cfg, key, default=None):
    """Flag value if given, else config-file value, else default."""
    flag = getattr(args, key, None)
    if flag is not None and flag is not False:
        return flag
    if key in cfg:
        return cfg[key]
    return default


def _sampler_config(args, cfg, iters_default=10_000, burn_default=2_000):
    try:
        return SamplerConfig(
            n_iterations=int(_merged_option(args, cfg, "iters", iters_default)),
            burn_in=int(_merged_option(args, cfg, "burn_in", burn_default)),
            n_chains=int(_merged_option(args, cfg, "chains", 3)),
            seed=int(_merged_option(args, cfg, "seed", 0)),
        )
    except ValueError as e:
        raise UsageError(str(e)) from None


def _get_preset(name):
    try:
        return datagen.get_preset(name)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _read_inputs(path, n_inputs):
    """Input-point CSV: header plus one numeric row per prediction point."""
    if not os.path.exists(path):
        raise UsageError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise UsageError(f"{path}: need a header row and at least one input row")
    header, body = rows[0], rows[1:]
    if len(header) != n_inputs:
        raise UsageError(
            f"{path}: {len(header)} columns, model expects {n_inputs} inputs"
        )
    try:
        X = np.array([[float(v) for v in row] for row in body])
    except ValueError as e:
        raise UsageError(f"{path}: non-numeric value ({e})") from None
    if X.shape[1] != n_inputs:
        raise UsageError(f"{path}: ragged rows")
    return header, X


# ---------------------------------------------------------------------------
# model resolution shared by fit / compare-glm / predict


def _resolve_experiment(args, cfg):
    """Merge flags and config file into a model + data + description dict."""
    preset_name = _merged_option(args, cfg, "preset")
    data_path = _merged_option(args, cfg, "data")
    base_path = _merged_option(args, cfg, "rule_base")
    select_rules = bool(_merged_option(args, cfg, "select_rules", False))
    estimate_sigma = bool(_merged_option(args, cfg, "estimate_sigma", False))

    if preset_name is not None:
        preset = _get_preset(preset_name)
        if select_rules:
            preset = replace(preset, select_rules=True)
        if estimate_sigma:
            if preset.likelihood != "gaussian":
                raise UsageError("--estimate-sigma needs a gaussian likelihood")
            if preset.sigma_prior is None:
                preset = replace(
                    preset, sigma_fixed=None, sigma_prior=("uniform", 0.01, 10.0)
                )
        if data_path is not None:
            data = datagen.load_csv(data_path)
        else:
            data, _ = datagen.generate(preset)
        try:
            model = FuzzyModel.from_preset(preset, data=data)
        except ValueError as e:
            raise UsageError(str(e)) from None
    elif base_path is not None and data_path is not None:
        if not os.path.exists(base_path):
            raise UsageError(f"rule base file not found: {base_path}")
        with open(base_path) as fh:
            base = from_json(fh.read())
        data = datagen.load_csv(data_path)
        likelihood = LikelihoodSpec(str(cfg.get("likelihood", "gaussian")))
        sigma_fixed = cfg.get("sigma_fixed")
        sigma_prior = cfg.get("sigma_prior")
        if estimate_sigma and sigma_fixed is None and sigma_prior is None:
            sigma_prior = [0.01, 10.0]
        if likelihood.kind == "gaussian" and sigma_fixed is None and sigma_prior is None:
            sigma_prior = [0.01, 10.0]
        try:
            model = FuzzyModel(
                base,
                data,
                likelihood=likelihood,
                sigma_fixed=sigma_fixed,
                sigma_prior=(
                    None if sigma_prior is None else UniformPrior(*sigma_prior)
                ),
                select_rules=select_rules,
                require_coverage=bool(cfg.get("require_coverage", False)),
            )
        except ValueError as e:
            raise UsageError(str(e)) from None
    else:
        raise UsageError("give --preset, or a config with rule_base and data paths")

    description = {
        "preset": preset_name,
        "rule_base": json.loads(to_json(model.rule_base)),
        "likelihood": model.likelihood.kind,
        "sigma_fixed": model.sigma_fixed,
        "sigma_prior": (
            [model.prior.sigma.lo, model.prior.sigma.hi]
            if model._sigma_sampled else None
        ),
        "select_rules": model.select_rules,
        "require_coverage": model.require_coverage,
    }
    return model, data, description


def _rebuild_from_fit_dir(fit_dir):
    exp_path = os.path.join(fit_dir, "experiment.json")
    if not os.path.isdir(fit_dir) or not os.path.exists(exp_path):
        raise UsageError(f"not a fit directory (no experiment.json): {fit_dir}")
    with open(exp_path) as fh:
        exp = json.load(fh)
    data = datagen.load_csv(os.path.join(fit_dir, "data.csv"))
    base = from_json(json.dumps(exp["rule_base"]))
    sigma_prior = exp.get("sigma_prior")
    model = FuzzyModel(
        base,
        data,
        likelihood=LikelihoodSpec(exp["likelihood"]),
        sigma_fixed=exp.get("sigma_fixed"),
        sigma_prior=None if sigma_prior is None else UniformPrior(*sigma_prior),
        select_rules=bool(exp.get("select_rules", False)),
        require_coverage=bool(exp.get("require_coverage", False)),
    )
    chains = load_chains(os.path.join(fit_dir, "chains"))
    if chains.param_names != model.param_names:
        raise UsageError(f"{fit_dir}: chains do not match the experiment layout")
    return model, data, chains, exp


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args):
    preset = _get_preset(args.preset)
    seed = preset.seed if args.seed is None else args.seed
    data, truth = datagen.generate(preset, seed=seed)
    os.makedirs(args.out, exist_ok=True)
    datagen.save_csv(data, os.path.join(args.out, "data.csv"))
    _write_json(os.path.join(args.out, "truth.json"), {
        "preset": preset.name,
        "seed": seed,
        "n_points": preset.n_points,
        "noise_sd": preset.noise_sd,
        "likelihood": preset.likelihood,
        "column_names": list(data.column_names),
        "true_params": dict(zip(preset.generating_base.param_names(), truth.phi)),
    })
    print(f"wrote {args.out}/data.csv ({data.n} rows) and {args.out}/truth.json")
    return 0


def cmd_fit(args):
    cfg_file = _load_config_file(args.config) if args.config else {}
    model, data, description = _resolve_experiment(args, cfg_file)
    sampler = _sampler_config(args, cfg_file)

    chains = run_chains(sampler, model)
    summary = summarize(chains)

    out = args.out
    os.makedirs(out, exist_ok=True)
    datagen.save_csv(data, os.path.join(out, "data.csv"))
    _write_json(os.path.join(out, "experiment.json"), description)
    save_chains(chains, os.path.join(out, "chains"), config=sampler)

    doc = summary.to_dict()
    doc["preset"] = description["preset"]
    if model.n_binary:
        kept = chains.pooled()
        doc["inclusion_frequencies"] = {
            name: float(kept[:, model.n_continuous + k].mean())
            for k, name in enumerate(model.param_names[model.n_continuous:])
        }
    _write_json(os.path.join(out, "summary.json"), doc)
    print(f"fit {len(model.param_names)} parameters; outputs in {out}/")
    return 0


def cmd_predict(args):
    model, _, chains, _ = _rebuild_from_fit_dir(args.fit)
    header, X = _read_inputs(args.inputs, model.rule_base.n_inputs)
    draws = posterior_predictive(chains, model, X, seed=args.seed or 0)
    point = draws.mean(axis=0)

    os.makedirs(args.out, exist_ok=True)
    _write_csv(
        os.path.join(args.out, "draws.csv"),
        [f"row{i}" for i in range(X.shape[0])],
        draws,
    )
    _write_csv(
        os.path.join(args.out, "predictions.csv"),
        list(header) + ["prediction"],
        [list(x) + [p] for x, p in zip(X, point)],
    )
    print(f"predicted {X.shape[0]} points from {draws.shape[0]} draws")
    return 0


def cmd_compare_glm(args):
    cfg_file = _load_config_file(args.config) if args.config else {}
    try:
        glm_ids = [int(tok) for tok in args.glm.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--glm expects comma-separated integers, got {args.glm!r}")
    if not glm_ids:
        raise UsageError("--glm lists no models")

    preset_name = _merged_option(args, cfg_file, "preset")
    data_path = _merged_option(args, cfg_file, "data")
    if data_path is not None:
        data = datagen.load_csv(data_path)
    elif preset_name is not None:
        data, _ = datagen.generate(_get_preset(preset_name))
    else:
        raise UsageError("give --preset or a config with a data path")
    # short chains suffice for the low-dimensional polynomial baselines
    sampler = _sampler_config(args, cfg_file, iters_default=2_000, burn_default=500)

    rows = []
    for mid in glm_ids:
        try:
            model = GlmModel.numbered(mid, data)
        except ValueError as e:
            raise UsageError(str(e)) from None
        chains = run_chains(sampler, model)
        y_hat = predictive_mean(chains, model, data.X, seed=sampler.seed)
        rows.append({
            "model": f"GLM{mid}",
            "n_terms": len(model.terms),
            "mse": mse(y_hat, data.y),
        })
    if args.with_fbl:
        if preset_name is None:
            raise UsageError("--with-fbl needs --preset")
        model, data_fbl, _ = _resolve_experiment(args, cfg_file)
        chains = run_chains(sampler, model)
        y_hat = predictive_mean(chains, model, data_fbl.X, seed=sampler.seed)
        rows.append({"model": "FBL", "n_terms": model.n_continuous,
                     "mse": mse(y_hat, data_fbl.y)})

    os.makedirs(args.out, exist_ok=True)
    _write_json(os.path.join(args.out, "mse_table.json"), {
        "preset": preset_name,
        "data": data_path,
        "n_points": data.n,
        "sampler": {"n_iterations": sampler.n_iterations,
                    "burn_in": sampler.burn_in,
                    "n_chains": sampler.n_chains,
                    "seed": sampler.seed},
        "rows": rows,
    })
    best = min(rows, key=lambda r: r["mse"])
    print(f"lowest mse: {best['model']} ({best['mse']:.4f}); table in {args.out}/")
    return 0


def cmd_diagnose(args):
    fit_dir = args.fit
    chains_dir = os.path.join(fit_dir, "chains")
    if not os.path.isdir(chains_dir):
        raise UsageError(f"not a fit directory (no chains/): {fit_dir}")
    chains = load_chains(chains_dir)
    kept = chains.post_burn_in()

    os.makedirs(args.out, exist_ok=True)
    for j, name in enumerate(chains.param_names):
        pdir = os.path.join(args.out, name)
        os.makedirs(pdir, exist_ok=True)

        _write_csv(
            os.path.join(pdir, "trace.csv"),
            ["iteration"] + [f"chain_{c}" for c in range(chains.n_chains)],
            [[str(i)] + list(chains.samples[:, i, j])
             for i in range(chains.n_iterations)],
        )

        pooled = kept[:, :, j].ravel()
        counts, edges = np.histogram(pooled, bins=40)
        _write_csv(
            os.path.join(pdir, "density.csv"),
            ["bin_mid", "count"],
            [[0.5 * (edges[i] + edges[i + 1]), str(int(c))]
             for i, c in enumerate(counts)],
        )

        first = kept[0, :, j]
        if np.all(first == first[0]):
            rho = np.array([1.0])  # constant chain: only the trivial lag
        else:
            rho = autocorrelation(first, min(100, first.size - 1))
        _write_csv(
            os.path.join(pdir, "autocorr.csv"),
            ["lag", "autocorrelation"],
            [[str(lag), r] for lag, r in enumerate(rho)],
        )

        zrows = []
        for c in range(chains.n_chains):
            for s, z in enumerate(geweke(kept[c, :, j])):
                zrows.append([str(c), str(s), z])
        _write_csv(os.path.join(pdir, "geweke.csv"), ["chain", "segment", "z"], zrows)

    print(f"wrote diagnostics for {len(chains.param_names)} parameters to {args.out}/")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzybayes",
        description="Bayesian fitting of fuzzy rule-based systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_sampler_flags(p):
        p.add_argument("--seed", type=int, default=None,
                       help="sampler seed (default 0)")
        p.add_argument("--chains", type=int, default=None,
                       help="number of chains (default 3)")
        p.add_argument("--iters", type=int, default=None,
                       help="iterations per chain")
        p.add_argument("--burn-in", dest="burn_in", type=int, default=None,
                       help="burn-in iterations")

    def add_model_flags(p):
        p.add_argument("--preset", help="named experiment preset")
        p.add_argument("--config", help="experiment JSON file (flags win)")
        p.add_argument("--select-rules", dest="select_rules",
                       action="store_true", default=None,
                       help="sample per-rule inclusion flags")
        p.add_argument("--estimate-sigma", dest="estimate_sigma",
                       action="store_true", default=None,
                       help="treat the noise scale as unknown")

    g = sub.add_parser("generate", help="write a preset's dataset and truth")
    g.add_argument("--preset", required=True)
    g.add_argument("--seed", type=int, default=None,
                   help="data seed (default: the preset's)")
    g.add_argument("-o", "--out", required=True)
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="sample a model's posterior")
    add_model_flags(f)
    add_sampler_flags(f)
    f.add_argument("-o", "--out", required=True)
    f.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="posterior predictive at new inputs")
    p.add_argument("--fit", required=True, help="directory written by fit")
    p.add_argument("--inputs", required=True, help="CSV of input points")
    p.add_argument("--seed", type=int, default=None, help="noise seed")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_predict)

    c = sub.add_parser("compare-glm", help="MSE table of polynomial baselines")
    add_model_flags(c)
    add_sampler_flags(c)
    c.add_argument("--glm", default="1,2,3,4",
                   help="comma-separated model numbers (default 1,2,3,4)")
    c.add_argument("--with-fbl", dest="with_fbl", action="store_true",
                   help="append the fuzzy model's MSE row")
    c.add_argument("-o", "--out", required=True)
    c.set_defaults(func=cmd_compare_glm)

    d = sub.add_parser("diagnose", help="per-parameter diagnostic CSVs")
    d.add_argument("--fit", required=True, help="directory written by fit")
    d.add_argument("-o", "--out", required=True)
    d.set_defaults(func=cmd_diagnose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses exit code 2 for usage problems; we reserve 2 for
        # runtime failures, so fold its errors into the usage code
        return 0 if e.code == 0 else 1
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - boundary: report, mark, exit 2
        out = getattr(args, "out", None)
        if out:
            _mark_failed(out, f"{type(e).__name__}: {e}")
        print(f"failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
