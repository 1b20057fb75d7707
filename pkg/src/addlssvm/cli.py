"""Command-line front end: data generation, training with structure
detection, tuning, and prediction.

Commands write deterministic artifacts given a config and seed; the only
timestamp lives under the metrics document's "meta" key. Exit codes:
0 success, 2 usage error, 3 numerical failure, 4 I/O error.
"""

import argparse
import csv
import json
import sys
from datetime import datetime, timezone

import numpy as np

from . import data as data_mod
from . import fusion, structure
from .data import CsvFormatError, CVPlan, Dataset, error_metrics, generate_vapnik, kfold_cv, load_csv
from .kernels import KernelSpec, build_grams, mixed_library
from .lssvm import CLASSIFICATION, REGRESSION, load_model, save_model, train_classifier, train_regressor_grams
from .solvers import NumericalError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

CURVE_POINTS = 200


class UsageError(ValueError):
    pass


def _parse_grid(text):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"bad numeric list: {text!r}") from None


def _parse_label_map(text):
    out = {}
    for pair in text.split(","):
        if "=" not in pair:
            raise UsageError(f"label map entries look like name=value; got {pair!r}")
        k, v = pair.split("=", 1)
        out[k.strip()] = float(v)
    return out


# -- gen ----------------------------------------------------------------------


def cmd_gen(args) -> int:
    ds = generate_vapnik(args.n, d=args.d, noise_sd=args.noise_sd, seed=args.seed)
    csv_path = f"{args.out}.csv"
    truth_path = f"{args.out}.truth.json"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.names) + ["y"])
        for i in range(ds.n_points):
            writer.writerow([repr(float(v)) for v in ds.X[:, i]] + [repr(float(ds.Y[i]))])
    truth = {
        "n": args.n,
        "d": args.d,
        "noise_sd": args.noise_sd,
        "seed": args.seed,
        "true_components": list(data_mod.TRUE_COMPONENTS),
        "noiseless": [float(v) for v in ds.noiseless],
    }
    with open(truth_path, "w") as fh:
        json.dump(truth, fh, indent=1)
        fh.write("\n")
    print(f"wrote {csv_path} and {truth_path}")
    return EXIT_OK


# -- fit ----------------------------------------------------------------------


def _load_dataset(path, target, label_map):
    return load_csv(path, target=target, label_map=label_map)


def _make_spec(D, sigma, library):
    if library:
        # caller already expanded X; D here is the expanded count
        raise AssertionError("spec for the mixed library is built in _prepare_inputs")
    return KernelSpec.shared_rbf(D, sigma)


def _prepare_inputs(ds: Dataset, sigma: float, library: bool):
    """Expand the inputs for the mixed kernel library when requested."""
    if library:
        X, spec, labels = mixed_library(ds.X, sigma)
        return X, spec, labels
    return ds.X, KernelSpec.shared_rbf(ds.n_components, sigma), [
        ("rbf", d + 1) for d in range(ds.n_components)
    ]


def _fit_once(ds: Dataset, args, sigma, params):
    """One fit at fixed hyperparameters; returns (model, fit_result_or_None)."""
    X, spec, _ = _prepare_inputs(ds, sigma, args.library)
    method = args.method
    if method == "lssvm":
        if ds.task == CLASSIFICATION:
            return train_classifier(X, ds.Y, spec, params["gamma"]), None
        grams = build_grams(X, spec)
        return train_regressor_grams(grams, ds.Y, params["gamma"]), None
    grams = build_grams(X, spec)
    if method == "l1":
        res = structure.fit_l1_components(
            grams, ds.Y, params["xi"], prune_scale=args.prune_scale
        )
    elif method == "stp":
        res = structure.fit_stp_components(
            grams, ds.Y, params["lam"], params["a"], prune_scale=args.prune_scale
        )
    else:
        raise UsageError(f"method {method} is not a plain fit")
    return res.model, res


def _cv_grid(args):
    """Cartesian hyperparameter grid for the chosen method."""
    sigmas = args.sigma_grid or ([args.sigma] if args.sigma is not None else None)
    if sigmas is None:
        raise UsageError("--sigma or --sigma-grid is required")
    grid = []
    if args.method == "lssvm":
        gammas = args.gamma_grid or ([args.gamma] if args.gamma is not None else None)
        if gammas is None:
            raise UsageError("method lssvm needs --gamma or --gamma-grid")
        grid = [{"sigma": s, "gamma": g} for s in sigmas for g in gammas]
    elif args.method == "l1":
        xis = args.xi_grid or ([args.xi] if args.xi is not None else None)
        if xis is None:
            raise UsageError("method l1 needs --xi or --xi-grid")
        grid = [{"sigma": s, "xi": x} for s in sigmas for x in xis]
    elif args.method == "stp":
        lams = args.lam_grid or ([args.lam] if args.lam is not None else None)
        if lams is None:
            raise UsageError("method stp needs --lam or --lam-grid")
        avals = args.a_grid or [args.a]
        grid = [{"sigma": s, "lam": l, "a": a} for s in sigmas for l in lams for a in avals]
    else:
        raise UsageError(f"CV tuning is not available for method {args.method}")
    return grid


def _predictions(model, X):
    if model.task == CLASSIFICATION:
        return model.decision_function(X)
    return model.predict(X)


def cmd_fit(args) -> int:
    label_map = _parse_label_map(args.label_map) if args.label_map else None
    ds = _load_dataset(args.data, args.target, label_map)
    val_ds = _load_dataset(args.val, args.target, label_map) if args.val else None
    test_ds = _load_dataset(args.test, args.target, label_map) if args.test else None

    needs_val = args.method in ("fuse-areg", "fuse-eta")
    if needs_val and val_ds is None:
        raise UsageError(f"method {args.method} needs --val")

    selected = {}
    fit_res = None
    if args.cv and args.method in ("lssvm", "l1", "stp"):
        grid = _cv_grid(args)
        plan = CVPlan.make(ds.n_points, k=args.cv, seed=args.seed)

        def trainer(fold_ds, params):
            model, _ = _fit_once(fold_ds, args, params["sigma"], params)
            return model

        def score(model, fold_val):
            X, _, _ = _prepare_inputs(fold_val, 1.0, args.library)
            pred = _predictions(model, X)
            if model.task == CLASSIFICATION:
                return float(np.mean(np.sign(pred + 0.0) != fold_val.Y))
            return float(np.mean((pred - fold_val.Y) ** 2))

        selected, records = kfold_cv(ds, plan, trainer, grid, score)
        model, fit_res = _fit_once(ds, args, selected["sigma"], selected)
        data_mod.save_score_table(records, f"{args.out}.cv.csv")
    elif args.method in ("lssvm", "l1", "stp"):
        if args.sigma is None:
            raise UsageError("--sigma is required without --cv")
        params = {}
        if args.method == "lssvm":
            if args.gamma is None:
                raise UsageError("method lssvm needs --gamma")
            params["gamma"] = args.gamma
        elif args.method == "l1":
            if args.xi is None:
                raise UsageError("method l1 needs --xi")
            params["xi"] = args.xi
        else:
            if args.lam is None:
                raise UsageError("method stp needs --lam")
            params.update(lam=args.lam, a=args.a)
        selected = {"sigma": args.sigma, **params}
        model, fit_res = _fit_once(ds, args, args.sigma, params)
    else:
        # fusion methods
        if args.sigma is None:
            raise UsageError("fusion methods need --sigma")
        X, spec, _ = _prepare_inputs(ds, args.sigma, args.library)
        Xv, _, _ = _prepare_inputs(val_ds, args.sigma, args.library)
        grams = build_grams(X, spec, X_val=Xv)
        if args.method == "fuse-areg":
            if args.xi is None:
                raise UsageError("method fuse-areg needs --xi")
            fit_res = fusion.fuse_areg_select(
                grams, ds.Y, val_ds.Y, args.xi, prune_scale=args.prune_scale
            )
            model = fit_res.model
            selected = {"sigma": args.sigma, "xi": args.xi}
        else:
            gamma_grid = args.gamma_grid or [args.gamma if args.gamma is not None else 1.0]
            split = fusion.ValidationSplit(X=Xv, Y=val_ds.Y)
            gamma_star, _, _ = fusion.tune_gamma_grid(X, ds.Y, split, spec, gamma_grid)
            als = fusion.fuse_eta_als(
                grams, ds.Y, val_ds.Y, init_eta=np.full(grams.n_components, gamma_star)
            )
            model = als.model
            fusion.als_trace_to_csv(als.trace, f"{args.out}.trace.csv")
            selected = {"sigma": args.sigma, "init_gamma": gamma_star}

    # artifacts
    save_model(model, f"{args.out}.model.json")
    _write_component_curves(model, f"{args.out}.components.csv")
    metrics = _metrics_doc(args, model, fit_res, ds, val_ds, test_ds, selected)
    with open(f"{args.out}.metrics.json", "w") as fh:
        json.dump(metrics, fh, indent=1)
        fh.write("\n")
    print(f"wrote {args.out}.model.json, {args.out}.components.csv, {args.out}.metrics.json")
    print(f"retained components: {list(model.retained)}")
    return EXIT_OK


def _write_component_curves(model, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component", "x", "value"])
        for d in model.retained:
            lo = float(model.X[d - 1].min())
            hi = float(model.X[d - 1].max())
            grid = np.linspace(lo, hi, CURVE_POINTS)
            vals = model.predict_component(d, grid)
            for x, v in zip(grid, vals):
                writer.writerow([d, repr(float(x)), repr(float(v))])


def _metrics_doc(args, model, fit_res, ds, val_ds, test_ds, selected) -> dict:
    def block(dataset):
        X, _, _ = _prepare_inputs(dataset, 1.0, args.library)
        pred = model.predict(X)
        if model.task == CLASSIFICATION:
            return {
                "error_rate": float(np.mean(pred != dataset.Y)),
                **error_metrics(model.decision_function(X), dataset.Y),
            }
        return error_metrics(pred, dataset.Y)

    doc = {
        "config": {
            k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None
        },
        "method": args.method,
        "selected": selected,
        "S_D": [int(d) for d in model.retained],
        "metrics": {"train": block(ds)},
        "meta": {"created": datetime.now(timezone.utc).isoformat()},
    }
    if val_ds is not None:
        doc["metrics"]["val"] = block(val_ds)
    if test_ds is not None:
        doc["metrics"]["test"] = block(test_ds)
    if fit_res is not None:
        doc["component_l1_norms"] = {
            str(d + 1): float(v) for d, v in enumerate(fit_res.sparsity.norms_l1)
        }
        doc["prune_threshold"] = fit_res.sparsity.threshold
        doc["objective"] = fit_res.objective
        doc["converged"] = bool(fit_res.converged)
    return doc


# -- predict ------------------------------------------------------------------


def cmd_predict(args) -> int:
    model = load_model(args.model)
    with open(args.data, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            header = []
        rows = list(reader)

    drop = set()
    if args.target and args.target in header:
        drop.add(header.index(args.target))
    feat_idx = [i for i in range(len(header)) if i not in drop]

    out_rows = []
    if rows:
        if len(feat_idx) != model.n_components:
            raise UsageError(
                f"input provides {len(feat_idx)} feature columns, "
                f"model expects D={model.n_components}"
            )
        X = np.empty((model.n_components, len(rows)))
        for r, row in enumerate(rows):
            if len(row) != len(header):
                raise CsvFormatError(f"{args.data}: row {r + 2} is ragged")
            for j, i in enumerate(feat_idx):
                try:
                    X[j, r] = float(row[i])
                except ValueError:
                    raise CsvFormatError(
                        f"{args.data}: row {r + 2}, column {header[i]!r}: "
                        f"non-numeric value {row[i]!r}"
                    ) from None
        if model.task == CLASSIFICATION:
            score = model.decision_function(X)
            pred = np.where(score >= 0, 1.0, -1.0)
            out_rows = [[repr(float(p)), repr(float(s))] for p, s in zip(pred, score)]
        else:
            pred = model.predict(X)
            out_rows = [[repr(float(p))] for p in pred]

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        if model.task == CLASSIFICATION:
            writer.writerow(["prediction", "score"])
        else:
            writer.writerow(["prediction"])
        writer.writerows(out_rows)
    print(f"wrote {args.out} ({len(out_rows)} predictions)")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="addlssvm",
        description="Additive kernel models with sparse component selection.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate the synthetic additive benchmark")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, default=10)
    g.add_argument("--noise-sd", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output prefix")
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fit", help="train a model / detect structure")
    f.add_argument("--data", required=True)
    f.add_argument("--target", default="y")
    f.add_argument(
        "--method", required=True, choices=["lssvm", "l1", "stp", "fuse-areg", "fuse-eta"]
    )
    f.add_argument("--sigma", type=float)
    f.add_argument("--sigma-grid", type=_parse_grid)
    f.add_argument("--gamma", type=float)
    f.add_argument("--gamma-grid", type=_parse_grid)
    f.add_argument("--xi", type=float)
    f.add_argument("--xi-grid", type=_parse_grid)
    f.add_argument("--lam", type=float)
    f.add_argument("--lam-grid", type=_parse_grid)
    f.add_argument("--a", type=float, default=3.7)
    f.add_argument("--a-grid", type=_parse_grid)
    f.add_argument("--cv", type=int, help="fold count for grid tuning")
    f.add_argument("--seed", type=int, default=0, help="fold assignment seed")
    f.add_argument("--val", help="validation CSV (fusion methods)")
    f.add_argument("--test", help="test CSV for reporting")
    f.add_argument("--label-map", help='classification labels, e.g. "spam=1,ham=-1"')
    f.add_argument("--library", action="store_true", help="offer RBF and linear kernels per input")
    f.add_argument("--prune-scale", type=float, default=structure.DEFAULT_PRUNE_SCALE)
    f.add_argument("--out", required=True, help="output prefix")
    f.set_defaults(func=cmd_fit)

    q = sub.add_parser("predict", help="predict with a saved model")
    q.add_argument("--model", required=True)
    q.add_argument("--data", required=True)
    q.add_argument("--target", help="column to drop if present")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_predict)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_USAGE
    except (CsvFormatError, OSError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, np.linalg.LinAlgError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
