"""Deterministic report output: ``report.json``, ``report.md`` and ``plots/*.csv``.

Every real number is written with 6 significant digits, rounded half-even on
its shortest decimal representation, so identical inputs give identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

import numpy as np

from .errors import DataError
from .pipeline import EvalReport, ExperimentConfig

SIG_DIGITS = 6


def sig(x: float, digits: int = SIG_DIGITS) -> str:
    """Format ``x`` with ``digits`` significant digits, half-even."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0"
    d = Decimal(repr(x))
    q = d.quantize(Decimal(1).scaleb(d.adjusted() - digits + 1), rounding=ROUND_HALF_EVEN)
    return f"{float(q):.{digits}g}"


def _round_tree(obj):
    if isinstance(obj, dict):
        return {str(k): _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round_tree(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        text = sig(obj)
        return text if text in ("nan", "inf", "-inf") else float(text)
    return obj


def _metrics(m) -> dict:
    return {"rmse": m.rmse, "mae": m.mae, "n": m.n}


def report_dict(r: EvalReport) -> dict:
    ins = r.in_sample
    cfg = r.config
    load = ins.cca_loadings
    return _round_tree({
        "provenance": {
            **r.provenance,
            "inputs": {cfg.btc_id: cfg.btc_csv.name, cfg.eth_id: cfg.eth_csv.name},
        },
        "config": cfg.analysis_dict(),
        "warnings": [
            {"asset": w.asset_id, "date": w.date.isoformat(), "kind": w.kind, "message": w.message,
             "repaired": w.repaired}
            for w in r.prepared.warnings
        ],
        "pearson": {"names": list(ins.pearson_names), "matrix": ins.pearson},
        "pca": {
            **ins.pca.to_dict(),
            "selected_components": {f"{t:g}": k for t, k in sorted(ins.pca_k.items())},
            "loadings": ins.pca_loadings,
        },
        "cca": {
            **ins.cca.to_dict(),
            "wilks": [
                {"k": s.k, "canonical_correlation": s.correlation, "wilks_lambda": s.wilks_lambda,
                 "num_df": s.df1, "den_df": s.df2, "f_value": s.f_value, "p_value": s.p_value}
                for s in ins.wilks
            ],
            "loadings": {
                "x_features_vs_x_variates": load.x_own,
                "y_features_vs_y_variates": load.y_own,
                "y_features_vs_x_variates": load.y_cross,
                "x_features_vs_y_variates": load.x_cross,
            },
        },
        "models": [
            {
                "key": spec.key,
                "label": spec.label,
                "regressors": list(ins.fits[spec.key].regressor_names),
                "fit": ins.fits[spec.key].to_dict(),
                "in_sample": _metrics(ins.metrics[spec.key]),
                "out_of_sample": _metrics(r.out_sample[spec.key]),
            }
            for spec in ins.models
        ],
        "ranking": {"in_sample": r.ranking("in_sample"), "out_of_sample": r.ranking("out_of_sample")},
    })


# -- markdown ----------------------------------------------------------------

def _table(header: list[str], rows: list[list], align: str | None = None) -> str:
    cells = [[c if isinstance(c, str) else sig(c) for c in row] for row in rows]
    marks = align or "l" + "r" * (len(header) - 1)
    sep = ["---" if a == "l" else "---:" for a in marks]
    lines = ["| " + " | ".join(header) + " |", "| " + " | ".join(sep) + " |"]
    lines += ["| " + " | ".join(row) + " |" for row in cells]
    return "\n".join(lines)


def _matrix_table(row_names, col_names, m) -> str:
    return _table([""] + list(col_names), [[name] + list(row) for name, row in zip(row_names, m)])


def render_markdown(r: EvalReport) -> str:
    ins = r.in_sample
    cfg = r.config
    pca = ins.pca
    cca = ins.cca
    out = [f"# {cfg.btc_id}/{cfg.eth_id} dimensionality reduction report", ""]

    prov = r.provenance
    out += [
        "## Provenance",
        "",
        _table(
            ["item", "value"],
            [
                ["config sha256", prov["config_hash"]],
                *[[f"{k} input sha256", v] for k, v in prov["input_sha256"].items()],
                ["in-sample rows", str(prov["n_in_sample"])],
                ["in-sample dates", " .. ".join(prov["in_sample_dates"])],
                ["out-of-sample rows", str(prov["n_out_of_sample"])],
                ["out-of-sample dates", " .. ".join(prov["out_of_sample_dates"])],
                ["skipped rows", ", ".join(f"{k}: {v}" for k, v in prov["skipped_rows"].items())],
                ["unmatched dates", str(prov["unmatched_dates"])],
                ["intercept", str(prov["intercept"]).lower()],
                ["standardization", prov["standardization"]],
            ],
            "ll",
        ),
        "",
    ]
    if r.prepared.dropped:
        out += ["Dropped columns:", ""] + [f"- `{n}`: {why}" for n, why in r.prepared.dropped] + [""]
    if r.prepared.warnings:
        out += ["Data warnings:", ""] + [
            f"- {w.asset_id} {w.date.isoformat()} {w.kind}: {w.message}" for w in r.prepared.warnings
        ] + [""]

    out += ["## Pearson correlation matrix", "", _matrix_table(ins.pearson_names, ins.pearson_names, ins.pearson), ""]

    out += [
        "## PCA: total variance explained",
        "",
        _table(
            ["Component", "Eigenvalue", "% of Variance", "Cumulative %"],
            [
                [f"Component {i + 1}", lam, 100 * ratio, 100 * cum]
                for i, (lam, ratio, cum) in enumerate(zip(pca.eigenvalues, pca.explained_ratio, pca.cumulative_ratio))
            ],
        ),
        "",
        "Selected components: " + ", ".join(f"{t * 100:g}% -> {k}" for t, k in sorted(ins.pca_k.items())),
        "",
        "## PCA: feature / component correlations",
        "",
        _matrix_table(pca.feature_names, [f"PC{i + 1}" for i in range(pca.n_components)], ins.pca_loadings),
        "",
    ]

    out += [
        "## CCA: canonical correlations and Wilks' lambda",
        "",
        _table(
            ["Canonical Correlation", "Wilks' lambda", "Num DF", "Den DF", "F Value", "Pr > F"],
            [[s.correlation, s.wilks_lambda, s.df1, s.df2, s.f_value, s.p_value] for s in ins.wilks],
            "rrrrrr",
        ),
        "",
    ]
    vx = [f"V_X{i + 1}" for i in range(cca.p)]
    vy = [f"V_Y{i + 1}" for i in range(cca.p)]
    load = ins.cca_loadings
    out += [
        f"## CCA: {cfg.btc_id} features vs {cfg.btc_id} variates", "", _matrix_table(cca.x_names, vx, load.x_own), "",
        f"## CCA: {cfg.eth_id} features vs {cfg.eth_id} variates", "", _matrix_table(cca.y_names, vy, load.y_own), "",
        f"## CCA: {cfg.eth_id} features vs {cfg.btc_id} variates", "", _matrix_table(cca.y_names, vx, load.y_cross), "",
        f"## CCA: {cfg.btc_id} features vs {cfg.eth_id} variates", "", _matrix_table(cca.x_names, vy, load.x_cross), "",
    ]

    for spec in ins.models:
        fit = ins.fits[spec.key]
        out += [
            f"## Linear regression: {spec.label}",
            "",
            _table(
                ["", "parameters", "t-stat", "p-value"],
                [[name, b, t, p] for name, b, t, p in zip(fit.regressor_names, fit.coefficients, fit.t_stats, fit.p_values)],
            ),
            "",
        ]

    for title, metrics in (("In-sample", ins.metrics), ("Out-of-sample", r.out_sample)):
        out += [
            f"## {title} RMSE and MAE",
            "",
            _table(["Model", "RMSE", "MAE"], [[spec.label, metrics[spec.key].rmse, metrics[spec.key].mae] for spec in ins.models]),
            "",
        ]
    return "\n".join(out)


# -- plot data ---------------------------------------------------------------

def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([c if isinstance(c, str) else sig(c) if isinstance(c, float) else c for c in row])
    return buf.getvalue()


def plot_files(r: EvalReport) -> dict[str, str]:
    ins = r.in_sample
    pca = ins.pca
    files = {
        "scree.csv": _csv(
            ["component", "eigenvalue", "explained_ratio", "cumulative_ratio"],
            [[i + 1, float(a), float(b), float(c)] for i, (a, b, c) in
             enumerate(zip(pca.eigenvalues, pca.explained_ratio, pca.cumulative_ratio))],
        ),
        "pearson.csv": _csv(
            ["feature"] + list(ins.pearson_names),
            [[name] + [float(v) for v in row] for name, row in zip(ins.pearson_names, ins.pearson)],
        ),
    }
    for i in range(ins.cca.p):
        files[f"cca_pair_{i + 1}.csv"] = _csv(
            ["date", f"V_Y{i + 1}", f"V_X{i + 1}"],
            [[d.isoformat(), float(a), float(b)] for d, a, b in zip(ins.dates, ins.y_variates[:, i], ins.x_variates[:, i])],
        )
    feats = r.prepared.standardized_all
    files["features_standardized.csv"] = _csv(
        ["date"] + list(feats.names),
        [[d.isoformat()] + [float(v) for v in row] for d, row in zip(feats.dates, feats.values)],
    )
    return files


def emit_report(r: EvalReport, cfg: ExperimentConfig | None = None, output_dir: Path | None = None,
                formats=None) -> list[Path]:
    """Write the selected report formats and return the paths written."""
    cfg = cfg or r.config
    root = Path(output_dir) if output_dir is not None else cfg.output_dir
    formats = set(formats) if formats is not None else set(cfg.formats)
    written: list[Path] = []

    def write(path: Path, text: str) -> None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc.strerror}") from None
        written.append(path)

    if "json" in formats:
        write(root / "report.json", json.dumps(report_dict(r), indent=2, sort_keys=False, allow_nan=False) + "\n")
    if "markdown" in formats:
        write(root / "report.md", render_markdown(r) + "\n")
    if "csv" in formats:
        for name, text in sorted(plot_files(r).items()):
            write(root / "plots" / name, text)
    return written
