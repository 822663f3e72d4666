"""End-to-end experiment: ingest, features, Pearson/PCA/CCA, four OLS models, scoring."""
from __future__ import annotations

import hashlib
import json
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterator

import numpy as np

from . import cca as cca_mod
from .errors import AnalysisError, ConfigError, DataError, EmptyWindowError, StageError, UndefinedEntryError
from .features import FeatureMatrix, assemble_panel, prune_correlated, standardize
from .linalg import correlation_matrix
from .market_data import BarWarning, align, parse_ohlcv_csv, validate_series
from .pca import PcaModel, fit_pca, pc_loadings, project, select_components
from .regression import ForecastMetrics, RegressionFit, fit_ols, forecast_metrics, predict

log = logging.getLogger(__name__)

FORMATS = ("json", "markdown", "csv")
_FORMAT_ALIASES = {"md": "markdown", "json": "json", "markdown": "markdown", "csv": "csv"}


@dataclass(frozen=True)
class DateRange:
    start: date
    end: date

    def __post_init__(self):
        if self.start > self.end:
            raise ConfigError(f"date range starts after it ends: {self.start} > {self.end}")

    def contains(self, d: date) -> bool:
        return self.start <= d <= self.end

    def to_dict(self) -> dict:
        return {"start": self.start.isoformat(), "end": self.end.isoformat()}


def parse_formats(value) -> frozenset[str]:
    items = value.split(",") if isinstance(value, str) else list(value)
    out = set()
    for item in items:
        key = str(item).strip().lower()
        if key not in _FORMAT_ALIASES:
            raise ConfigError(f"unknown output format {item!r}; choose from json, md, csv")
        out.add(_FORMAT_ALIASES[key])
    if not out:
        raise ConfigError("no output formats selected")
    return frozenset(out)


@dataclass(frozen=True)
class ExperimentConfig:
    btc_csv: Path
    eth_csv: Path
    in_sample: DateRange = DateRange(date(2017, 12, 15), date(2020, 12, 15))
    out_sample: DateRange = DateRange(date(2020, 12, 16), date(2021, 1, 31))
    prune_threshold: float = 0.995
    pca_thresholds: tuple[float, ...] = (0.75, 0.85)
    intercept: bool = False
    output_dir: Path = Path("report")
    formats: frozenset[str] = frozenset(FORMATS)
    btc_id: str = "BTC"
    eth_id: str = "ETH"

    def __post_init__(self):
        if self.in_sample.end >= self.out_sample.start:
            raise ConfigError(
                f"in-sample window must end before the out-of-sample window starts "
                f"({self.in_sample.end} >= {self.out_sample.start})"
            )
        if not 0.0 < self.prune_threshold <= 1.0:
            raise ConfigError(f"prune_threshold must lie in (0, 1], got {self.prune_threshold}")
        if not self.pca_thresholds:
            raise ConfigError("pca_thresholds is empty")
        for t in self.pca_thresholds:
            if not 0.0 < t <= 1.0:
                raise ConfigError(f"PCA threshold must lie in (0, 1], got {t}")
        if len(set(self.pca_thresholds)) != len(self.pca_thresholds):
            raise ConfigError("duplicate PCA thresholds")
        if not self.formats or not set(self.formats) <= set(FORMATS):
            raise ConfigError(f"formats must be a non-empty subset of {FORMATS}")
        if self.btc_id == self.eth_id:
            raise ConfigError("the two assets need distinct ids")

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
        """Build a config from its JSON form; relative paths resolve against ``base_dir``."""
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("btc_csv", "eth_csv"):
            if key not in raw:
                raise ConfigError(f"missing required key {key!r}")
        base = Path(base_dir) if base_dir is not None else Path.cwd()

        def path(v) -> Path:
            p = Path(v)
            return p if p.is_absolute() else base / p

        def window(v, name) -> DateRange:
            try:
                if isinstance(v, dict):
                    return DateRange(date.fromisoformat(v["start"]), date.fromisoformat(v["end"]))
                start, end = v
                return DateRange(date.fromisoformat(start), date.fromisoformat(end))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"{name}: expected {{'start': 'YYYY-MM-DD', 'end': 'YYYY-MM-DD'}} ({exc})") from None

        kwargs: dict = {"btc_csv": path(raw["btc_csv"]), "eth_csv": path(raw["eth_csv"])}
        try:
            if "in_sample" in raw:
                kwargs["in_sample"] = window(raw["in_sample"], "in_sample")
            if "out_sample" in raw:
                kwargs["out_sample"] = window(raw["out_sample"], "out_sample")
            if "prune_threshold" in raw:
                kwargs["prune_threshold"] = float(raw["prune_threshold"])
            if "pca_thresholds" in raw:
                kwargs["pca_thresholds"] = tuple(float(t) for t in raw["pca_thresholds"])
            if "intercept" in raw:
                if not isinstance(raw["intercept"], bool):
                    raise ConfigError("intercept must be true or false")
                kwargs["intercept"] = raw["intercept"]
            if "output_dir" in raw:
                # output goes where the user runs the command, not next to the config
                kwargs["output_dir"] = Path(raw["output_dir"])
            if "formats" in raw:
                kwargs["formats"] = parse_formats(raw["formats"])
            for key in ("btc_id", "eth_id"):
                if key in raw:
                    kwargs[key] = str(raw[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from None
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(raw, base_dir=path.parent)

    def analysis_dict(self) -> dict:
        """Settings that affect numbers; file locations and output options are excluded."""
        return {
            "in_sample": self.in_sample.to_dict(),
            "out_sample": self.out_sample.to_dict(),
            "prune_threshold": self.prune_threshold,
            "pca_thresholds": list(self.pca_thresholds),
            "intercept": self.intercept,
            "btc_id": self.btc_id,
            "eth_id": self.eth_id,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.analysis_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@contextmanager
def stage(name: str) -> Iterator[None]:
    try:
        yield
    except StageError:
        raise
    except AnalysisError as exc:
        raise StageError(name, exc) from exc


# -- stage results -----------------------------------------------------------

@dataclass(frozen=True)
class Prepared:
    """Standardized, pruned feature blocks covering both windows."""

    explanatory: FeatureMatrix  # left-asset features kept after pruning
    response: FeatureMatrix  # right-asset features kept after pruning
    target: np.ndarray  # standardized right-asset return, aligned to the rows above
    target_name: str
    standardized_all: FeatureMatrix  # every feature before pruning, all rows
    in_mask: np.ndarray
    out_mask: np.ndarray
    dropped: tuple[tuple[str, str], ...]
    warnings: tuple[BarWarning, ...]
    input_hashes: dict[str, str]
    skipped_rows: dict[str, int]
    unmatched_dates: int


@dataclass(frozen=True)
class ModelSpec:
    key: str
    label: str
    names: tuple[str, ...]


@dataclass
class InSampleResult:
    n: int
    dates: tuple[date, ...]
    pearson_names: tuple[str, ...]
    pearson: np.ndarray
    pca: PcaModel
    pca_k: dict[float, int]
    pca_loadings: np.ndarray
    cca: cca_mod.CcaModel
    wilks: list[cca_mod.WilksStep]
    cca_loadings: cca_mod.VariateLoadings
    y_variates: np.ndarray
    x_variates: np.ndarray
    models: list[ModelSpec]
    fits: dict[str, RegressionFit]
    metrics: dict[str, ForecastMetrics]


@dataclass
class EvalReport:
    config: ExperimentConfig
    prepared: Prepared
    in_sample: InSampleResult
    out_sample: dict[str, ForecastMetrics]
    out_dates: tuple[date, ...]
    provenance: dict = field(default_factory=dict)

    def ranking(self, window: str) -> list[str]:
        """Model keys by ascending RMSE; float-noise ties keep the model order."""
        metrics = self.in_sample.metrics if window == "in_sample" else self.out_sample
        order = [spec.key for spec in self.in_sample.models]
        return sorted(order, key=lambda k: (float(f"{metrics[k].rmse:.12g}"), order.index(k)))


# -- stages ------------------------------------------------------------------

def pearson_matrix(m: FeatureMatrix) -> np.ndarray:
    r = correlation_matrix(m.values)
    if np.any(np.isnan(r)):
        bad = [m.names[i] for i in range(m.n_cols) if np.isnan(r[i, i])]
        raise UndefinedEntryError(f"zero-variance columns make correlations undefined: {bad}")
    return r


def _read(path: Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def prepare(cfg: ExperimentConfig) -> Prepared:
    with stage("ingest"):
        raw_btc = _read(cfg.btc_csv)
        raw_eth = _read(cfg.eth_csv)
        btc, w_btc = validate_series(parse_ohlcv_csv(raw_btc, cfg.btc_id))
        eth, w_eth = validate_series(parse_ohlcv_csv(raw_eth, cfg.eth_id))
        panel = align(btc, eth, cfg.in_sample.start, cfg.out_sample.end)

    with stage("features"):
        x_raw, y_raw = assemble_panel(panel)
        joint_raw = x_raw.hstack(y_raw)
        in_mask = np.array([cfg.in_sample.contains(d) for d in joint_raw.dates], dtype=bool)
        out_mask = np.array([cfg.out_sample.contains(d) for d in joint_raw.dates], dtype=bool)
        joint = standardize(joint_raw, (cfg.in_sample.start, cfg.in_sample.end))
        pruned_in = prune_correlated(joint.take_rows(in_mask), cfg.prune_threshold)
        dropped = pruned_in.dropped
        kept = joint.drop([name for name, _ in dropped])
        x_names = [n for n in kept.names if n in x_raw.names]
        y_names = [n for n in kept.names if n in y_raw.names]
        target_name = f"{cfg.eth_id}_Return"
        for name, reason in dropped:
            log.info("pruned %s (%s)", name, reason)

    return Prepared(
        explanatory=kept.select(x_names),
        response=kept.select(y_names),
        target=joint.column(target_name).copy(),
        target_name=target_name,
        standardized_all=joint,
        in_mask=in_mask,
        out_mask=out_mask,
        dropped=dropped,
        warnings=tuple(w_btc + w_eth),
        input_hashes={
            cfg.btc_id: hashlib.sha256(raw_btc).hexdigest(),
            cfg.eth_id: hashlib.sha256(raw_eth).hexdigest(),
        },
        skipped_rows={cfg.btc_id: btc.skipped, cfg.eth_id: eth.skipped},
        unmatched_dates=panel.dropped,
    )


def _pct(t: float) -> str:
    return f"{t * 100:g}%"


def model_specs(cfg: ExperimentConfig, prep: Prepared, cca_p: int, pca_k: dict[float, int]) -> list[ModelSpec]:
    specs = [
        ModelSpec("initial", "initial dataset", prep.explanatory.names),
        ModelSpec("cca", "CCA", tuple(f"V_X{i + 1}" for i in range(cca_p))),
    ]
    for t in sorted(pca_k, reverse=True):
        specs.append(ModelSpec(f"pca@{t:g}", f"PCA with threshold {_pct(t)}", tuple(f"PC{i + 1}" for i in range(pca_k[t]))))
    return specs


def _design(spec: ModelSpec, x: FeatureMatrix, cca: cca_mod.CcaModel, pca: PcaModel, pca_k: dict[float, int],
            intercept: bool) -> np.ndarray:
    if spec.key == "initial":
        design = x.values
    elif spec.key == "cca":
        design = cca.x_variates(x)
    else:
        t = float(spec.key.split("@", 1)[1])
        design = project(x, pca, pca_k[t])
    if intercept:
        design = np.column_stack([np.ones(len(design)), design])
    return design


def _regressor_names(spec: ModelSpec, intercept: bool) -> tuple[str, ...]:
    return (("const",) if intercept else ()) + spec.names


def analyze_in_sample(cfg: ExperimentConfig, prep: Prepared) -> InSampleResult:
    x_in = prep.explanatory.take_rows(prep.in_mask)
    y_in = prep.response.take_rows(prep.in_mask)
    target_in = prep.target[prep.in_mask]
    all_in = prep.standardized_all.take_rows(prep.in_mask)

    with stage("pearson"):
        pearson = pearson_matrix(all_in)

    with stage("pca"):
        pca = fit_pca(x_in)
        pca_k = {t: select_components(pca, t) for t in cfg.pca_thresholds}
        scores = project(x_in, pca, pca.n_components)
        loadings = pc_loadings(x_in, scores)

    with stage("cca"):
        cca = cca_mod.fit_cca(y_in, x_in)
        wilks = cca_mod.wilks_tests(cca)
        cca_loadings = cca_mod.variate_loadings(cca, y_in, x_in)

    with stage("regression"):
        specs = model_specs(cfg, prep, cca.p, pca_k)
        fits: dict[str, RegressionFit] = {}
        metrics: dict[str, ForecastMetrics] = {}
        for spec in specs:
            design = _design(spec, x_in, cca, pca, pca_k, cfg.intercept)
            fit = fit_ols(design, target_in, _regressor_names(spec, cfg.intercept))
            fits[spec.key] = fit
            metrics[spec.key] = forecast_metrics(target_in, predict(fit, design))

    return InSampleResult(
        n=x_in.n_rows,
        dates=x_in.dates,
        pearson_names=all_in.names,
        pearson=pearson,
        pca=pca,
        pca_k=pca_k,
        pca_loadings=loadings,
        cca=cca,
        wilks=wilks,
        cca_loadings=cca_loadings,
        y_variates=cca.y_variates(y_in),
        x_variates=cca.x_variates(x_in),
        models=specs,
        fits=fits,
        metrics=metrics,
    )


def evaluate_out_of_sample(cfg: ExperimentConfig, prep: Prepared, ins: InSampleResult) -> dict[str, ForecastMetrics]:
    with stage("out_of_sample"):
        if not prep.out_mask.any():
            raise EmptyWindowError(
                f"no usable rows in the out-of-sample window [{cfg.out_sample.start}, {cfg.out_sample.end}]"
            )
        x_out = prep.explanatory.take_rows(prep.out_mask)
        target_out = prep.target[prep.out_mask]
        result = {}
        for spec in ins.models:
            design = _design(spec, x_out, ins.cca, ins.pca, ins.pca_k, cfg.intercept)
            result[spec.key] = forecast_metrics(target_out, predict(ins.fits[spec.key], design))
    return result


def run_experiment(cfg: ExperimentConfig) -> EvalReport:
    prep = prepare(cfg)
    ins = analyze_in_sample(cfg, prep)
    oos = evaluate_out_of_sample(cfg, prep, ins)
    out_dates = tuple(d for d, ok in zip(prep.explanatory.dates, prep.out_mask) if ok)
    provenance = {
        "config_hash": cfg.config_hash(),
        "input_sha256": dict(sorted(prep.input_hashes.items())),
        "n_in_sample": ins.n,
        "n_out_of_sample": len(out_dates),
        "in_sample_dates": [ins.dates[0].isoformat(), ins.dates[-1].isoformat()],
        "out_of_sample_dates": [out_dates[0].isoformat(), out_dates[-1].isoformat()],
        "skipped_rows": dict(sorted(prep.skipped_rows.items())),
        "unmatched_dates": prep.unmatched_dates,
        "dropped_columns": [{"name": n, "reason": r} for n, r in prep.dropped],
        "standardization": "mean and sample stddev fitted on in-sample rows, reused out of sample",
        "intercept": cfg.intercept,
    }
    return EvalReport(cfg, prep, ins, oos, out_dates, provenance)
