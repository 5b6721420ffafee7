"""End-to-end generative design campaign.

Each stage reads and writes plain files in the output directory, so stages can
be run one at a time (see :mod:`genforge.cli`) or all at once with
:func:`run_campaign`; both paths call the same stage functions and therefore
produce the same artifacts.

Artifacts::

    dataset.tsv      ingested table (5 features + target)
    ingest.json      standardizer, bounds, target condition
    oracle.json      MLP surrogate checkpoint
    sbo.json         SBO evaluation trace and incumbent
    cvae.json        CVAE checkpoint
    portfolio.tsv    generated designs (5 raw features + conditioning target)
    evaluation.tsv   per-design validity and predicted level
    report.json      full machine-readable report
    summary.txt      human-readable digest
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import cvae, metrics, sbo, surrogate
from .data import (FEATURE_NAMES, N_FEATURES, Dataset, FeatureBounds, Standardizer, compute_bounds,
                   fit_standardizer, load_dataset, percentile, save_dataset)
from .standin import make_standin_dataset

log = logging.getLogger(__name__)

STANDIN = "standin"

# sub-seed = master seed + offset
SEED_OFFSETS = {"oracle": 1000, "sbo": 2000, "cvae": 3000, "generation": 4000}

DATASET_FILE = "dataset.tsv"
INGEST_FILE = "ingest.json"
ORACLE_FILE = "oracle.json"
SBO_FILE = "sbo.json"
CVAE_FILE = "cvae.json"
PORTFOLIO_FILE = "portfolio.tsv"
EVALUATION_FILE = "evaluation.tsv"
REPORT_FILE = "report.json"
SUMMARY_FILE = "summary.txt"

STAGE_OF = {
    DATASET_FILE: "ingest",
    INGEST_FILE: "ingest",
    ORACLE_FILE: "train-surrogate",
    SBO_FILE: "sbo",
    CVAE_FILE: "train-cvae",
    PORTFOLIO_FILE: "generate",
}


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class StageDependencyError(StageError):
    pass


@dataclass
class CampaignConfig:
    dataset: str = STANDIN
    dataset_format: str = "whitespace"

    latent_dim: int = 8
    cvae_hidden: tuple[int, ...] = (128, 128)
    beta: float = 1.0
    cvae_epochs: int = 400
    cvae_learning_rate: float = 1e-3
    cvae_batch_size: int = 128

    surrogate_hidden: tuple[int, ...] = (128, 128)
    surrogate_epochs: int = 400
    surrogate_learning_rate: float = 1e-3
    surrogate_batch_size: int = 128

    sbo_initial: int = 20
    sbo_budget: int = 70

    n_generate: int = 256
    target_percentile: float = 10.0
    margin_fraction: float = 0.05
    histogram_bins: int = 30

    seed: int = 0
    oracle_seed: int | None = None
    sbo_seed: int | None = None
    cvae_seed: int | None = None
    generation_seed: int | None = None

    out_dir: str = "genforge-out"

    def __post_init__(self):
        self.cvae_hidden = tuple(int(h) for h in self.cvae_hidden)
        self.surrogate_hidden = tuple(int(h) for h in self.surrogate_hidden)
        if self.n_generate < 1:
            raise ValueError("n_generate must be >= 1")
        if not 0 <= self.target_percentile <= 100:
            raise ValueError("target_percentile must lie in [0, 100]")
        if self.margin_fraction < 0:
            raise ValueError("margin_fraction must be >= 0")
        if self.histogram_bins < 1:
            raise ValueError("histogram_bins must be >= 1")
        # nested configs validate themselves
        self.cvae_config()
        self.surrogate_config()
        self.sbo_config()

    def stage_seed(self, stage: str) -> int:
        explicit = getattr(self, f"{stage}_seed")
        return int(explicit) if explicit is not None else self.seed + SEED_OFFSETS[stage]

    def cvae_config(self) -> cvae.CvaeConfig:
        return cvae.CvaeConfig(latent_dim=self.latent_dim, hidden=self.cvae_hidden, beta=self.beta,
                               epochs=self.cvae_epochs, learning_rate=self.cvae_learning_rate,
                               batch_size=self.cvae_batch_size, seed=self.stage_seed("cvae"))

    def surrogate_config(self) -> surrogate.SurrogateConfig:
        return surrogate.SurrogateConfig(hidden=self.surrogate_hidden, epochs=self.surrogate_epochs,
                                         learning_rate=self.surrogate_learning_rate,
                                         batch_size=self.surrogate_batch_size, seed=self.stage_seed("oracle"))

    def sbo_config(self) -> sbo.SboConfig:
        return sbo.SboConfig(self.sbo_initial, self.sbo_budget, self.stage_seed("sbo"))

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cvae_hidden"] = list(self.cvae_hidden)
        d["surrogate_hidden"] = list(self.surrogate_hidden)
        return d

    def replace(self, **changes) -> "CampaignConfig":
        return dataclasses.replace(self, **changes)


_TUPLE_KEYS = {"cvae_hidden", "surrogate_hidden"}
_OPTIONAL_INT_KEYS = {"oracle_seed", "sbo_seed", "cvae_seed", "generation_seed"}


def _coerce(key: str, raw: str):
    fields = {f.name: f for f in dataclasses.fields(CampaignConfig)}
    if key not in fields:
        raise KeyError(f"unknown config key {key!r}")
    raw = raw.strip()
    if key in _TUPLE_KEYS:
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if key in _OPTIONAL_INT_KEYS:
        return None if raw.lower() in ("", "none") else int(raw)
    default = fields[key].default
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_overrides(pairs) -> dict:
    """``["key=value", ...]`` -> typed dict."""
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"expected key=value, got {pair!r}")
        k, v = pair.split("=", 1)
        out[k.strip()] = _coerce(k.strip(), v)
    return out


def load_config(path=None, **overrides) -> CampaignConfig:
    """Flat ``key = value`` file; blank lines and ``#`` comments ignored."""
    values = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            values[k.strip()] = _coerce(k.strip(), v)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return CampaignConfig(**values)


def write_config(cfg: CampaignConfig, path) -> None:
    lines = []
    for k, v in cfg.to_dict().items():
        if isinstance(v, list):
            v = ",".join(str(x) for x in v)
        lines.append(f"{k} = {'none' if v is None else v}")
    Path(path).write_text("\n".join(lines) + "\n")


# -- design tables -------------------------------------------------------------

def save_design_table(designs, path, condition_db: float | None = None) -> None:
    designs = np.atleast_2d(np.asarray(designs, dtype=np.float64))
    with Path(path).open("w") as fh:
        header = list(FEATURE_NAMES) + (["condition_db"] if condition_db is not None else [])
        fh.write("# " + "\t".join(header) + "\n")
        for row in designs:
            cells = [repr(float(v)) for v in row]
            if condition_db is not None:
                cells.append(repr(float(condition_db)))
            fh.write("\t".join(cells) + "\n")


def load_design_table(path) -> np.ndarray:
    """Read designs from tab/space/comma-delimited text; a 6th column (condition) is dropped."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cells = line.replace(",", " ").split()
        if len(cells) not in (N_FEATURES, N_FEATURES + 1):
            raise ValueError(f"{path}:{lineno}: expected {N_FEATURES} or {N_FEATURES + 1} columns, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells[:N_FEATURES]])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric cell") from None
    if not rows:
        raise ValueError(f"{path}: no designs")
    return np.array(rows)


def design_rows(designs, validity: metrics.ValidityReport, predicted) -> list[dict]:
    return [
        {"x": [float(v) for v in x], "valid": bool(ok), "violations": list(viol), "predicted_db": float(p)}
        for x, ok, viol, p in zip(np.atleast_2d(designs), validity.flags, validity.violations, predicted)
    ]


def save_evaluation(rows: list[dict], path) -> None:
    with Path(path).open("w") as fh:
        fh.write("# " + "\t".join(list(FEATURE_NAMES) + ["valid", "violated_features", "predicted_db"]) + "\n")
        for r in rows:
            viol = ",".join(str(j) for j in r["violations"]) or "-"
            fh.write("\t".join([repr(v) for v in r["x"]] + [str(int(r["valid"])), viol, repr(r["predicted_db"])]) + "\n")


# -- stages ---------------------------------------------------------------------

def _require(cfg: CampaignConfig, filename: str, stage: str) -> Path:
    path = cfg.out / filename
    if not path.is_file():
        raise StageDependencyError(stage, f"missing {path}; run the '{STAGE_OF[filename]}' stage first")
    return path


def _load_ingest(cfg: CampaignConfig, stage: str):
    ds = load_dataset(_require(cfg, DATASET_FILE, stage))
    meta = json.loads(_require(cfg, INGEST_FILE, stage).read_text())
    return ds, Standardizer.from_dict(meta["standardizer"]), FeatureBounds.from_dict(meta["bounds"]), meta


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def resolve_dataset(cfg: CampaignConfig) -> Dataset:
    if cfg.dataset in ("", STANDIN):
        return make_standin_dataset()
    return load_dataset(cfg.dataset, cfg.dataset_format)


def stage_ingest(cfg: CampaignConfig) -> dict:
    cfg.out.mkdir(parents=True, exist_ok=True)
    ds = resolve_dataset(cfg)
    std = fit_standardizer(ds)
    bounds = compute_bounds(ds, cfg.margin_fraction)
    target = percentile(ds.y, cfg.target_percentile)
    save_dataset(ds, cfg.out / DATASET_FILE)
    meta = {
        "dataset_source": ds.source,
        "n_records": len(ds),
        "standardizer": std.to_dict(),
        "bounds": bounds.to_dict(),
        "margin_fraction": cfg.margin_fraction,
        "target_percentile": cfg.target_percentile,
        "target_condition_db": target,
    }
    (cfg.out / INGEST_FILE).write_text(json.dumps(meta, indent=1))
    log.info("ingested %d records from %s; target %.2f dB", len(ds), ds.source, target)
    return meta


def stage_train_surrogate(cfg: CampaignConfig) -> surrogate.MlpSurrogate:
    ds, std, _, _ = _load_ingest(cfg, "train-surrogate")
    scfg = cfg.surrogate_config()
    oracle = surrogate.train_mlp_surrogate(ds, std, scfg)
    surrogate.save_surrogate(oracle, cfg.out / ORACLE_FILE, scfg)
    log.info("oracle trained: R2 %.4f, RMSE %.3f dB", oracle.train_r2, oracle.train_rmse)
    return oracle


def stage_sbo(cfg: CampaignConfig) -> sbo.SboResult:
    ds, std, _, _ = _load_ingest(cfg, "sbo")
    result = sbo.run_sbo(ds, cfg.sbo_config(), std)
    payload = {"config": asdict(cfg.sbo_config()), "result": result.to_dict()}
    (cfg.out / SBO_FILE).write_text(json.dumps(payload, indent=1))
    log.info("SBO best true value %.3f dB (index %d)", result.best_true_value, result.best_index)
    return result


def stage_train_cvae(cfg: CampaignConfig) -> cvae.CvaeModel:
    ds, std, _, _ = _load_ingest(cfg, "train-cvae")
    ccfg = cfg.cvae_config()
    model = cvae.train(cvae.build_model(ccfg), ds, std, ccfg)
    cvae.save_model(model, cfg.out / CVAE_FILE, std)
    log.info("CVAE trained: loss %.4f -> %.4f", model.loss_trace[0], model.loss_trace[-1])
    return model


def stage_generate(cfg: CampaignConfig) -> np.ndarray:
    _, std, _, meta = _load_ingest(cfg, "generate")
    model, _ = cvae.load_model(_require(cfg, CVAE_FILE, "generate"))
    target = meta["target_condition_db"]
    designs = cvae.generate(model, std, target, cfg.n_generate, cfg.stage_seed("generation"))
    save_design_table(designs, cfg.out / PORTFOLIO_FILE, target)
    return designs


def stage_evaluate(cfg: CampaignConfig, designs_path=None, output_path=None) -> list[dict]:
    _, _, bounds, _ = _load_ingest(cfg, "evaluate")
    oracle = surrogate.load_surrogate(_require(cfg, ORACLE_FILE, "evaluate"))
    designs = load_design_table(designs_path or _require(cfg, PORTFOLIO_FILE, "evaluate"))
    rows = design_rows(designs, metrics.check_validity(designs, bounds), surrogate.predict(oracle, designs))
    save_evaluation(rows, output_path or cfg.out / EVALUATION_FILE)
    return rows


def stage_report(cfg: CampaignConfig) -> dict:
    _, _, bounds, meta = _load_ingest(cfg, "report")
    oracle_path = _require(cfg, ORACLE_FILE, "report")
    oracle = surrogate.load_surrogate(oracle_path)
    sbo_result = sbo.SboResult.from_dict(json.loads(_require(cfg, SBO_FILE, "report").read_text())["result"])
    designs = load_design_table(_require(cfg, PORTFOLIO_FILE, "report"))

    validity = metrics.check_validity(designs, bounds)
    # one oracle instance scores both the portfolio and the baseline
    predicted = surrogate.predict(oracle, designs)
    baseline_pred = sbo.baseline_predicted_score(oracle, sbo_result)
    rows = design_rows(designs, validity, predicted)
    save_evaluation(rows, cfg.out / EVALUATION_FILE)

    report = build_report(cfg, meta, bounds, rows, sbo_result, baseline_pred, oracle,
                          oracle_digest=_file_digest(oracle_path))
    write_report(report, cfg.out)
    return report


def build_report(cfg, meta, bounds, rows, sbo_result, baseline_pred, oracle, oracle_digest="") -> dict:
    designs = np.array([r["x"] for r in rows])
    flags = np.array([r["valid"] for r in rows])
    valid_designs = designs[flags]
    valid_pred = np.array([r["predicted_db"] for r in rows])[flags]
    validity = metrics.ValidityReport(flags, [r["violations"] for r in rows], int(flags.sum()),
                                      float(flags.mean()))

    div = None
    if len(valid_designs) >= 2:
        d = metrics.diversity(valid_designs)
        div = {"value": d.value, "pair_count": d.pair_count, "n_valid": len(valid_designs),
               "units": "raw feature units; dominated by the frequency column (Hz)"}
    perf = hist = None
    if len(valid_pred):
        perf = metrics.performance_stats(valid_pred, baseline_pred).to_dict()
        hist = metrics.build_histogram(valid_pred, cfg.histogram_bins, baseline_pred).to_dict()

    return {
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "config": cfg.to_dict(),
        "dataset": {"source": meta["dataset_source"], "n_records": meta["n_records"]},
        "standardizer": meta["standardizer"],
        "bounds": bounds.to_dict(),
        "target_condition_db": meta["target_condition_db"],
        "validity": {
            "total": validity.total,
            "valid_count": validity.valid_count,
            "validity_rate": validity.validity_rate,
            "violations_per_feature": dict(zip(FEATURE_NAMES, validity.violation_counts(N_FEATURES))),
        },
        "diversity": div,
        "performance": perf,
        "histogram": hist,
        "sbo_baseline": {
            "best_design": sbo_result.best_design.tolist(),
            "best_index": sbo_result.best_index,
            "best_true_db": sbo_result.best_true_value,
            "predicted_db": baseline_pred,
            "evaluations": len(sbo_result.evaluated_values),
        },
        "oracle": {"train_r2": oracle.train_r2, "train_rmse": oracle.train_rmse, "sha256": oracle_digest},
        "designs": rows,
    }


def write_report(report: dict, out: Path) -> None:
    (out / REPORT_FILE).write_text(json.dumps(report, indent=1))
    (out / SUMMARY_FILE).write_text(summarize(report))


def summarize(report: dict) -> str:
    v, b, p, d = report["validity"], report["sbo_baseline"], report["performance"], report["diversity"]
    lines = [
        f"dataset            {report['dataset']['source']} ({report['dataset']['n_records']} records)",
        f"oracle fit         R2 {report['oracle']['train_r2']:.4f}  RMSE {report['oracle']['train_rmse']:.3f} dB",
        f"target condition   {report['target_condition_db']:.2f} dB",
        f"validity           {v['valid_count']}/{v['total']} ({100 * v['validity_rate']:.1f}%)",
        f"diversity          {d['value']:.1f} (raw units)" if d else "diversity          n/a (fewer than 2 valid designs)",
        f"SBO baseline       true {b['best_true_db']:.2f} dB, predicted {b['predicted_db']:.2f} dB",
    ]
    if p:
        lines += [
            f"portfolio          mean {p['mean']:.2f}  std {p['std']:.2f}  min {p['min']:.2f}  max {p['max']:.2f} dB",
            f"below baseline     {p['count_below_threshold']}/{p['n']} ({100 * p['fraction_below_threshold']:.1f}%)",
        ]
    return "\n".join(lines) + "\n"


def verify_report(report: dict) -> list[str]:
    """Recompute every summary from the per-design table; returns a list of mismatches (empty if consistent)."""
    problems = []
    rows = report["designs"]
    flags = np.array([r["valid"] for r in rows])
    if any(bool(r["violations"]) == r["valid"] for r in rows):
        problems.append("a design's validity flag disagrees with its violation list")
    v = report["validity"]
    if v["total"] != len(rows) or v["valid_count"] != int(flags.sum()):
        problems.append("validity counts do not match the design table")
    if not math.isclose(v["validity_rate"], flags.mean(), rel_tol=0, abs_tol=1e-12):
        problems.append("validity rate does not match the design table")

    valid = np.array([r["x"] for r in rows])[flags]
    pred = np.array([r["predicted_db"] for r in rows])[flags]
    if report["diversity"] is not None:
        if not math.isclose(report["diversity"]["value"], metrics.diversity(valid).value, rel_tol=1e-12):
            problems.append("diversity does not match the design table")
    elif len(valid) >= 2:
        problems.append("diversity missing although >= 2 valid designs exist")
    if report["performance"] is not None:
        again = metrics.performance_stats(pred, report["sbo_baseline"]["predicted_db"]).to_dict()
        for k, val in again.items():
            if not math.isclose(report["performance"][k], val, rel_tol=1e-12, abs_tol=1e-12):
                problems.append(f"performance.{k} does not match the design table")
        if sum(report["histogram"]["counts"]) != len(pred):
            problems.append("histogram counts do not sum to the number of valid designs")
    return problems


STAGES = {
    "ingest": stage_ingest,
    "train-surrogate": stage_train_surrogate,
    "sbo": stage_sbo,
    "train-cvae": stage_train_cvae,
    "generate": stage_generate,
    "evaluate": stage_evaluate,
    "report": stage_report,
}
PIPELINE = ("ingest", "train-surrogate", "sbo", "train-cvae", "generate", "report")


def run_stage(name: str, cfg: CampaignConfig, **kwargs):
    try:
        return STAGES[name](cfg, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, f"{type(exc).__name__}: {exc}") from exc


def run_campaign(cfg: CampaignConfig) -> dict:
    """Run every stage in order and return the report dict."""
    report = None
    for name in PIPELINE:
        log.info("stage %s", name)
        report = run_stage(name, cfg)
    return report
