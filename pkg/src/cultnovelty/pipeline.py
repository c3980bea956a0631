"""Batch pipeline: corpus -> splits -> scores -> statistical reports.

Every stage is a pure function of (inputs, config, seed); outputs are
canonically ordered and float cells use 9 significant digits, so reruns
are byte-identical at any worker count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .builder import (
    build_split,
    detect_country,
    load_dish_specs,
    matched_documents,
)
from .corpus import Document, control_variables
from .distances import Registry, compute_matrix, geo_distance, iw_distance, load_distance_matrix, load_registry
from .errors import (
    AllTied,
    ConstantSeries,
    CultNoveltyError,
    IneligibleDish,
    InsufficientObservations,
    MissingCoordinates,
    ParseError,
    RankDeficient,
    UnknownCountry,
)
from .ingest import read_documents
from .metrics import build_knowledge_space, score_all
from .stats import kendall_tau, mediate, ols, pearson, rbo

log = logging.getLogger(__name__)

METRIC_COLUMNS = (
    "appearance",
    "disappearance",
    "newness",
    "uniqueness",
    "difference",
    "new_surprise",
    "divergent_surprise",
)
CONTROL_COLUMNS = ("lexical_diversity", "new_ingredient_ratio", "length_ratio")
SCORE_COLUMNS = ("product", "kb_culture", "variation_id", "variation_culture") + METRIC_COLUMNS + CONTROL_COLUMNS
FIVE_METRICS = ("newness", "uniqueness", "difference", "new_surprise", "divergent_surprise")
DISTANCE_KINDS = ("iw", "geo", "linguistic", "religious")

MIN_MEDIATION_ROWS = 10


@dataclass(frozen=True)
class RunConfig:
    """All tunables of a run, with the published defaults pinned in one place."""

    lambda1: float = 0.8
    lambda2: float = 0.2
    pmi_window: int = 3
    rbo_p: float = 0.9
    holdout_fraction: float = 0.3
    seed: int = 0
    annotation_provider: str = "preannotated"
    newness_quantile: Optional[float] = None
    n_boot: int = 1000
    workers: int = 1
    corpus_path: Optional[str] = None
    dish_specs_path: Optional[str] = None
    registry_path: Optional[str] = None
    linguistic_path: Optional[str] = None
    religious_path: Optional[str] = None
    output_dir: str = "out"

    def __post_init__(self) -> None:
        if abs(self.lambda1 + self.lambda2 - 1.0) > 1e-12:
            raise ValueError("lambda1 + lambda2 must equal 1")
        if self.pmi_window < 2:
            raise ValueError("pmi_window must be >= 2")
        if not 0.0 < self.rbo_p < 1.0:
            raise ValueError("rbo_p must lie strictly inside (0, 1)")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must lie in [0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.n_boot < 0:
            raise ValueError("n_boot must be >= 0")
        if self.annotation_provider not in ("preannotated", "naive"):
            raise ValueError(f"unknown annotation provider {self.annotation_provider!r}")

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None, overrides: Optional[dict] = None) -> "RunConfig":
        """Config file merged with flag overrides; a set flag wins."""
        values: dict = {}
        if path is not None:
            try:
                raw = json.loads(Path(path).read_text("utf-8"))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: invalid JSON ({exc})") from exc
            if not isinstance(raw, dict):
                raise ParseError(f"{path}: config must be a JSON object")
            known = {f.name for f in fields(cls)}
            unknown = set(raw) - known
            if unknown:
                raise ParseError(f"{path}: unknown config keys {sorted(unknown)}")
            values.update(raw)
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        return cls(**values)

    def manifest_view(self) -> dict:
        """Config as recorded in the run manifest.

        The worker count is an execution detail with no effect on outputs,
        so it is omitted to keep manifests identical across worker counts.
        """
        view = asdict(self)
        view.pop("workers")
        return view


def fmt_float(value: float) -> str:
    return format(value, ".9g")


def _sha256_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def derive_split_seed(master_seed: int, dish: str, origin: str) -> int:
    """Stable per-(dish, origin) seed so parallel build order cannot matter."""
    digest = hashlib.sha256(f"{master_seed}:{dish}:{origin}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name.lower())


def resolve_countries(docs: Sequence[Document], registry: Registry) -> list[Document]:
    """Fill in UNKNOWN document countries by title detection."""
    resolved = []
    for doc in docs:
        if doc.country == "UNKNOWN":
            detected = detect_country(doc.title, registry)
            if detected is not None:
                doc = replace(doc, country=detected)
        resolved.append(doc)
    return resolved


def _run_manifest(config: RunConfig, inputs: dict[str, str], outputs: Sequence[str]) -> dict:
    view = config.manifest_view()
    config_digest = hashlib.sha256(
        json.dumps(view, sort_keys=True).encode("utf-8")
    ).hexdigest()
    return {
        "tool_version": __version__,
        "config": view,
        "config_digest": config_digest,
        "input_digests": inputs,
        "outputs": sorted(outputs),
    }


# ---------------------------------------------------------------------------
# build


def cmd_build(config: RunConfig) -> dict:
    """Construct split manifests and the eligibility report.

    All inputs are read and validated before the first byte is written, so
    a missing or malformed input leaves no partial outputs behind.
    """
    if not config.corpus_path or not config.dish_specs_path:
        raise ParseError("build requires corpus_path and dish_specs_path")
    registry = load_registry(config.registry_path)
    corpus = read_documents(config.corpus_path, config.annotation_provider)
    dishes = load_dish_specs(config.dish_specs_path)
    resolved = resolve_countries(corpus, registry)

    out_dir = Path(config.output_dir)
    manifest_dir = out_dir / "manifests"
    manifest_dir.mkdir(parents=True, exist_ok=True)

    eligibility_rows: list[tuple[str, str, str, str, str]] = []
    written: list[str] = []
    for dish in sorted(dishes, key=lambda d: d.canonical_name):
        matched = matched_documents(resolved, dish)
        if not matched:
            eligibility_rows.append((dish.canonical_name, "", "0", "0", "no_matches"))
            continue
        by_country: dict[str, int] = {}
        for doc in matched:
            by_country[doc.country] = by_country.get(doc.country, 0) + 1
        for origin in sorted(by_country):
            split_seed = derive_split_seed(config.seed, dish.canonical_name, origin)
            try:
                split = build_split(
                    matched, dish, origin, config.holdout_fraction, split_seed
                )
            except IneligibleDish:
                n_origin = by_country[origin]
                n_holdout = math.floor(config.holdout_fraction * n_origin)
                kb_size = n_origin - n_holdout
                var_count = n_holdout + (len(matched) - n_origin)
                eligibility_rows.append(
                    (dish.canonical_name, origin, str(kb_size), str(var_count), "ineligible")
                )
                continue
            manifest = {
                "product": dish.canonical_name,
                "origin": origin,
                "holdout_fraction": config.holdout_fraction,
                "holdout_seed": split.holdout_seed,
                "knowledge_ids": [d.id for d in split.knowledge],
                "variations": [
                    {"id": d.id, "country": d.country} for d in split.variations
                ],
            }
            manifest_path = manifest_dir / f"{_slug(dish.canonical_name)}__{origin}.json"
            _write_json(manifest_path, manifest)
            written.append(str(manifest_path))
            eligibility_rows.append(
                (
                    dish.canonical_name,
                    origin,
                    str(len(split.knowledge)),
                    str(len(split.variations)),
                    "eligible",
                )
            )

    report_path = out_dir / "eligibility.csv"
    _write_csv(
        report_path,
        ("dish", "origin", "kb_size", "variation_count", "status"),
        eligibility_rows,
    )
    ineligible = sum(1 for row in eligibility_rows if row[4] != "eligible")
    log.info("build: %d manifests, %d ineligible entries", len(written), ineligible)
    return {"manifests": written, "eligibility_report": str(report_path)}


# ---------------------------------------------------------------------------
# score


def _score_one(kb, doc: Document, config: RunConfig) -> tuple[str, ...]:
    scores = score_all(kb, doc, config.lambda1, config.lambda2)
    controls = control_variables(doc, kb)
    values = scores.as_tuple() + (
        controls.lexical_diversity,
        controls.new_ingredient_ratio,
        controls.length_ratio,
    )
    return tuple(fmt_float(v) for v in values)


def cmd_score(config: RunConfig, manifest_paths: Optional[Sequence[Union[str, Path]]] = None) -> Path:
    """Score every manifest's variations; one CSV row per (split, variation)."""
    if not config.corpus_path:
        raise ParseError("score requires corpus_path")
    out_dir = Path(config.output_dir)
    if manifest_paths is None:
        manifest_paths = sorted((out_dir / "manifests").glob("*.json"))
    corpus = read_documents(config.corpus_path, config.annotation_provider)
    doc_by_id = {d.id: d for d in corpus}

    rows: list[tuple[str, ...]] = []
    failures = 0
    for manifest_path in sorted(Path(p) for p in manifest_paths):
        try:
            manifest = json.loads(Path(manifest_path).read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{manifest_path}: invalid JSON ({exc})") from exc
        product = manifest["product"]
        origin = manifest["origin"]
        try:
            knowledge = [doc_by_id[i] for i in manifest["knowledge_ids"]]
        except KeyError as exc:
            raise ParseError(f"{manifest_path}: unknown knowledge document id {exc}") from exc
        kb = build_knowledge_space(
            product,
            origin,
            knowledge,
            window=config.pmi_window,
            newness_quantile=config.newness_quantile,
        )

        def score_entry(entry: dict) -> Optional[tuple[str, ...]]:
            doc = doc_by_id.get(entry["id"])
            if doc is None:
                log.warning("%s: variation id %r not in corpus, skipped", manifest_path, entry["id"])
                return None
            try:
                return (product, origin, doc.id, entry["country"]) + _score_one(kb, doc, config)
            except CultNoveltyError as exc:
                log.warning("scoring %s against %s/%s failed: %s", doc.id, product, origin, exc)
                return None

        entries = manifest["variations"]
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(score_entry, entries))
        else:
            results = [score_entry(e) for e in entries]
        failures += sum(1 for r in results if r is None)
        rows.extend(r for r in results if r is not None)

    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    out_dir.mkdir(parents=True, exist_ok=True)
    scores_path = out_dir / "scores.csv"
    _write_csv(scores_path, SCORE_COLUMNS, rows)
    log.info("score: %d rows written, %d failures skipped", len(rows), failures)
    return scores_path


# ---------------------------------------------------------------------------
# analyze


def _read_scores(path: Path) -> list[dict]:
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != SCORE_COLUMNS:
            raise ParseError(f"{path}: unexpected scores header {reader.fieldnames}")
        for raw in reader:
            row = dict(raw)
            for col in METRIC_COLUMNS + CONTROL_COLUMNS:
                row[col] = float(row[col])
            rows.append(row)
    return rows


def _attach_distances(rows: list[dict], registry: Registry, config: RunConfig) -> None:
    matrices = {}
    if config.linguistic_path:
        matrices["linguistic"] = load_distance_matrix(config.linguistic_path, "LINGUISTIC", registry)
    if config.religious_path:
        matrices["religious"] = load_distance_matrix(config.religious_path, "RELIGIOUS", registry)
    for row in rows:
        a, b = row["kb_culture"], row["variation_culture"]
        row["iw"] = row["geo"] = row["linguistic"] = row["religious"] = None
        try:
            rec_a, rec_b = registry.get(a), registry.get(b)
        except UnknownCountry:
            continue
        try:
            row["iw"] = iw_distance(rec_a, rec_b)
        except MissingCoordinates:
            pass
        try:
            row["geo"] = geo_distance(rec_a, rec_b)
        except MissingCoordinates:
            pass
        for kind, matrix in matrices.items():
            row[kind] = matrix.get(a, b)


def _ranking(rows: list[dict], metric: str) -> list[str]:
    ordered = sorted(rows, key=lambda r: (-r[metric], r["variation_id"]))
    return [r["variation_id"] for r in ordered]


def _metric_correlations(rows: list[dict], config: RunConfig) -> list[list[str]]:
    groups: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        groups.setdefault((row["product"], row["kb_culture"]), []).append(row)
    split_rows = [g for _, g in sorted(groups.items()) if len(g) >= 3]

    out = []
    for i, metric_a in enumerate(FIVE_METRICS):
        for metric_b in FIVE_METRICS[i + 1 :]:
            xs = [r[metric_a] for r in rows]
            ys = [r[metric_b] for r in rows]
            try:
                r_val, r_p = pearson(xs, ys)
                pearson_cells = [fmt_float(r_val), fmt_float(r_p)]
            except (ConstantSeries, InsufficientObservations):
                pearson_cells = ["", ""]
            taus, tau_ps, rbos, weights = [], [], [], []
            for group in split_rows:
                gx = [r[metric_a] for r in group]
                gy = [r[metric_b] for r in group]
                try:
                    tau, tau_p = kendall_tau(gx, gy)
                except (AllTied, InsufficientObservations):
                    continue
                taus.append(tau)
                tau_ps.append(tau_p)
                rbos.append(rbo(_ranking(group, metric_a), _ranking(group, metric_b), config.rbo_p))
                weights.append(len(group))
            if weights:
                w = sum(weights)
                kendall_cells = [
                    fmt_float(sum(t * g for t, g in zip(taus, weights)) / w),
                    fmt_float(sum(p * g for p, g in zip(tau_ps, weights)) / w),
                ]
                rbo_cell = fmt_float(sum(v * g for v, g in zip(rbos, weights)) / w)
            else:
                kendall_cells = ["", ""]
                rbo_cell = ""
            out.append([metric_a, metric_b] + pearson_cells + kendall_cells + [rbo_cell])
    return out


def _distance_correlations(rows: list[dict]) -> list[list[str]]:
    out = []
    for kind in DISTANCE_KINDS:
        subset = [r for r in rows if r[kind] is not None]
        for metric in FIVE_METRICS:
            if len(subset) < 3:
                out.append([kind, metric, str(len(subset)), "", ""])
                continue
            try:
                r_val, p_val = pearson([r[metric] for r in subset], [r[kind] for r in subset])
                out.append([kind, metric, str(len(subset)), fmt_float(r_val), fmt_float(p_val)])
            except ConstantSeries:
                out.append([kind, metric, str(len(subset)), "", ""])
    return out


def _regression_tables(rows: list[dict]) -> tuple[list[list[str]], list[list[str]]]:
    full_rows: list[list[str]] = []
    marginal_rows: list[list[str]] = []
    terms = ("const",) + FIVE_METRICS + CONTROL_COLUMNS
    for kind in DISTANCE_KINDS:
        subset = [r for r in rows if r[kind] is not None]
        if not subset:
            log.warning("analyze: no rows carry a %s distance; regression skipped", kind)
            continue
        y = [r[kind] for r in subset]
        design = np.column_stack(
            [np.ones(len(subset))]
            + [[r[m] for r in subset] for m in FIVE_METRICS]
            + [[r[c] for r in subset] for c in CONTROL_COLUMNS]
        )
        try:
            full = ols(design, y, names=terms)
        except (RankDeficient, InsufficientObservations) as exc:
            log.warning("analyze: full %s regression skipped (%s)", kind, exc)
        else:
            for term in terms:
                full_rows.append(
                    [
                        kind,
                        str(full.n_obs),
                        fmt_float(full.r_squared),
                        term,
                        fmt_float(full.coefficients[term]),
                        fmt_float(full.std_errors[term]),
                        fmt_float(full.t_stats[term]),
                        fmt_float(full.p_values[term]),
                    ]
                )
        for metric in FIVE_METRICS:
            single = np.column_stack([np.ones(len(subset)), [r[metric] for r in subset]])
            try:
                result = ols(single, y, names=("const", metric))
            except (RankDeficient, InsufficientObservations) as exc:
                log.warning("analyze: marginal %s ~ %s skipped (%s)", kind, metric, exc)
                continue
            marginal_rows.append(
                [
                    kind,
                    metric,
                    str(result.n_obs),
                    fmt_float(result.r_squared),
                    fmt_float(result.coefficients[metric]),
                    fmt_float(result.p_values[metric]),
                ]
            )
    return full_rows, marginal_rows


def _mediation_table(rows: list[dict], config: RunConfig) -> list[list[str]]:
    out: list[list[str]] = []
    for kind in DISTANCE_KINDS:
        subset = [r for r in rows if r[kind] is not None]
        if len(subset) < MIN_MEDIATION_ROWS:
            continue
        y = [r[kind] for r in subset]
        for metric in FIVE_METRICS:
            t_series = [r[metric] for r in subset]
            for mediator in CONTROL_COLUMNS:
                m_series = [r[mediator] for r in subset]
                try:
                    result = mediate(
                        t_series, m_series, y, controls=None,
                        n_boot=config.n_boot, seed=config.seed,
                    )
                except CultNoveltyError as exc:
                    log.warning(
                        "analyze: mediation %s/%s/%s skipped (%s)", kind, metric, mediator, exc
                    )
                    continue
                cells = [
                    kind, metric, mediator, str(len(subset)),
                    fmt_float(result.total_effect),
                    fmt_float(result.acme),
                    fmt_float(result.ade),
                ]
                for ci in (result.acme_ci, result.ade_ci, result.total_ci):
                    cells.extend(["", ""] if ci is None else [fmt_float(ci[0]), fmt_float(ci[1])])
                for p in (result.acme_p, result.ade_p, result.total_p):
                    cells.append("" if p is None else fmt_float(p))
                out.append(cells)
    return out


def cmd_analyze(config: RunConfig, scores_path: Optional[Union[str, Path]] = None) -> dict:
    """Produce the correlation, regression, marginal, and mediation tables."""
    out_dir = Path(config.output_dir)
    if scores_path is None:
        scores_path = out_dir / "scores.csv"
    scores_path = Path(scores_path)
    rows = _read_scores(scores_path)
    registry = load_registry(config.registry_path)
    _attach_distances(rows, registry, config)

    dropped = {
        kind: sum(1 for r in rows if r[kind] is None) for kind in DISTANCE_KINDS
    }
    for kind, count in sorted(dropped.items()):
        if count:
            log.warning("analyze: %d/%d rows lack a %s distance", count, len(rows), kind)

    out_dir.mkdir(parents=True, exist_ok=True)
    metric_corr = _metric_correlations(rows, config) if rows else []
    distance_corr = _distance_correlations(rows) if rows else []
    full_rows, marginal_rows = _regression_tables(rows) if rows else ([], [])
    mediation_rows = _mediation_table(rows, config) if rows else []

    outputs = {
        "correlations_metrics.csv": (
            ("metric_a", "metric_b", "pearson_r", "pearson_p", "kendall_tau", "kendall_p", "rbo"),
            metric_corr,
        ),
        "correlations_distances.csv": (
            ("distance", "metric", "n", "pearson_r", "pearson_p"),
            distance_corr,
        ),
        "regressions.csv": (
            ("distance", "n", "r_squared", "term", "coef", "std_err", "t", "p"),
            full_rows,
        ),
        "marginal.csv": (
            ("distance", "metric", "n", "r_squared", "coef", "p"),
            marginal_rows,
        ),
        "mediation.csv": (
            (
                "distance", "metric", "mediator", "n", "total_effect", "acme", "ade",
                "acme_ci_low", "acme_ci_high", "ade_ci_low", "ade_ci_high",
                "total_ci_low", "total_ci_high", "acme_p", "ade_p", "total_p",
            ),
            mediation_rows,
        ),
    }
    written = []
    for name, (header, table) in outputs.items():
        path = out_dir / name
        _write_csv(path, header, table)
        written.append(str(path))

    inputs = {str(scores_path): _sha256_file(scores_path)}
    for maybe in (config.registry_path, config.linguistic_path, config.religious_path):
        if maybe:
            inputs[str(maybe)] = _sha256_file(maybe)
    manifest_path = out_dir / "run_manifest.json"
    _write_json(manifest_path, _run_manifest(config, inputs, written))
    written.append(str(manifest_path))
    return {"outputs": written, "rows": len(rows)}


# ---------------------------------------------------------------------------
# distances / report


def cmd_distances(config: RunConfig) -> list[str]:
    """Precompute the IW and GEO matrices from the registry as CSV files."""
    registry = load_registry(config.registry_path)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for kind, name in (("IW", "iw.csv"), ("GEO", "geo.csv")):
        matrix = compute_matrix(registry, kind)
        rows = [
            (a, b, fmt_float(matrix.entries[(a, b)]))
            for (a, b) in sorted(matrix.entries)
        ]
        path = out_dir / name
        _write_csv(path, ("iso_a", "iso_b", "distance"), rows)
        written.append(str(path))
    return written


def cmd_report(config: RunConfig, analyze_dir: Optional[Union[str, Path]] = None) -> Path:
    """Bundle the analyze-stage tables with their digests."""
    source = Path(analyze_dir) if analyze_dir else Path(config.output_dir)
    bundle_dir = Path(config.output_dir) / "bundle"
    bundle_dir.mkdir(parents=True, exist_ok=True)
    names = [
        "correlations_metrics.csv",
        "correlations_distances.csv",
        "regressions.csv",
        "marginal.csv",
        "mediation.csv",
        "run_manifest.json",
    ]
    index = {}
    for name in names:
        src = source / name
        if not src.exists():
            raise ParseError(f"report: expected {src} (run analyze first)")
        (bundle_dir / name).write_bytes(src.read_bytes())
        index[name] = _sha256_file(src)
    index_path = bundle_dir / "bundle_index.json"
    _write_json(index_path, {"tool_version": __version__, "files": index})
    return bundle_dir
