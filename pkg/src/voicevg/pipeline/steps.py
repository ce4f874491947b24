"""The extract / train / predict stages and single-clip graph export.

Layout of a run directory::

    features/{vg,mfcc,egemaps}.csv   one row per clip
    features/errors.csv              clips that failed, per family
    models/{vg,mfcc,egemaps}.json    one forest per feature family
    models/fusion.json               optional, trained on the val split
    models/training_report.json
    predictions/report.csv           subject_id,voice_avg,text_p,final_p,label
    predictions/family_scores.csv    per-family aggregate behind each voice_avg
    predictions/metrics.csv          when the predicted subjects are labelled
    predictions/errors.csv
    predictions/run_config.json
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import audio_features as af
from .. import graph_features as gf
from .. import signal_core as sc
from .. import visibility_graph as vg
from ..errors import DataError, FamilyMismatch, MissingScore, ModelMissing, SingleClass, EmptyData
from ..learn import (
    LabeledDataset,
    RandomForestModel,
    evaluate,
    fuse_scores,
    label_of,
    patient_aggregate,
    train_random_forest,
)
from ..learn.scoring import VOICE_FAMILIES, voice_average
from ..tables import read_dict_rows, read_feature_csv, write_csv
from .config import RunConfig
from .manifest import Manifest, Subject

log = logging.getLogger(__name__)

FAMILIES = VOICE_FAMILIES
ERROR_HEADER = ("id", "family", "error", "message")


def _dump_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# extract
# --------------------------------------------------------------------------

def graph_row(clip: sc.AudioClip, config: RunConfig) -> np.ndarray:
    g = vg.vg_from_audio(clip, config.window_ms, config.min_distance_ms, config.min_prominence,
                         config.vg_input, config.vg_builder)
    return gf.extract_graph_features(g).as_array()


def lowlevel_row(clip: sc.AudioClip, config: RunConfig) -> af.ClipFeatureVector:
    return af.lowlevel_features(clip, config.frame_ms, config.hop_ms, config.fft_size,
                                config.n_mels, config.n_mfcc, config.f_min, config.f_max)


def _extract_clip(path: Path, config: RunConfig):
    out = {}
    try:
        clip = sc.load_wav(path)
    except DataError as exc:
        return {fam: exc for fam in ("vg", "mfcc")}
    for fam, fn in (("vg", graph_row), ("mfcc", lowlevel_row)):
        try:
            out[fam] = fn(clip, config)
        except DataError as exc:
            out[fam] = exc
    return out


@dataclass
class ExtractResult:
    files: dict[str, Path]
    n_rows: dict[str, int]
    errors: list[tuple[str, str, str, str]] = field(default_factory=list)


def cmd_extract(manifest: Manifest, config: RunConfig, out_dir) -> ExtractResult:
    feat_dir = Path(out_dir) / "features"
    feat_dir.mkdir(parents=True, exist_ok=True)
    items = [(s, p) for s in manifest.subjects for p in s.clips]

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(lambda it: _extract_clip(it[1], config), items))
    else:
        results = [_extract_clip(p, config) for _, p in items]

    errors: list[tuple[str, str, str, str]] = []
    vg_rows, ll_rows = [], []
    ll_names = None
    for (subject, path), res in zip(items, results):
        cid = path.stem
        r = res["vg"]
        if isinstance(r, Exception):
            errors.append((cid, "vg", type(r).__name__, str(r)))
        else:
            vg_rows.append([cid, *r])
        r = res["mfcc"]
        if isinstance(r, Exception):
            errors.append((cid, "mfcc", type(r).__name__, str(r)))
            continue
        if ll_names is None:
            ll_names = r.names
        if r.names != ll_names:
            errors.append((cid, "mfcc", "FamilyMismatch",
                           f"{len(r.names)} columns where earlier clips had {len(ll_names)}"))
            continue
        ll_rows.append([cid, *r.values])

    files = {"vg": feat_dir / "vg.csv", "mfcc": feat_dir / "mfcc.csv"}
    write_csv(files["vg"], ("clip_id", *gf.FEATURE_NAMES), vg_rows)
    write_csv(files["mfcc"], ("clip_id", *(ll_names or ())), ll_rows)
    n_rows = {"vg": len(vg_rows), "mfcc": len(ll_rows)}

    ege_rows, ege_names = _collect_egemaps(manifest, errors)
    ege_file = feat_dir / "egemaps.csv"
    if ege_names is not None:
        write_csv(ege_file, ("clip_id", *ege_names), ege_rows)
        files["egemaps"] = ege_file
        n_rows["egemaps"] = len(ege_rows)
    elif ege_file.exists():
        ege_file.unlink()

    write_csv(feat_dir / "errors.csv", ERROR_HEADER, errors)
    for e in errors:
        log.warning("clip %s [%s]: %s: %s", *e)
    return ExtractResult(files, n_rows, errors)


def _collect_egemaps(manifest: Manifest, errors: list):
    cache: dict[Path, tuple[list[str], dict]] = {}
    names = None
    rows = []
    for s in manifest.subjects:
        if s.egemaps_csv is None:
            continue
        if s.egemaps_csv not in cache:
            try:
                cache[s.egemaps_csv] = (af.egemaps_header(s.egemaps_csv), af.ingest_egemaps_csv(s.egemaps_csv))
            except DataError as exc:
                for cid in s.clip_ids:
                    errors.append((cid, "egemaps", type(exc).__name__, str(exc)))
                continue
        header, table = cache[s.egemaps_csv]
        if names is None:
            names = header
        for cid in s.clip_ids:
            if header != names:
                errors.append((cid, "egemaps", "FamilyMismatch", f"{s.egemaps_csv}: column names differ"))
            elif cid not in table:
                errors.append((cid, "egemaps", "MissingScore", f"{s.egemaps_csv} has no row for this clip"))
            else:
                rows.append([cid, *table[cid]])
    return rows, names


# --------------------------------------------------------------------------
# scoring helpers
# --------------------------------------------------------------------------

def read_text_scores(path) -> dict[str, list[float]]:
    """subject_id -> probabilities, in file order."""
    out: dict[str, list[float]] = {}
    for row in read_dict_rows(path):
        try:
            out.setdefault(row["subject_id"], []).append(float(row["probability"]))
        except (KeyError, ValueError) as exc:
            raise DataError(f"{path}: bad text score row {row}") from exc
    return out


class _TextScores:
    def __init__(self):
        self._cache: dict[Path, dict[str, list[float]]] = {}

    def get(self, subject: Subject) -> list[float] | None:
        if subject.text_scores_csv is None:
            return None
        if subject.text_scores_csv not in self._cache:
            self._cache[subject.text_scores_csv] = read_text_scores(subject.text_scores_csv)
        return self._cache[subject.text_scores_csv].get(subject.subject_id)


def _family_table(features_dir: Path, family: str):
    path = features_dir / f"{family}.csv"
    if not path.exists():
        return None
    names, ids, X = read_feature_csv(path)
    return names, {cid: X[i] for i, cid in enumerate(ids)}


def subject_family_score(model: RandomForestModel, rows: dict[str, np.ndarray],
                         subject: Subject, c: float):
    """Max/mean blend of the subject's clip probabilities, or None without clips."""
    X = [rows[cid] for cid in subject.clip_ids if cid in rows]
    if not X:
        return None
    probs = model.predict_proba(np.vstack(X))
    return patient_aggregate(probs, c, subject.subject_id)


# --------------------------------------------------------------------------
# train
# --------------------------------------------------------------------------

def _labelled(subjects):
    return [s for s in subjects if s.label is not None]


def cmd_train(manifest: Manifest, config: RunConfig, features_dir, models_dir) -> dict:
    features_dir, models_dir = Path(features_dir), Path(models_dir)
    models_dir.mkdir(parents=True, exist_ok=True)
    train_subjects = _labelled(manifest.in_split("train"))
    val_subjects = _labelled(manifest.in_split("val"))
    report = {"config": config.as_dict(), "families": {}, "fusion": {}}
    models: dict[str, RandomForestModel] = {}

    for family in FAMILIES:
        entry = report["families"][family] = {}
        stale = models_dir / f"{family}.json"
        table = _family_table(features_dir, family)
        if table is None:
            entry["status"] = "skipped: no feature file"
            stale.unlink(missing_ok=True)
            log.warning("family %s skipped: no feature file", family)
            continue
        names, rows = table
        X, y, used = [], [], []
        for s in train_subjects:
            for cid in s.clip_ids:
                if cid in rows:
                    X.append(rows[cid])
                    y.append(s.label)
                    used.append(s.subject_id)
        try:
            data = LabeledDataset(np.array(X).reshape(len(X), len(names)), np.array(y, dtype=np.int64),
                                  used, names, "train")
            model = train_random_forest(data, config.forest(), config.threads, config.zscore)
        except (SingleClass, EmptyData) as exc:
            entry["status"] = f"skipped: {type(exc).__name__}"
            stale.unlink(missing_ok=True)
            log.warning("family %s skipped: %s", family, exc)
            continue
        model.save(models_dir / f"{family}.json")
        models[family] = model
        entry["status"] = "trained"
        entry["n_train_rows"] = len(y)
        entry["train_subjects"] = sorted(set(used))

        scored = [(s, subject_family_score(model, rows, s, config.c)) for s in val_subjects]
        scored = [(s, a) for s, a in scored if a is not None]
        entry["val_subjects"] = sorted(s.subject_id for s, _ in scored)
        if scored:
            truth = [s.label for s, _ in scored]
            probs = [a.probability for _, a in scored]
            entry["val_metrics"] = evaluate([label_of(p) for p in probs], truth, probs).as_dict()

    report["fusion"] = _train_fusion(manifest, config, features_dir, models_dir, models, val_subjects)
    _dump_json(models_dir / "training_report.json", report)
    return report


def _train_fusion(manifest, config, features_dir, models_dir, models, val_subjects) -> dict:
    target = models_dir / "fusion.json"
    target.unlink(missing_ok=True)
    if not models:
        return {"status": "skipped: no family models"}
    tables = {f: _family_table(features_dir, f)[1] for f in models}
    text = _TextScores()
    X, y, used = [], [], []
    for s in val_subjects:
        voice = {f: subject_family_score(m, tables[f], s, config.c) for f, m in models.items()}
        scores = text.get(s)
        if any(v is None for v in voice.values()) or not scores:
            continue
        X.append([voice_average({f: a.probability for f, a in voice.items()}, tuple(models)),
                  patient_aggregate(scores, config.c).probability])
        y.append(s.label)
        used.append(s.subject_id)
    try:
        data = LabeledDataset(np.array(X).reshape(len(X), 2), np.array(y, dtype=np.int64),
                              used, ("voice_avg", "text_p"), "val")
        model = train_random_forest(data, config.forest(features_per_split=2), config.threads)
    except (SingleClass, EmptyData) as exc:
        return {"status": f"skipped: {type(exc).__name__}"}
    model.save(target)
    return {"status": "trained", "val_subjects": sorted(used), "families": list(models)}


# --------------------------------------------------------------------------
# predict
# --------------------------------------------------------------------------

@dataclass
class PredictResult:
    report: Path
    rows: list[dict]
    metrics: dict[str, dict] = field(default_factory=dict)
    errors: list[tuple[str, str, str, str]] = field(default_factory=list)


def load_models(models_dir) -> dict[str, RandomForestModel]:
    models_dir = Path(models_dir)
    models = {f: RandomForestModel.load(models_dir / f"{f}.json")
              for f in FAMILIES if (models_dir / f"{f}.json").exists()}
    if not models:
        raise ModelMissing(f"no family models found in {models_dir}")
    return models


def cmd_predict(manifest: Manifest, config: RunConfig, features_dir, models_dir, out_dir,
                split: str = "test") -> PredictResult:
    features_dir, models_dir = Path(features_dir), Path(models_dir)
    pred_dir = Path(out_dir) / "predictions"
    pred_dir.mkdir(parents=True, exist_ok=True)
    models = load_models(models_dir)
    fusion_model = None
    if config.fusion == "forest":
        if not (models_dir / "fusion.json").exists():
            raise ModelMissing("forest fusion requested but models/fusion.json is missing")
        fusion_model = RandomForestModel.load(models_dir / "fusion.json")

    tables = {}
    for f, model in models.items():
        table = _family_table(features_dir, f)
        if table is None:
            raise ModelMissing(f"model for family {f!r} exists but features/{f}.csv is missing")
        names, rows = table
        if tuple(names) != tuple(model.feature_names):
            raise FamilyMismatch(f"family {f!r}: feature columns differ from the trained model")
        tables[f] = rows

    families = tuple(models)
    text = _TextScores()
    rows, fam_rows, errors = [], [], []
    for s in manifest.in_split(split):
        voice = {}
        for f in families:
            agg = subject_family_score(models[f], tables[f], s, config.c)
            if agg is not None:
                voice[f] = agg.probability
                fam_rows.append([s.subject_id, f, agg.n, agg.p_max, agg.p_mean, agg.probability])
        scores = text.get(s)
        text_p = patient_aggregate(scores, config.c).probability if scores else None
        try:
            final, label = fuse_scores(voice, text_p, config.fusion, fusion_model, families)
        except MissingScore as exc:
            errors.append((s.subject_id, "fusion", type(exc).__name__, str(exc)))
            log.warning("subject %s skipped: %s", s.subject_id, exc)
            continue
        rows.append({"subject_id": s.subject_id, "voice_avg": voice_average(voice, families),
                     "text_p": text_p, "final_p": final, "label": label, "truth": s.label,
                     "voice": voice})

    report = pred_dir / "report.csv"
    write_csv(report, ("subject_id", "voice_avg", "text_p", "final_p", "label"),
              ([r["subject_id"], r["voice_avg"], r["text_p"], r["final_p"], r["label"]] for r in rows))
    write_csv(pred_dir / "family_scores.csv",
              ("subject_id", "family", "n", "p_max", "p_mean", "aggregate"), fam_rows)
    write_csv(pred_dir / "errors.csv", ERROR_HEADER, errors)
    _dump_json(pred_dir / "run_config.json", {"split": split, "families": list(families),
                                              "config": config.as_dict()})

    metrics = {}
    metrics_path = pred_dir / "metrics.csv"
    if rows and all(r["truth"] is not None for r in rows):
        truth = [r["truth"] for r in rows]
        streams = {f: [r["voice"][f] for r in rows] for f in families}
        streams["text"] = [r["text_p"] for r in rows]
        streams["fusion"] = [r["final_p"] for r in rows]
        for name, probs in streams.items():
            metrics[name] = evaluate([label_of(p) for p in probs], truth, probs).as_dict()
        write_csv(metrics_path, ("model", "f1", "precision", "recall", "accuracy", "roc_auc",
                                 "tp", "fp", "tn", "fn"),
                  ([k, m["f1"], m["precision"], m["recall"], m["accuracy"], m["roc_auc"],
                    m["tp"], m["fp"], m["tn"], m["fn"]] for k, m in metrics.items()))
    else:
        metrics_path.unlink(missing_ok=True)
    return PredictResult(report, rows, metrics, errors)


# --------------------------------------------------------------------------
# graph export and audit
# --------------------------------------------------------------------------

def cmd_graph_export(wav_path, config: RunConfig, out_dir) -> tuple[Path, Path]:
    clip = sc.load_wav(wav_path)
    g = vg.vg_from_audio(clip, config.window_ms, config.min_distance_ms, config.min_prominence,
                         config.vg_input, config.vg_builder)
    feats = gf.extract_graph_features(g).as_array()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graph_path = out_dir / f"{clip.source_id}.graph.json"
    graph_path.write_text(g.to_json() + "\n")
    feat_path = out_dir / f"{clip.source_id}.features.csv"
    write_csv(feat_path, ("clip_id", *gf.FEATURE_NAMES), [[clip.source_id, *feats]])
    return graph_path, feat_path


class LeakageError(DataError):
    pass


def audit_run(manifest: Manifest, run_dir) -> None:
    """Re-read run outputs and check that no subject crossed splits."""
    run_dir = Path(run_dir)
    split_of = {s.subject_id: s.split for s in manifest.subjects}
    report_path = run_dir / "models" / "training_report.json"
    if report_path.exists():
        report = json.loads(report_path.read_text())
        for fam, entry in report["families"].items():
            for sid in entry.get("train_subjects", []):
                if split_of.get(sid) != "train":
                    raise LeakageError(f"{fam} model trained on non-train subject {sid!r}")
            for sid in entry.get("val_subjects", []):
                if split_of.get(sid) != "val":
                    raise LeakageError(f"{fam} validated on non-val subject {sid!r}")
        for sid in report["fusion"].get("val_subjects", []):
            if split_of.get(sid) != "val":
                raise LeakageError(f"fusion model trained on non-val subject {sid!r}")
    info_path = run_dir / "predictions" / "run_config.json"
    if info_path.exists():
        split = json.loads(info_path.read_text())["split"]
        for row in read_dict_rows(run_dir / "predictions" / "report.csv"):
            if split_of.get(row["subject_id"]) != split:
                raise LeakageError(f"prediction for {row['subject_id']!r} outside split {split!r}")
