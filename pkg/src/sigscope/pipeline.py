"""Pipeline stages. Each stage reads its inputs from, and writes its output to,
the output directory, so any stage can be rerun on its own."""

import json
import logging
from pathlib import Path

from sklearn.preprocessing import StandardScaler

from . import classify, embedding, ingest, regression, render, signature

STAGES = ("sign", "embed", "fit", "classify", "render")
ARTIFACTS = {
    "filtered": "filtered.csv",
    "signatures": "signatures.csv",
    "embedding": "embedding.csv",
    "fits": "fits.json",
    "report": "report.json",
    "plot": "plot.svg",
}


def artifact(config, name):
    return Path(config.out) / ARTIFACTS[name]


def _log(stage):
    return logging.getLogger(f"sigscope.{stage}")


def _write_json(data, path):
    Path(path).write_text(json.dumps(data, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def load_filtered(config):
    log = _log("ingest")
    volume = ingest.parse_csv(config.input, config.samples_per_period)
    speed = ingest.parse_csv(config.speed, config.samples_per_period) if config.speed else None
    retained, rejected = ingest.filter_with_speed(
        volume, config.volume_filter, speed, config.speed_filter if speed is not None else None
    )
    log.info("%d periods read, %d retained", len(volume), len(retained))
    if rejected:
        log.info("rejected: %s", ", ".join(rejected))
    return retained, rejected


def run_ingest(config):
    retained, rejected = load_filtered(config)
    Path(config.out).mkdir(parents=True, exist_ok=True)
    ingest.write_csv(retained, artifact(config, "filtered"))
    return retained, rejected


def run_sign(config):
    retained, _ = load_filtered(config)
    if len(retained) < 2:
        raise ingest.ValidationError(f"only {len(retained)} period(s) survive filtering; need at least 2")
    values = signature.signature_matrix(retained.values, config.selection.indices)
    Path(config.out).mkdir(parents=True, exist_ok=True)
    signature.write_signatures(retained.labels, values, artifact(config, "signatures"))
    _log("sign").info("%d signatures of %d components", *values.shape)


def run_embed(config):
    log = _log("embed")
    labels, values = signature.read_signatures(artifact(config, "signatures"))
    features = StandardScaler().fit_transform(values) if config.standardize else values
    D = embedding.dissimilarity(features, labels=labels)
    emb = embedding.classical_mds(D, 2)
    if config.clusters is not None:
        emb = embedding.load_clusters(emb, config.clusters)
    else:
        emb = emb.with_clusters(embedding.kmeans_clusters(labels, features, config.kmeans, config.seed))
    for note in emb.notes:
        log.warning(note)
    log.info("leading eigenvalues %s", ", ".join(f"{v:.6g}" for v in emb.eigenvalues[:3]))
    embedding.write_embedding(emb, artifact(config, "embedding"))


def run_fit(config):
    emb = embedding.read_embedding(artifact(config, "embedding"))
    fits = regression.fit_clusters(
        emb.coords, emb.cluster_ids(), config.alpha, config.max_degree, config.r2_threshold
    )
    for cid, fit in fits.items():
        if fit.curve is None:
            _log("fit").info("cluster %d: no curve (%s)", cid, fit.reason)
        else:
            _log("fit").info("cluster %d: %s, R^2=%.4f", cid, fit.curve.equation(), fit.curve.r_squared)
    data = {"schema_version": classify.SCHEMA_VERSION, "config": config.echo()}
    data.update(regression.fits_to_dict(fits))
    _write_json(data, artifact(config, "fits"))


def run_classify(config):
    emb = embedding.read_embedding(artifact(config, "embedding"))
    fits = regression.fits_from_dict(_read_json(artifact(config, "fits")))
    echo = config.echo()
    echo["degrees"] = {str(cid): f.curve.degree for cid, f in sorted(fits.items()) if f.curve is not None}
    report = classify.report_for_embedding(emb, fits, echo)
    counts = ", ".join(f"{c.value}={n}" for c, n in report.counts.items())
    _log("classify").info("%s", counts)
    _write_json(report.to_dict(), artifact(config, "report"))


def run_render(config):
    emb = embedding.read_embedding(artifact(config, "embedding"))
    fits = regression.fits_from_dict(_read_json(artifact(config, "fits")))
    report = classify.OutlierReport.from_dict(_read_json(artifact(config, "report")))
    artifact(config, "plot").write_text(render.render_svg(emb, fits, report), encoding="utf-8")


STAGE_FUNCS = {
    "sign": run_sign,
    "embed": run_embed,
    "fit": run_fit,
    "classify": run_classify,
    "render": run_render,
}


def run_pipeline(config, from_stage="sign"):
    """Run every stage from ``from_stage`` on. Returns the stages executed."""
    if from_stage not in STAGES:
        raise ValueError(f"unknown stage {from_stage!r}")
    todo = STAGES[STAGES.index(from_stage):]
    config.validate(needs_input="sign" in todo, needs_clusters="embed" in todo)
    Path(config.out).mkdir(parents=True, exist_ok=True)
    for stage in todo:
        run_stage(stage, config)
    return todo


def run_stage(stage, config):
    try:
        STAGE_FUNCS[stage](config)
    except Exception as exc:
        exc.stage = stage
        raise


def load_outputs(out_dir):
    """Read back embedding, fits and report from a finished run."""
    out_dir = Path(out_dir)
    emb = embedding.read_embedding(out_dir / ARTIFACTS["embedding"])
    fits = regression.fits_from_dict(_read_json(out_dir / ARTIFACTS["fits"]))
    report = classify.OutlierReport.from_dict(_read_json(out_dir / ARTIFACTS["report"]))
    return emb, fits, report

