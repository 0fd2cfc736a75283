"""HTTP what-if service over a loaded checkpoint bundle.

Stateless request handling over immutable shared models.  Every
generation response carries the seed that produced it so a client can
replay the exact result.  Malformed rows come back as 400s with
column-level diagnostics.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from .autodiff import Tensor, softmax
from .checkpoint import load_header, schema_digest
from .config import BASELINE_METHODS, STRATEGIES, RunConfig
from .experiments import TrainedBundle, generate_for_method
from .metrics import evaluate
from .tabular import TabularError, encode_row

__all__ = ["build_app"]


def _schema_payload(bundle: TrainedBundle, cfg: RunConfig, class_names):
    model = bundle.diffusion
    g = cfg.guidance
    return {
        "columns": [
            {
                "name": c.name,
                "kind": c.kind,
                "values": list(model.vocab.values[i]),
                "bin_edges": list(c.bin_edges),
                "bin_representatives": list(c.bin_representatives),
            }
            for i, c in enumerate(model.schema)
        ],
        "classes": list(class_names),
        "schema_digest": schema_digest(model.schema, model.vocab),
        "defaults": {
            "method": "scd",
            "methods": ["scd"] + list(BASELINE_METHODS),
            "B": g.n_counterfactuals,
            "tau": g.tau,
            "tau_max": model.schedule.steps,
            "eta": g.eta,
            "lambdas": {
                "validity": g.lambda_validity,
                "proximity": g.lambda_proximity,
                "diversity": g.lambda_diversity,
                "plausibility": g.lambda_plausibility,
            },
            "strategy": g.strategy,
            "strategies": list(STRATEGIES),
            "add_initial_noise": g.add_initial_noise,
            "seed": g.seed,
        },
    }


def _check_row(payload, schema, vocab, field: str):
    """Validate one row payload; return it in schema order as strings."""
    names = [c.name for c in schema]
    if isinstance(payload, dict):
        problems = [{"column": n, "error": "missing"} for n in names
                    if n not in payload]
        problems += [{"column": k, "error": "unknown column"} for k in payload
                     if k not in names]
        if problems:
            raise HTTPException(400, {"field": field, "problems": problems})
        row = [str(payload[n]) for n in names]
    elif isinstance(payload, list):
        if len(payload) != len(names):
            raise HTTPException(400, {
                "field": field,
                "problems": [{"column": None,
                              "error": f"expected {len(names)} values, "
                                       f"got {len(payload)}"}],
            })
        row = [str(v) for v in payload]
    else:
        raise HTTPException(400, {"field": field,
                                  "problems": [{"column": None,
                                                "error": "row must be an array "
                                                         "or object"}]})
    problems = []
    for i, c in enumerate(schema):
        if c.kind == "categorical" and row[i] not in vocab.values[i]:
            problems.append({"column": c.name,
                             "error": f"value {row[i]!r} not in vocabulary"})
        elif c.kind == "numeric":
            try:
                float(row[i])
            except ValueError:
                problems.append({"column": c.name,
                                 "error": f"value {row[i]!r} is not numeric"})
    if problems:
        raise HTTPException(400, {"field": field, "problems": problems})
    return row


def _class_id(label, class_names) -> int:
    labels = list(class_names)
    if label in labels:
        return labels.index(label)
    raise HTTPException(400, {"field": "desired_label",
                              "problems": [{"column": None,
                                            "error": f"unknown class {label!r}; "
                                                     f"expected one of {labels}"}]})


def build_app(bundle: TrainedBundle, cfg: RunConfig, class_names,
              checkpoints=None) -> FastAPI:
    """Build the FastAPI app around an immutable bundle."""
    app = FastAPI(title="tabcf what-if service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )
    model = bundle.diffusion
    schema, vocab = model.schema, model.vocab
    class_names = list(class_names or
                       [str(i) for i in range(bundle.classifier.n_classes)])
    digest = schema_digest(schema, vocab)

    @app.get("/api/schema")
    def get_schema():
        return _schema_payload(bundle, cfg, class_names)

    @app.get("/api/models")
    def get_models():
        entries = []
        for kind, path in (checkpoints or {}).items():
            header = load_header(path)
            entries.append({
                "kind": kind,
                "path": path,
                "meta": header.get("meta", {}),
                "schema_digest": header.get("schema_digest")
                or digest,
                "shapes": header.get("shapes", {}),
            })
        return {"schema_digest": digest, "models": entries}

    @app.post("/api/predict")
    def predict(body: dict):
        row = _check_row(body.get("row"), schema, vocab, "row")
        try:
            enc = encode_row(row, vocab, schema)
        except TabularError as exc:
            raise HTTPException(400, {"field": "row",
                                      "problems": [{"column": None,
                                                    "error": str(exc)}]})
        z = model.dictionary.embed_row(enc).data[None]
        probs = softmax(bundle.classifier.forward(Tensor(z))).data[0]
        return {
            "probabilities": {class_names[i]: float(p)
                              for i, p in enumerate(probs)},
            "predicted": class_names[int(probs.argmax())],
        }

    @app.post("/api/counterfactuals")
    def counterfactuals(body: dict):
        row = _check_row(body.get("row"), schema, vocab, "row")
        desired = _class_id(body.get("desired_label"), class_names)
        method = body.get("method", "scd")
        if method not in ("scd",) + BASELINE_METHODS:
            raise HTTPException(400, {"field": "method",
                                      "problems": [{"column": None,
                                                    "error": f"unknown method "
                                                             f"{method!r}"}]})
        seed = int(body.get("seed", cfg.guidance.seed))
        lambdas = body.get("lambdas", {})
        try:
            guidance = dataclasses.replace(
                cfg.guidance,
                seed=seed,
                n_counterfactuals=int(body.get("B",
                                               cfg.guidance.n_counterfactuals)),
                tau=int(body.get("tau", cfg.guidance.tau)),
                eta=float(body.get("eta", cfg.guidance.eta)),
                strategy=body.get("strategy", cfg.guidance.strategy),
                add_initial_noise=bool(body.get("add_initial_noise",
                                                cfg.guidance.add_initial_noise)),
                lambda_validity=float(lambdas.get(
                    "validity", cfg.guidance.lambda_validity)),
                lambda_proximity=float(lambdas.get(
                    "proximity", cfg.guidance.lambda_proximity)),
                lambda_diversity=float(lambdas.get(
                    "diversity", cfg.guidance.lambda_diversity)),
                lambda_plausibility=float(lambdas.get(
                    "plausibility", cfg.guidance.lambda_plausibility)),
            )
            baseline = dataclasses.replace(
                cfg.baseline,
                seed=seed,
                n_counterfactuals=guidance.n_counterfactuals,
            )
        except (TypeError, ValueError) as exc:
            raise HTTPException(400, {"field": "knobs",
                                      "problems": [{"column": None,
                                                    "error": str(exc)}]})
        run_cfg = dataclasses.replace(cfg, guidance=guidance, baseline=baseline)
        cs = generate_for_method(bundle, method, row, desired, run_cfg)
        enc = encode_row(row, vocab, schema)
        report = evaluate(cs.encoded, cs.rows, enc, desired, bundle.classifier,
                          model.dictionary, bundle.recurrent, bundle.transformer,
                          method=method)
        payload = json.loads(report.to_record())
        per_row = payload.pop("per_row")
        for record, name in zip(per_row,
                                (class_names[r.predicted]
                                 for r in report.per_row)):
            record["predicted_label"] = name
        return {
            "method": method,
            "seed": seed,
            "rows": [list(r) for r in cs.rows],
            "per_row": per_row,
            "report": payload,
            "loss_trace": [json.loads(b.to_record()) for b in cs.loss_trace],
        }

    @app.post("/api/evaluate")
    def evaluate_endpoint(body: dict):
        rows_payload = body.get("rows")
        if not isinstance(rows_payload, list) or not rows_payload:
            raise HTTPException(400, {"field": "rows",
                                      "problems": [{"column": None,
                                                    "error": "rows must be a "
                                                             "non-empty array"}]})
        rows = [_check_row(r, schema, vocab, f"rows[{i}]")
                for i, r in enumerate(rows_payload)]
        original = _check_row(body.get("original_row"), schema, vocab,
                              "original_row")
        desired = _class_id(body.get("desired_label"), class_names)
        encoded = [encode_row(r, vocab, schema) for r in rows]
        orig = encode_row(original, vocab, schema)
        report = evaluate(encoded, rows, orig, desired, bundle.classifier,
                          model.dictionary, bundle.recurrent, bundle.transformer)
        return {"seed": None, "report": json.loads(report.to_record())}

    return app
