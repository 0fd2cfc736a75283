"""Single-file checkpoint container.

Layout: an 8-byte little-endian length prefix, a UTF-8 JSON header, then
raw little-endian binary32 parameter blocks in the order the header lists
them.  Every block is named and SHA-256 digested in the header, and the
header carries the schema/vocabulary (or their digest) so incompatible
model combinations fail loudly.  Save -> load -> save is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import struct
from datetime import datetime, timezone

import numpy as np

from .diffusion import DiffusionModel, cosine_schedule
from .nets import ARPlausibilityModel, ClassifierNet, DenoiserNet, EmbeddingDictionary, TabularVAE
from .tabular import ColumnSchema, Vocabulary

__all__ = [
    "CheckpointError",
    "schema_digest",
    "save_diffusion",
    "load_diffusion",
    "save_classifier",
    "load_classifier",
    "save_plausibility",
    "load_plausibility",
    "save_vae",
    "load_vae",
    "load_header",
]

FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def schema_digest(schema, vocab: Vocabulary) -> str:
    payload = _canonical(
        {
            "schema": [
                {
                    "name": c.name,
                    "kind": c.kind,
                    "bin_edges": list(c.bin_edges),
                    "bin_representatives": list(c.bin_representatives),
                }
                for c in schema
            ],
            "vocab": [list(v) for v in vocab.values],
        }
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def _schema_to_json(schema, vocab):
    return {
        "columns": [
            {
                "name": c.name,
                "kind": c.kind,
                "bin_edges": list(c.bin_edges),
                "bin_representatives": list(c.bin_representatives),
            }
            for c in schema
        ],
        "vocab": [list(v) for v in vocab.values],
    }


def _schema_from_json(payload):
    schema = tuple(
        ColumnSchema(
            name=c["name"],
            kind=c["kind"],
            bin_edges=tuple(c["bin_edges"]),
            bin_representatives=tuple(c["bin_representatives"]),
        )
        for c in payload["columns"]
    )
    vocab = Vocabulary.from_columns([list(v) for v in payload["vocab"]])
    return schema, vocab


def _write(path: str, header: dict, blocks: dict):
    names = sorted(blocks)
    header = dict(header)
    header["format_version"] = FORMAT_VERSION
    header["params"] = [
        {
            "name": name,
            "shape": list(blocks[name].shape),
            "digest": hashlib.sha256(
                np.ascontiguousarray(blocks[name], dtype="<f4").tobytes()
            ).hexdigest(),
        }
        for name in names
    ]
    raw = _canonical(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        for name in names:
            fh.write(np.ascontiguousarray(blocks[name], dtype="<f4").tobytes())


def _read(path: str):
    with open(path, "rb") as fh:
        (length,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(length).decode("utf-8"))
        if header.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version in {path}")
        blocks = {}
        for entry in header["params"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(4 * count)
            digest = hashlib.sha256(raw).hexdigest()
            if digest != entry["digest"]:
                raise CheckpointError(
                    f"digest mismatch for block {entry['name']!r} in {path}"
                )
            blocks[entry["name"]] = np.frombuffer(raw, dtype="<f4").reshape(shape)
    return header, blocks


def load_header(path: str) -> dict:
    header, _ = _read(path)
    return header


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _meta(model, extra: dict) -> dict:
    meta = {"created": getattr(model, "meta", {}).get("created") or _now()}
    meta.update(extra)
    return meta


def _restore(params: dict, blocks: dict):
    for name, tensor in params.items():
        if name not in blocks:
            raise CheckpointError(f"missing parameter block {name!r}")
        if tuple(blocks[name].shape) != tensor.data.shape:
            raise CheckpointError(f"shape mismatch for block {name!r}")
        tensor.data = blocks[name].astype(np.float64)


def save_diffusion(path: str, model: DiffusionModel):
    header = {
        "kind": "diffusion",
        "meta": _meta(model, {}),
        "schema": _schema_to_json(model.schema, model.vocab),
        "schema_digest": schema_digest(model.schema, model.vocab),
        "schedule": {"steps": model.schedule.steps, "offset": model.schedule.offset},
        "shapes": {
            "embed_dim": model.dictionary.dim,
            "hidden_dim": model.denoiser.w2.shape[0],
            "time_dim": model.denoiser.time_dim,
            "cardinalities": list(model.dictionary.cardinalities),
        },
    }
    blocks = {f"dict.{k}": v.data for k, v in model.dictionary.params().items()}
    blocks.update({f"denoiser.{k}": v.data for k, v in model.denoiser.params().items()})
    _write(path, header, blocks)


def load_diffusion(path: str) -> DiffusionModel:
    header, blocks = _read(path)
    if header["kind"] != "diffusion":
        raise CheckpointError(f"{path} is a {header['kind']} checkpoint, not diffusion")
    schema, vocab = _schema_from_json(header["schema"])
    shapes = header["shapes"]
    rng = np.random.default_rng(0)
    dictionary = EmbeddingDictionary(shapes["cardinalities"], shapes["embed_dim"], rng)
    denoiser = DenoiserNet(
        len(shapes["cardinalities"]), shapes["embed_dim"], shapes["hidden_dim"],
        shapes["time_dim"], rng,
    )
    _restore({f"dict.{k}": v for k, v in dictionary.params().items()}, blocks)
    _restore({f"denoiser.{k}": v for k, v in denoiser.params().items()}, blocks)
    dictionary.freeze()
    # schedule constants are recomputed from (T, s), never stored as tables
    schedule = cosine_schedule(header["schedule"]["steps"], header["schedule"]["offset"])
    model = DiffusionModel(
        schedule=schedule, denoiser=denoiser, dictionary=dictionary,
        schema=schema, vocab=vocab,
    )
    model.meta = header["meta"]
    return model


def save_classifier(path: str, clf: ClassifierNet, schema, vocab, n_classes: int,
                    class_names=None):
    header = {
        "kind": "classifier",
        "meta": _meta(clf, {}),
        "schema_digest": schema_digest(schema, vocab),
        "shapes": {
            "n_columns": clf.n_columns,
            "embed_dim": clf.embed_dim,
            "hidden_dim": clf.w1.shape[1],
            "n_classes": n_classes,
        },
        "class_names": list(class_names) if class_names else None,
    }
    _write(path, header, {k: v.data for k, v in clf.params().items()})


def load_classifier(path: str) -> tuple:
    header, blocks = _read(path)
    if header["kind"] != "classifier":
        raise CheckpointError(f"{path} is a {header['kind']} checkpoint, not classifier")
    s = header["shapes"]
    clf = ClassifierNet(s["n_columns"], s["embed_dim"], s["hidden_dim"],
                        s["n_classes"], np.random.default_rng(0))
    _restore(clf.params(), blocks)
    clf.meta = header["meta"]
    return clf, header


def save_plausibility(path: str, model: ARPlausibilityModel, schema, vocab):
    header = {
        "kind": "plausibility",
        "meta": _meta(model, {}),
        "schema_digest": schema_digest(schema, vocab),
        "shapes": {
            "variant": model.variant,
            "cardinalities": list(model.cardinalities),
            "d_embed": model.d_embed,
            "d_hidden": model.d_hidden,
            "n_layers": model.n_layers,
            "n_heads": model.n_heads,
        },
    }
    _write(path, header, {k: v.data for k, v in model.params().items()})


def load_plausibility(path: str) -> tuple:
    header, blocks = _read(path)
    if header["kind"] != "plausibility":
        raise CheckpointError(f"{path} is a {header['kind']} checkpoint, not plausibility")
    s = header["shapes"]
    model = ARPlausibilityModel(
        s["cardinalities"], s["variant"], s["d_embed"], s["d_hidden"],
        s["n_layers"], s["n_heads"], np.random.default_rng(0),
    )
    _restore(model.params(), blocks)
    model.meta = header["meta"]
    return model, header


def save_vae(path: str, model: TabularVAE, schema, vocab):
    header = {
        "kind": "vae",
        "meta": _meta(model, {}),
        "schema_digest": schema_digest(schema, vocab),
        "shapes": {
            "n_columns": model.n_columns,
            "embed_dim": model.embed_dim,
            "hidden_dim": model.ew.shape[1],
            "latent_dim": model.latent_dim,
        },
    }
    _write(path, header, {k: v.data for k, v in model.params().items()})


def load_vae(path: str) -> tuple:
    header, blocks = _read(path)
    if header["kind"] != "vae":
        raise CheckpointError(f"{path} is a {header['kind']} checkpoint, not vae")
    s = header["shapes"]
    model = TabularVAE(s["n_columns"], s["embed_dim"], s["hidden_dim"],
                       s["latent_dim"], np.random.default_rng(0))
    _restore(model.params(), blocks)
    model.meta = header["meta"]
    return model, header


def check_schema_match(expected_digest: str, header: dict, path: str):
    found = header.get("schema_digest")
    if found != expected_digest:
        raise CheckpointError(
            f"{path}: schema digest {found} does not match expected {expected_digest}"
        )
