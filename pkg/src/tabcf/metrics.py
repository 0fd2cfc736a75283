"""The four evaluation scores (validity, proximity, diversity,
plausibility), valid-only filtering, and report assembly.

Headline proximity is reported as the match fraction 1 - mean mismatch
(higher is better); the raw mean mismatch distance is kept alongside it.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .nets import ARPlausibilityModel, ClassifierNet, EmbeddingDictionary, ar_nll_batch
from .tabular import mismatch_distance

__all__ = [
    "CounterfactualReport",
    "validity_score",
    "proximity_score",
    "diversity_score",
    "plausibility_score",
    "evaluate",
    "report_table",
]


@dataclass(frozen=True)
class RowRecord:
    row: tuple
    encoded: tuple
    predicted: int
    valid: bool
    mismatch_to_input: float
    nll_recurrent: float
    nll_transformer: float


@dataclass(frozen=True)
class SubReport:
    count: int
    validity: float = 0.0
    proximity: float = 0.0
    raw_mean_distance: float = 0.0
    diversity: float = 0.0
    plausibility_recurrent: float = 0.0
    plausibility_transformer: float = 0.0


@dataclass(frozen=True)
class CounterfactualReport:
    method: str
    validity: float
    proximity: float
    raw_mean_distance: float
    diversity: float
    plausibility_recurrent: float
    plausibility_transformer: float
    valid_only: SubReport
    per_row: tuple = field(repr=False, default=())

    def to_record(self) -> str:
        payload = asdict(self)
        return json.dumps(payload, sort_keys=True)


def _predictions(encoded, classifier: ClassifierNet, dictionary: EmbeddingDictionary):
    ids = np.asarray(encoded, dtype=np.intp)
    Z = dictionary.embed(ids).data
    return classifier.predict(Z)


def validity_score(encoded, classifier, desired: int, dictionary) -> float:
    """Fraction of counterfactuals actually predicted as the desired class."""
    if not len(encoded):
        raise ValueError("empty counterfactual list")
    preds = _predictions(encoded, classifier, dictionary)
    return float((preds == desired).mean())


def proximity_score(encoded, original) -> tuple:
    """(match fraction, raw mean mismatch distance) against the input row."""
    if not len(encoded):
        raise ValueError("empty counterfactual list")
    raw = float(np.mean([mismatch_distance(e, original) for e in encoded]))
    return 1.0 - raw, raw


def diversity_score(encoded) -> float:
    """Mean pairwise mismatch distance; 0 when fewer than two rows."""
    b = len(encoded)
    if b < 2:
        return 0.0
    total = 0.0
    for i in range(b - 1):
        for j in range(i + 1, b):
            total += mismatch_distance(encoded[i], encoded[j])
    return 2.0 * total / (b * (b - 1))


def plausibility_score(encoded, model: ARPlausibilityModel) -> float:
    """Mean negative log-likelihood under the AR oracle; lower is better."""
    if not len(encoded):
        raise ValueError("empty counterfactual list")
    return float(ar_nll_batch(list(encoded), model).mean())


def evaluate(
    encoded,
    rows,
    original,
    desired: int,
    classifier: ClassifierNet,
    dictionary: EmbeddingDictionary,
    recurrent: ARPlausibilityModel,
    transformer: ARPlausibilityModel,
    method: str = "scd",
) -> CounterfactualReport:
    """Score a counterfactual set and its valid-only subset."""
    encoded = list(encoded)
    rows = list(rows)
    if len(encoded) != len(rows):
        raise ValueError("encoded rows and decoded rows must align")
    preds = _predictions(encoded, classifier, dictionary)
    nll_r = ar_nll_batch(encoded, recurrent)
    nll_t = ar_nll_batch(encoded, transformer)
    per_row = tuple(
        RowRecord(
            row=tuple(rows[i]),
            encoded=tuple(encoded[i]),
            predicted=int(preds[i]),
            valid=bool(preds[i] == desired),
            mismatch_to_input=mismatch_distance(encoded[i], original),
            nll_recurrent=float(nll_r[i]),
            nll_transformer=float(nll_t[i]),
        )
        for i in range(len(encoded))
    )
    prox, raw = proximity_score(encoded, original)
    valid_idx = [i for i in range(len(encoded)) if per_row[i].valid]
    if valid_idx:
        v_enc = [encoded[i] for i in valid_idx]
        v_prox, v_raw = proximity_score(v_enc, original)
        valid_only = SubReport(
            count=len(valid_idx),
            validity=1.0,
            proximity=v_prox,
            raw_mean_distance=v_raw,
            diversity=diversity_score(v_enc),
            plausibility_recurrent=float(nll_r[valid_idx].mean()),
            plausibility_transformer=float(nll_t[valid_idx].mean()),
        )
    else:
        valid_only = SubReport(count=0)
    return CounterfactualReport(
        method=method,
        validity=float((preds == desired).mean()),
        proximity=prox,
        raw_mean_distance=raw,
        diversity=diversity_score(encoded),
        plausibility_recurrent=float(nll_r.mean()),
        plausibility_transformer=float(nll_t.mean()),
        valid_only=valid_only,
        per_row=per_row,
    )


def report_table(reports) -> str:
    """Render reports as a fixed-width comparison table."""
    header = (
        f"{'method':<10} {'validity':>9} {'proximity':>10} {'diversity':>10} "
        f"{'plaus(rnn)':>11} {'plaus(tfm)':>11}"
    )
    lines = [header, "-" * len(header)]
    for r in reports:
        lines.append(
            f"{r.method:<10} {r.validity:>9.4f} {r.proximity:>10.4f} "
            f"{r.diversity:>10.4f} {r.plausibility_recurrent:>11.3f} "
            f"{r.plausibility_transformer:>11.3f}"
        )
    return "\n".join(lines)
