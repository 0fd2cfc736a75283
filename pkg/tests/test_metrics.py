"""Exact unit values for the four metrics and valid-only filtering."""

import numpy as np
import pytest

from tabcf.metrics import diversity_score, evaluate, proximity_score
from tabcf.tabular import decode_row


def _valid_row(bundle, dataset):
    """A training row together with the class the classifier assigns it."""
    ids = dataset.encoded_matrix()
    preds = bundle.classifier.predict(bundle.diffusion.dictionary.embed(ids).data)
    return dataset.rows[0], int(preds[0])


def test_identical_valid_rows_unit_values(small_bundle, dataset):
    # all rows equal the input and are valid: validity 1, proximity 1,
    # diversity 0, and the valid-only subset covers everything
    enc, desired = _valid_row(small_bundle, dataset)
    rows = [decode_row(enc, dataset.vocab, dataset.schema)] * 3
    report = evaluate([enc] * 3, rows, enc, desired, small_bundle.classifier,
                      small_bundle.diffusion.dictionary, small_bundle.recurrent,
                      small_bundle.transformer)
    assert report.validity == 1.0
    assert report.proximity == 1.0
    assert report.raw_mean_distance == 0.0
    assert report.diversity == 0.0
    assert report.valid_only.count == 3
    assert report.valid_only.validity == 1.0


def test_valid_only_subset_validity_is_one(small_bundle, dataset):
    # mixed set: the valid-only subset always reports validity exactly 1
    enc, desired = _valid_row(small_bundle, dataset)
    other = next(r for r in dataset.rows if r[0] != enc[0])
    rows = [decode_row(e, dataset.vocab, dataset.schema) for e in (enc, other)]
    report = evaluate([enc, other], rows, enc, desired, small_bundle.classifier,
                      small_bundle.diffusion.dictionary, small_bundle.recurrent,
                      small_bundle.transformer)
    if report.valid_only.count:
        assert report.valid_only.validity == 1.0
    assert 0.0 <= report.validity <= 1.0


def test_all_invalid_gives_empty_subset(small_bundle, dataset):
    enc, desired = _valid_row(small_bundle, dataset)
    wrong = (desired + 1) % dataset.n_classes
    rows = [decode_row(enc, dataset.vocab, dataset.schema)]
    report = evaluate([enc], rows, enc, wrong, small_bundle.classifier,
                      small_bundle.diffusion.dictionary, small_bundle.recurrent,
                      small_bundle.transformer)
    assert report.validity == 0.0
    assert report.valid_only.count == 0
    assert report.valid_only.validity == 0.0


def test_proximity_is_one_minus_mismatch():
    original = (0, 0, 0, 0)
    prox, raw = proximity_score([(0, 0, 0, 1)], original)
    assert prox == 0.75
    assert raw == 0.25
    prox, raw = proximity_score([(1, 1, 1, 1)], original)
    assert prox == 0.0
    assert raw == 1.0


def test_diversity_pairwise_mismatch():
    assert diversity_score([(0, 0), (1, 1)]) == 1.0
    assert diversity_score([(0, 0), (0, 1)]) == 0.5
    assert diversity_score([(0, 0)]) == 0.0
    assert diversity_score([(0, 1), (0, 1), (0, 1)]) == 0.0


def test_plausibility_reported_per_oracle(small_bundle, dataset):
    enc, desired = _valid_row(small_bundle, dataset)
    rows = [decode_row(enc, dataset.vocab, dataset.schema)]
    report = evaluate([enc], rows, enc, desired, small_bundle.classifier,
                      small_bundle.diffusion.dictionary, small_bundle.recurrent,
                      small_bundle.transformer)
    assert report.plausibility_recurrent > 0.0
    assert report.plausibility_transformer > 0.0
    record = report.per_row[0]
    assert record.nll_recurrent == pytest.approx(report.plausibility_recurrent)
    assert record.mismatch_to_input == 0.0
