from __future__ import annotations

import random

import pytest

from avcause.baselines import (
    DEFAULT_PREDICTION,
    KeywordRule,
    coerce_valid,
    compute_priors,
    default_rules,
    keyword_predict,
    load_rules,
    majority_predict,
    parse_rules,
)
from avcause.taxonomy import SOURCE_KEYWORD, SOURCE_MAJORITY, validate
from conftest import make_record, make_unified


def test_compute_priors_counts_and_modes():
    records = [
        make_record("a", av_failed="Y", primary_cause="S", failed_system="PE", late_ai=True),
        make_record("b", av_failed="Y", primary_cause="S", failed_system="PE", late_ai=True),
        make_record("c", av_failed="N", primary_cause="H"),
        make_record("d", av_failed="N", primary_cause="H"),
        make_record("e", av_failed="Y", primary_cause="E"),
    ]
    priors = compute_priors(records)
    assert priors.av_failed == "Y"
    # S and H tie at 2; S comes first in code order.
    assert priors.primary_cause == "S"
    assert priors.failed_system == "N"   # N has 3, PE has 2
    assert priors.late_ai is False
    assert priors.counts["primary_cause"] == {"S": 2, "H": 2, "E": 1}


def test_compute_priors_single_record():
    priors = compute_priors(
        [make_record("a", av_failed="I", primary_cause="E", failed_system="N", late_ai=False)]
    )
    assert (priors.av_failed, priors.primary_cause) == ("I", "E")


def test_compute_priors_late_tie_breaks_true():
    records = [
        make_record("a", av_failed="Y", late_ai=True, primary_cause="S", failed_system="PE"),
        make_record("b", av_failed="Y", late_ai=False),
    ]
    assert compute_priors(records).late_ai is True


def test_compute_priors_rejects_empty():
    with pytest.raises(ValueError, match="empty"):
        compute_priors([])


def test_majority_predict_constant_and_valid():
    records = [
        make_record("a", av_failed="Y", primary_cause="S", failed_system="PE", late_ai=True)
    ] * 3
    priors = compute_priors(records)
    one = majority_predict("x1", priors)
    two = majority_predict("x2", priors)
    assert one.source == SOURCE_MAJORITY
    assert (one.av_failed, one.primary_cause, one.failed_system, one.late_ai) == (
        "Y",
        "S",
        "PE",
        True,
    )
    assert (two.av_failed, two.primary_cause, two.failed_system, two.late_ai) == (
        one.av_failed,
        one.primary_cause,
        one.failed_system,
        one.late_ai,
    )
    assert validate(one) == []


def test_majority_predict_coerces_invalid_mode_combinations():
    # Modes picked independently can clash; prediction must still be valid.
    records = [
        make_record("a", av_failed="N", primary_cause="S", failed_system="PE", late_ai=False),
        make_record("b", av_failed="N", primary_cause="S", failed_system="PE", late_ai=False),
        make_record("c", av_failed="Y", primary_cause="H", failed_system="N", late_ai=True),
        make_record("d", av_failed="N", primary_cause="E", failed_system="N", late_ai=True,
                    ),
    ]
    # av mode N (3), late mode tie -> true; late must be coerced false.
    fixed = [
        r if validate(r) == [] else r
        for r in records
    ]
    priors = compute_priors(fixed)
    prediction = majority_predict("p", priors)
    assert prediction.late_ai is False
    assert validate(prediction) == []


def test_keyword_predict_av_failed_trigger():
    record = make_unified("k1", "Narrative:\nADAS engaged moments before the contact.")
    prediction = keyword_predict(record)
    assert prediction.av_failed == "Y"
    assert prediction.source == SOURCE_KEYWORD
    assert validate(prediction) == []


def test_keyword_predict_weather_cause():
    record = make_unified("k2", "Narrative:\nHeavy rain obscured the crosswalk markings.")
    prediction = keyword_predict(record)
    assert prediction.primary_cause == "E"
    assert prediction.failed_system == "N"   # cause not S, coerced


def test_keyword_predict_defaults_when_nothing_matches():
    record = make_unified("k3", "Narrative:\nqqq zzz.")
    prediction = keyword_predict(record)
    assert (
        prediction.av_failed,
        prediction.primary_cause,
        prediction.failed_system,
        prediction.late_ai,
        prediction.secondary_cause,
    ) == ("I", "N", "N", False, "N")


def test_keyword_priority_decides_between_matches():
    rules = [
        KeywordRule(pattern="rain", dimension="primary_cause", value="E", priority=5),
        KeywordRule(pattern="driver", dimension="primary_cause", value="H", priority=9),
    ]
    record = make_unified("k4", "Narrative:\nrain and another driver involved")
    assert keyword_predict(record, rules).primary_cause == "H"

    shuffled = list(reversed(rules))
    assert keyword_predict(record, shuffled).primary_cause == "H"


def test_keyword_rules_are_case_insensitive():
    record = make_unified("k5", "Narrative:\nadas ENGAGED on approach")
    assert keyword_predict(record).av_failed == "Y"


def test_keyword_predictions_always_valid_property():
    rng = random.Random(99)
    vocab = (
        "rain", "snow", "driver", "rear-ended by", "sensor", "software", "ADAS engaged",
        "failed to detect", "after impact", "camera", "brake", "merge", "stopped", "AV",
        "pedestrian", "intersection", "delayed", "glare", "struck by", "did not brake",
    )
    for i in range(1000):
        words = rng.choices(vocab, k=rng.randrange(0, 12))
        record = make_unified(f"p{i}", "Narrative:\n" + " ".join(words))
        assert validate(keyword_predict(record)) == []


def test_majority_predictions_always_valid_property():
    rng = random.Random(7)
    av, cause, system = ("Y", "N", "I"), ("S", "H", "E", "N"), ("PE", "PL", "N")
    for _ in range(50):
        corpus = [
            coerce_valid(
                make_record(
                    f"r{j}",
                    av_failed=rng.choice(av),
                    primary_cause=rng.choice(cause),
                    failed_system=rng.choice(system),
                    late_ai=rng.random() < 0.5,
                )
            )
            for j in range(rng.randrange(1, 15))
        ]
        assert validate(majority_predict("p", compute_priors(corpus))) == []


def test_coerce_valid_fixes_each_violation():
    fixed = coerce_valid(make_record(av_failed="N", primary_cause="H", failed_system="PE"))
    assert fixed.failed_system == "N"
    fixed = coerce_valid(make_record(av_failed="N", primary_cause="H", late_ai=True))
    assert fixed.late_ai is False
    fixed = coerce_valid(
        make_record(av_failed="Y", primary_cause="S", failed_system="PE", secondary_cause="S")
    )
    assert fixed.secondary_cause == "N"


def test_default_rules_load_from_package_data():
    rules = default_rules()
    assert len(rules) == 10
    dims = {rule.dimension for rule in rules}
    assert dims == {"av_failed", "primary_cause", "failed_system", "late_ai"}


def test_load_rules_round_trip(tmp_path):
    path = tmp_path / "rules.tsv"
    path.write_text("# comment\n5\tav_failed\tswerved\tY\n", encoding="utf-8")
    rules = load_rules(path)
    assert rules == [KeywordRule(pattern="swerved", dimension="av_failed", value="Y", priority=5)]


def test_parse_rules_rejects_bad_lines():
    with pytest.raises(ValueError, match="4 tab-separated"):
        parse_rules(["5\tav_failed\tpattern"])
    with pytest.raises(ValueError, match="dimension"):
        parse_rules(["5\tbogus\tpattern\tY"])
    with pytest.raises(ValueError, match="invalid for"):
        parse_rules(["5\tav_failed\tpattern\tPE"])
    with pytest.raises(ValueError, match="bad pattern"):
        parse_rules(["5\tav_failed\t(open\tY"])
    with pytest.raises(ValueError, match="priority"):
        parse_rules(["x\tav_failed\tpattern\tY"])
    with pytest.raises(ValueError, match="duplicate priority"):
        parse_rules(["5\tav_failed\ta\tY", "5\tav_failed\tb\tN"])


def test_default_prediction_is_valid():
    assert validate(DEFAULT_PREDICTION) == []
