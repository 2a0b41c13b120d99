from __future__ import annotations

import pytest

from avcause.aggregate import (
    DEFAULT_REAR_END_PATTERNS,
    VENN_REGIONS,
    compute_stats,
    detect_rear_end,
    emit_report,
    format_percent,
    pattern_histogram,
    percent_tenths,
    rear_end_flags,
)
from conftest import make_record, make_unified


def _fixture_corpus():
    """Eight classified records with hand-counted expectations.

    id  cause system late av  rear
    a   S     PE     T    Y   T      late&av_failed&rear_end
    b   S     PE     T    Y   F      late&av_failed
    c   S     PL     T    Y   F      late&av_failed
    d   S     N      F    N   T      rear_end
    e   H     N      T    N   T      late&rear_end
    f   H     N      F    N   T      rear_end
    g   E     N      F    I   T      rear_end
    h   N     CO->N  F    Y   F      av_failed
    """
    rows = [
        ("a", "S", "PE", True, "Y", True),
        ("b", "S", "PE", True, "Y", False),
        ("c", "S", "PL", True, "Y", False),
        ("d", "S", "N", False, "N", True),
        ("e", "H", "N", True, "N", True),
        ("f", "H", "N", False, "N", True),
        ("g", "E", "N", False, "I", True),
        ("h", "N", "CO", False, "Y", False),
    ]
    records = [
        make_record(rid, primary_cause=cause, failed_system=system, late_ai=late,
                    av_failed=av)
        for rid, cause, system, late, av, _ in rows
    ]
    flags = {rid: rear for rid, *_rest, rear in rows}
    return records, flags


def test_compute_stats_hand_counts():
    records, flags = _fixture_corpus()
    stats = compute_stats(records, flags)
    assert stats.total == 8
    assert stats.cause_counts == {"S": 4, "H": 2, "E": 1, "N": 1}
    assert stats.system_counts == {
        "PE": 2, "PL": 1, "CO": 1, "SW": 0, "HW": 0, "HA": 0, "N": 4,
    }
    assert stats.late_count == 4
    assert stats.late_and_system_cause_count == 3
    assert stats.rear_end_count == 5
    assert stats.rear_end_and_late_count == 2


def test_venn_regions_partition_corpus():
    records, flags = _fixture_corpus()
    stats = compute_stats(records, flags)
    assert stats.venn == {
        "late&av_failed&rear_end": 1,
        "late&av_failed": 2,
        "late&rear_end": 1,
        "av_failed&rear_end": 0,
        "late": 0,
        "av_failed": 1,
        "rear_end": 3,
        "none": 0,
    }
    assert sum(stats.venn.values()) == stats.total
    assert set(stats.venn) == set(VENN_REGIONS)


def test_compute_stats_requires_flags_for_all():
    records, flags = _fixture_corpus()
    del flags["e"]
    with pytest.raises(ValueError, match="e"):
        compute_stats(records, flags)


def test_percent_tenths_is_exact_integer_truncation():
    # The published run's printed figures, from its own counts.
    assert percent_tenths(1497, 2168) == 690
    assert percent_tenths(1238, 2168) == 571
    assert percent_tenths(1183, 1497) == 790
    assert percent_tenths(583, 2168) == 268   # 26.89...% cuts to 26.8
    assert percent_tenths(0, 100) == 0
    assert percent_tenths(100, 100) == 1000
    assert percent_tenths(1, 3) == 333
    assert percent_tenths(5, 0) == 0


def test_percent_tenths_matches_arbitrary_precision_oracle():
    from fractions import Fraction
    import math

    for num in range(0, 60):
        for den in range(1, 60):
            expected = math.floor(Fraction(1000 * num, den))
            assert percent_tenths(num, den) == expected, (num, den)


def test_format_percent_strings():
    assert format_percent(1238, 2168) == "57.1%"
    assert format_percent(583, 2168) == "26.8%"
    assert format_percent(0, 8) == "0.0%"
    assert format_percent(8, 8) == "100.0%"


def test_stats_percent_helpers():
    records, flags = _fixture_corpus()
    stats = compute_stats(records, flags)
    assert stats.percent(stats.late_count) == "50.0%"
    assert stats.late_given_system_cause_percent() == "75.0%"


def test_detect_rear_end_narrative_phrases():
    hit = make_unified("r1", "Narrative:\nThe AV was rear-ended by a sedan.")
    miss = make_unified("r2", "Narrative:\nThe AV drifted out of its lane.")
    assert detect_rear_end(hit) is True
    assert detect_rear_end(miss) is False


def test_detect_rear_end_structured_metadata_line():
    record = make_unified(
        "r3", "Crash Type: Rear\nNarrative:\nContact occurred at low speed."
    )
    assert detect_rear_end(record) is True
    # Only a metadata-style line qualifies; mid-sentence 'rear' does not.
    prose = make_unified("r4", "Narrative:\nThe rear camera recorded the scene.")
    assert detect_rear_end(prose) is False


def test_detect_rear_end_case_insensitive():
    record = make_unified("r5", "Narrative:\nVehicle was REAR ENDED at a light.")
    assert detect_rear_end(record) is True


def test_custom_patterns_replace_defaults():
    record = make_unified("r6", "Narrative:\nshunted from behind")
    assert detect_rear_end(record) is False
    assert detect_rear_end(record, ("shunted",)) is True


def test_rear_end_flags_and_histogram():
    records = [
        make_unified("a", "Narrative:\nrear-ended by a truck"),
        make_unified("b", "Narrative:\nstruck from behind while stopped"),
        make_unified("c", "Narrative:\nclipped a cone"),
    ]
    flags = rear_end_flags(records)
    assert flags == {"a": True, "b": True, "c": False}
    histogram = pattern_histogram(records)
    assert histogram["struck from behind"] == 1
    assert histogram["rear-end"] == 1        # substring of rear-ended
    assert set(histogram) == set(DEFAULT_REAR_END_PATTERNS)


def test_emit_report_files_and_determinism(tmp_path):
    records, flags = _fixture_corpus()
    stats = compute_stats(records, flags, rear_end_pattern_counts={"rear-end": 5})
    paths = emit_report(stats, tmp_path / "out")
    assert [p.name for p in paths] == ["causes.csv", "venn.csv", "summary.txt"]
    first = {p.name: p.read_bytes() for p in paths}

    again = emit_report(stats, tmp_path / "out2")
    assert {p.name: p.read_bytes() for p in again} == first


def test_emit_report_causes_csv_content(tmp_path):
    records, flags = _fixture_corpus()
    stats = compute_stats(records, flags)
    paths = emit_report(stats, tmp_path)
    causes = (tmp_path / "causes.csv").read_text(encoding="utf-8").splitlines()
    assert causes[0] == "kind,code,label,count,percent"
    assert causes[1] == "cause,S,System,4,50.0"
    assert causes[2] == "cause,H,Human,2,25.0"
    assert causes[3] == "cause,E,Environmental,1,12.5"
    assert causes[4] == "cause,N,None,1,12.5"
    assert causes[5] == "system,PE,Perception,2,25.0"
    # 4 cause rows + 7 system rows + header
    assert len(causes) == 12
    assert paths[0].name == "causes.csv"


def test_emit_report_venn_csv_content(tmp_path):
    records, flags = _fixture_corpus()
    stats = compute_stats(records, flags)
    emit_report(stats, tmp_path)
    venn = (tmp_path / "venn.csv").read_text(encoding="utf-8").splitlines()
    assert venn[0] == "region,count,percent"
    assert venn[1] == "late&av_failed&rear_end,1,12.5"
    assert len(venn) == 1 + len(VENN_REGIONS)


def test_emit_report_summary_mentions_key_figures(tmp_path):
    records, flags = _fixture_corpus()
    stats = compute_stats(records, flags)
    emit_report(stats, tmp_path)
    summary = (tmp_path / "summary.txt").read_text(encoding="utf-8")
    assert "Incidents analyzed: 8" in summary
    assert "Late AI response: 4 (50.0%)" in summary
    assert "Late AI among system-cause incidents: 3 of 4 (75.0%)" in summary
    assert "Rear-end collisions: 5 (62.5%)" in summary


def test_empty_corpus_stats():
    stats = compute_stats([], {})
    assert stats.total == 0
    assert stats.percent(0) == "0.0%"
    assert stats.late_given_system_cause_percent() == "0.0%"
