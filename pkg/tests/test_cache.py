"""Cache round-trips, key sensitivity, and corruption quarantine."""

from __future__ import annotations

import dataclasses
import json

import pytest

from sgicl import (
    CacheIntegrityError,
    CacheKey,
    DemonstrationCache,
    GeneratedDemonstration,
    Provenance,
)


def _key(**overrides) -> CacheKey:
    base = dict(
        task="sst2",
        example_id="000002",
        target_class=1,
        conditioning_mode="input-and-class",
        temperature=0.5,
        seed=100003,
        template_hash="ab12cd34ef56ab12",
        backend_id="stub",
    )
    base.update(overrides)
    return CacheKey(**base)


def _demo() -> GeneratedDemonstration:
    return GeneratedDemonstration(
        source_example_id="000002",
        target_class=1,
        generated_text="a dull , lifeless slog .",
        conditioning_mode="input-and-class",
        provenance=Provenance("stub", 100003, "ab12cd34ef56ab12"),
    )


def test_put_then_get_round_trips(tmp_path):
    cache = DemonstrationCache(tmp_path / "cache")
    cache.put(_key(), _demo())
    assert cache.get(_key()) == _demo()


def test_cold_get_is_absence_not_error(tmp_path):
    cache = DemonstrationCache(tmp_path / "cache")
    assert cache.get(_key()) is None


def test_key_digest_is_pure_and_sensitive():
    assert _key().digest() == _key().digest()
    base = _key().digest()
    for change in (
        {"template_hash": "ffffffffffffffff"},
        {"conditioning_mode": "class-only"},
        {"seed": 100004},
        {"temperature": 0.7},
        {"backend_id": "other"},
        {"example_id": "000003"},
        {"target_class": 0},
        {"task": "sst5"},
    ):
        assert _key(**change).digest() != base


def test_changed_template_hash_is_a_cold_lookup(tmp_path):
    cache = DemonstrationCache(tmp_path / "cache")
    cache.put(_key(), _demo())
    assert cache.get(_key(template_hash="ffffffffffffffff")) is None


def test_corrupt_record_quarantined_and_reported(tmp_path):
    cache = DemonstrationCache(tmp_path / "cache")
    cache.put(_key(), _demo())
    path = cache.path_for(_key())
    path.write_text("{ not json", encoding="utf-8")
    with pytest.raises(CacheIntegrityError):
        cache.get(_key())
    assert not path.exists()
    assert path.with_suffix(".corrupt").exists()
    # quarantined entry now reads as cold
    assert cache.get(_key()) is None


def test_checksum_tamper_detected(tmp_path):
    cache = DemonstrationCache(tmp_path / "cache")
    cache.put(_key(), _demo())
    path = cache.path_for(_key())
    record = json.loads(path.read_text(encoding="utf-8"))
    record["demonstration"]["generated_text"] = "tampered ."
    path.write_text(json.dumps(record), encoding="utf-8")
    with pytest.raises(CacheIntegrityError):
        cache.get(_key())


def test_puts_leave_no_temp_files(tmp_path):
    cache = DemonstrationCache(tmp_path / "cache")
    for i in range(5):
        cache.put(_key(seed=i), _demo())
    leftovers = [p for p in cache.root.iterdir() if p.suffix != ".json"]
    assert leftovers == []
    assert len(list(cache.root.iterdir())) == 5


def test_key_is_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        _key().seed = 1
