from arrowlab.manifest import (
    RunManifest,
    config_digest,
    load_manifest,
    manifest_timestamp,
    write_manifest,
)


def test_digest_invariant_to_key_order():
    a = {"x": 1, "y": {"a": 2.5, "b": [1, 2]}}
    b = {"y": {"b": [1, 2], "a": 2.5}, "x": 1}
    assert config_digest(a) == config_digest(b)
    assert config_digest(a) != config_digest({"x": 2, "y": a["y"]})


def test_timestamp_is_deterministic(monkeypatch):
    monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
    assert manifest_timestamp() == manifest_timestamp()
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1000000000")
    assert manifest_timestamp().startswith("2001-09-09")


def test_write_load_roundtrip(tmp_path):
    m = RunManifest(seed=7, scenario="fig3a", config_digest="abc",
                    outputs=["a.csv"], timestamp=manifest_timestamp(),
                    assertions={"ok": True}, metrics={"s": 1.5})
    path = write_manifest(m, tmp_path)
    back = load_manifest(path)
    assert back == m
    assert back.passed
