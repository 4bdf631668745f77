"""Configuration parsing, defaults, generated wiring, and derivation."""
import json

import pytest

from ledgerbridge.config import (ScenarioConfig, default_config, derive_config,
                                 load_config, parse_config)
from ledgerbridge.errors import ConfigInvalid


def test_defaults_describe_the_reference_topology():
    cfg = default_config()
    assert cfg.seed == 42
    assert cfg.duration_s == 120.0
    assert cfg.bridge_mode == "events"
    assert [c for c, _ in cfg.channels] == ["teleop"]
    _, ordering = cfg.channels[0]
    assert (ordering.max_message_count, ordering.batch_timeout_ms) == (10, 150.0)
    assert len(cfg.links) == 4
    assert all(l.base_delay_ms == 50.0 and l.jitter_ms == 10.0 for l in cfg.links)
    assert cfg.drones["count"] == 1
    assert cfg.drones["odom_rate_hz"] == 30.0
    assert cfg.poll == {"interval_ms": 100.0, "per_asset_cost_ms": 1.5}
    assert cfg.cmd_timeout_ms == 1000.0


def test_topic_layout_per_drone():
    assert ScenarioConfig.odom_topic("drone3") == "/drone3/odom"
    assert ScenarioConfig.battery_topic("drone3") == "/drone3/battery"
    assert ScenarioConfig.cmd_topic("drone3") == "/drone3/cmd_vel"
    cfg = default_config(drones__count=3)
    assert cfg.drone_ids() == ["drone0", "drone1", "drone2"]


def test_generated_identities_scope_writes_narrowly():
    cfg = default_config(drones__count=2)
    byid = {i.identity_id: i for i in cfg.identities}
    assert byid["drone0"].may_write("/drone0/odom")
    assert not byid["drone0"].may_write("/drone1/odom")
    assert not byid["drone0"].may_write("/drone0/cmd_vel")
    assert byid["controller"].may_write("/drone0/cmd_vel")
    assert byid["controller"].may_write("/drone1/cmd_vel")
    assert not byid["controller"].may_write("/drone0/odom")
    assert not byid["bridge-hostA"].may_write("/drone0/odom")  # signs per topic


def test_generated_rules_pair_each_topic_across_hosts():
    cfg = default_config()
    dirs = {(r.host, r.topic): r.direction for r in cfg.relay_rules}
    assert dirs[("hostA", "/drone0/odom")] == "to_chain"
    assert dirs[("hostB", "/drone0/odom")] == "from_chain"
    assert dirs[("hostB", "/drone0/cmd_vel")] == "to_chain"
    assert dirs[("hostA", "/drone0/cmd_vel")] == "from_chain"
    assert len(cfg.relay_rules) == 6


def test_generated_origin_registry_maps_topics_to_signers():
    cfg = default_config()
    assert cfg.origin_registry["/drone0/odom"] == "drone0"
    assert cfg.origin_registry["/drone0/cmd_vel"] == "controller"


def test_unknown_top_level_field_rejected():
    with pytest.raises(ConfigInvalid, match="unknown config field 'tpyo'"):
        parse_config({"tpyo": 1})


@pytest.mark.parametrize("patch,needle", [
    ({"duration_s": 0}, "duration_s"),
    ({"bridge_mode": "carrier_pigeon"}, "bridge_mode"),
    ({"key_scheme": "per_week"}, "key_scheme"),
    ({"cmd_timeout_ms": -5}, "cmd_timeout_ms"),
    ({"drones": {"count": 0}}, "drones.count"),
    ({"drones": {"shape": "hexagon"}}, "drones.shape"),
    ({"poll": {"interval_ms": 0}}, "poll.interval_ms"),
    ({"failure": {"fail_radius_m": 0}}, "fail_radius_m"),
    ({"channels": []}, "at least one channel"),
])
def test_invalid_values_name_the_field(patch, needle):
    with pytest.raises(ConfigInvalid) as exc:
        parse_config(patch)
    assert needle in str(exc.value)


def test_nested_override_merges_with_defaults():
    cfg = parse_config({"drones": {"count": 4}})
    assert cfg.drones["count"] == 4
    assert cfg.drones["odom_rate_hz"] == 30.0  # untouched default


def test_supplied_tracks_only_caller_keys():
    cfg = parse_config({"seed": 7, "drones": {"count": 2}})
    assert cfg.supplied == frozenset({"seed", "drones"})
    assert "bridge_mode" not in cfg.supplied  # defaulted, not supplied


def test_effective_round_trips_through_parse():
    cfg = default_config(seed=9, drones__count=2, bridge_mode="polling")
    again = parse_config(cfg.effective())
    assert again.effective() == cfg.effective()
    assert again.seed == 9 and again.bridge_mode == "polling"


def test_derive_config_overrides_nested_fields():
    base = default_config()
    derived = derive_config(base, seed=100, drones__odom_rate_hz=50.0)
    assert derived.seed == 100
    assert derived.drones["odom_rate_hz"] == 50.0
    assert base.drones["odom_rate_hz"] == 30.0  # base untouched
    assert derived.drones["count"] == base.drones["count"]


def test_explicit_identities_and_registry_validated():
    data = {
        "identities": [{"identity_id": "only", "write_scopes": ["/"]}],
        "origin_registry": {"/x": "ghost"},
    }
    with pytest.raises(ConfigInvalid, match="unknown identity 'ghost'"):
        parse_config(data)


def test_duplicate_identity_rejected():
    data = {"identities": [{"identity_id": "a"}, {"identity_id": "a"}]}
    with pytest.raises(ConfigInvalid, match="duplicate identity_id"):
        parse_config(data)


def test_rule_referencing_unknown_channel_rejected():
    data = {"relay_rules": [
        {"host": "hostA", "topic": "/t", "direction": "to_chain",
         "channel_id": "nope"}]}
    with pytest.raises(ConfigInvalid, match="unknown channel 'nope'"):
        parse_config(data)


def test_rule_host_needs_links_both_ways():
    base = default_config().effective()
    base["links"] = [l for l in base["links"]
                     if not (l["src"] == "ledger" and l["dst"] == "hostB")]
    with pytest.raises(ConfigInvalid, match="no downlink ledger->hostB"):
        parse_config(base)


def test_load_config_reads_json_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"seed": 3, "duration_s": 5}))
    cfg = load_config(str(path))
    assert (cfg.seed, cfg.duration_s) == (3, 5.0)


def test_load_config_bad_json_diagnostic(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigInvalid, match="not valid JSON"):
        load_config(str(path))


def test_link_validation_wraps_spec_errors():
    base = {"links": [{"src": "hostA", "dst": "ledger", "base_delay_ms": 5,
                       "jitter_ms": 50}]}
    with pytest.raises(ConfigInvalid, match="hostA->ledger"):
        parse_config(base)
