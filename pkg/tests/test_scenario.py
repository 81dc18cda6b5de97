"""Scenario file parsing, validation errors, and round-trip stability."""

from __future__ import annotations

import dataclasses
import random

import pytest

from lgtbids import (
    AttackKind,
    AttackSpec,
    ChannelParams,
    Edge,
    Node,
    NodeKind,
    Scenario,
    ScenarioError,
    build_topology,
    fixture_path,
    load_scenario,
    parse_scenario,
    serialize_scenario,
)
from lgtbids.attack import AttackConstants
from lgtbids.scenario import EavesdropperSpec, RandomAttackTemplate


MINIMAL = """\
version 1

[channel]
frequency_hz 28e9
bandwidth_hz 800e6
noise_dbm -106

[simulation]
trials 10
seed 1

[eavesdropper]
mode constant
constant_gbps 2.0

[nodes]
BS BS 30 20.0 no
n1 CU 23 1.0 no

[edges]
BS n1 50 -
"""


def issues_by_kind(exc: ScenarioError) -> dict[str, list]:
    grouped: dict[str, list] = {}
    for issue in exc.issues:
        grouped.setdefault(issue.kind, []).append(issue)
    return grouped


class TestParse:
    def test_minimal(self):
        s = parse_scenario(MINIMAL)
        assert s.trials == 10
        assert s.channel.pathloss_exponent == 2.0
        assert s.eavesdropper.capacity_for(s.channel, s.edges[0], 23.0) == 2.0e9

    def test_table3_fixture(self, table3_scenario):
        s = table3_scenario
        assert s.channel.bandwidth_hz == 800e6
        assert s.channel.noise_dbm == -106.0
        assert s.cell_radius_m == 250.0
        assert len(s.nodes) == 24
        assert len(s.edges) == 24
        topo = build_topology(s.nodes, s.edges)
        assert len(topo.layers) == 5
        assert s.attacks == (AttackSpec(AttackKind.HALF_DUPLEX, "V1", 0.6),)

    def test_empty_document_lists_every_required_section(self):
        with pytest.raises(ScenarioError) as exc:
            parse_scenario("")
        missing = {
            i.field for i in exc.value.issues if i.message == "required section missing"
        }
        assert missing == {"channel", "simulation", "eavesdropper", "nodes", "edges"}

    def test_attack_targeting_bs_rejected(self):
        text = MINIMAL + "\n[attacks]\nfixed DoS BS 0.5\n"
        with pytest.raises(ScenarioError, match="not allowed to be the BS"):
            parse_scenario(text)

    def test_attack_on_undeclared_node_rejected(self):
        text = MINIMAL + "\n[attacks]\nfixed DoS ghost 0.5\n"
        with pytest.raises(ScenarioError, match="not a declared node"):
            parse_scenario(text)

    def test_unknown_key_is_an_error(self):
        text = MINIMAL.replace("seed 1", "seed 1\nwarp_speed 9")
        with pytest.raises(ScenarioError) as exc:
            parse_scenario(text)
        kinds = issues_by_kind(exc.value)
        assert any(i.field == "simulation.warp_speed" for i in kinds["unknown-key"])

    def test_unknown_section_is_an_error(self):
        text = MINIMAL + "\n[quantum]\nfoo 1\n"
        with pytest.raises(ScenarioError) as exc:
            parse_scenario(text)
        assert any(i.field == "quantum" for i in exc.value.issues)

    def test_syntax_error_carries_line_number(self):
        bad = MINIMAL.replace("BS n1 50 -", "BS n1 50")
        with pytest.raises(ScenarioError) as exc:
            parse_scenario(bad)
        issue = next(i for i in exc.value.issues if i.kind == "syntax")
        assert issue.line is not None
        assert "SRC DST DISTANCE_M DEPTHS" in issue.message

    def test_bad_float_is_field_precise(self):
        bad = MINIMAL.replace("noise_dbm -106", "noise_dbm dusty")
        with pytest.raises(ScenarioError) as exc:
            parse_scenario(bad)
        assert any(i.field == "channel.noise_dbm" for i in exc.value.issues)

    def test_version_line_required(self):
        with pytest.raises(ScenarioError, match="version"):
            parse_scenario(MINIMAL.replace("version 1", "version 2"))

    def test_tx_power_outside_range_rejected(self):
        bad = MINIMAL.replace("n1 CU 23 1.0 no", "n1 CU 35 1.0 no")
        with pytest.raises(ScenarioError, match=r"\[13, 30\]"):
            parse_scenario(bad)

    def test_distance_beyond_radius_rejected(self):
        bad = MINIMAL.replace("BS n1 50 -", "BS n1 400 -")
        with pytest.raises(ScenarioError, match="cell radius"):
            parse_scenario(bad)

    def test_trials_must_be_positive(self):
        bad = MINIMAL.replace("trials 10", "trials 0")
        with pytest.raises(ScenarioError, match="trials"):
            parse_scenario(bad)

    def test_duplicate_key_rejected(self):
        bad = MINIMAL.replace("seed 1", "seed 1\nseed 2")
        with pytest.raises(ScenarioError, match="duplicate key"):
            parse_scenario(bad)

    def test_intensity_validation(self):
        bad = MINIMAL + "\n[attacks]\nfixed DoS n1 1.7\n"
        with pytest.raises(ScenarioError, match="intensity"):
            parse_scenario(bad)


class TestEavesdropper:
    def test_per_link_override(self):
        text = MINIMAL.replace("constant_gbps 2.0", "constant_gbps 2.0\nlink BS n1 3.5")
        s = parse_scenario(text)
        assert s.eavesdropper.capacity_for(s.channel, s.edges[0], 23.0) == 3.5e9

    def test_override_must_name_a_real_edge(self):
        text = MINIMAL.replace("constant_gbps 2.0", "constant_gbps 2.0\nlink BS nx 3.5")
        with pytest.raises(ScenarioError, match="unknown edge"):
            parse_scenario(text)

    def test_derived_mode(self):
        text = MINIMAL.replace(
            "mode constant\nconstant_gbps 2.0", "mode derived\ndistance_m 150"
        )
        s = parse_scenario(text)
        cap = s.eavesdropper.capacity_for(s.channel, s.edges[0], 23.0)
        # eavesdropper at 150 m hears less than the 50 m link carries
        from lgtbids import capacity_bps, free_space_pathloss_db, snr_linear

        direct = capacity_bps(
            s.channel, snr_linear(s.channel, 23.0, free_space_pathloss_db(s.channel, 50.0))
        )
        assert 0 < cap < direct

    def test_derived_requires_distance(self):
        text = MINIMAL.replace(
            "mode constant\nconstant_gbps 2.0", "mode derived"
        )
        with pytest.raises(ScenarioError, match="distance_m"):
            parse_scenario(text)


def random_scenario(rng: random.Random) -> Scenario:
    n = rng.randint(1, 6)
    nodes = [Node("BS", NodeKind.BS, 30.0, 20.0)]
    edges = []
    for i in range(n):
        nid = f"n{i}"
        nodes.append(Node(nid, NodeKind.CU, rng.uniform(13, 27), rng.uniform(0.1, 30), rng.random() < 0.3))
        edges.append(Edge("BS", nid, rng.uniform(5, 240), tuple(rng.uniform(0, 15) for _ in range(rng.randint(0, 3)))))
    attacks = ()
    if n and rng.random() < 0.7:
        attacks = (
            AttackSpec(
                rng.choice(list(AttackKind)),
                f"n{rng.randrange(n)}",
                rng.random(),
                seed=rng.randint(0, 99),
                constants=AttackConstants(dos_factor=rng.choice([0.9, 0.5])),
            ),
        )
    templates = ()
    if rng.random() < 0.5:
        lo = rng.random() * 0.5
        templates = (
            RandomAttackTemplate(
                kinds=(AttackKind.DOS, AttackKind.HALF_DUPLEX),
                min_bias=rng.random(),
                intensity_lo=lo,
                intensity_hi=lo + rng.random() * (1 - lo),
            ),
        )
    return Scenario(
        channel=ChannelParams(
            frequency_hz=rng.uniform(1e9, 60e9),
            bandwidth_hz=rng.uniform(1e7, 2e9),
            noise_dbm=rng.uniform(-120, -90),
            pathloss_exponent=rng.uniform(1.5, 3.5),
            gamma_per_m=rng.uniform(0, 0.3),
        ),
        nodes=tuple(sorted(nodes, key=lambda x: x.id)),
        edges=tuple(sorted(edges, key=lambda e: e.key)),
        eavesdropper=EavesdropperSpec(mode="constant", constant_gbps=rng.uniform(0, 5)),
        attacks=attacks,
        random_attacks=templates,
        trials=rng.randint(1, 500),
        seed=rng.randint(0, 2**31),
        reauth_success_prob=rng.random(),
        silence_ticks=rng.randint(1, 5),
        fading_scale=rng.random() * 0.5,
        cell_radius_m=250.0,
    )


class TestRoundTrip:
    def test_fixtures_round_trip(self):
        for name in ("table3.scenario", "table3_clean.scenario", "noisy_calibrated.scenario"):
            s = load_scenario(fixture_path(name))
            assert parse_scenario(serialize_scenario(s)) == s

    def test_random_scenarios_round_trip(self):
        rng = random.Random(31337)
        for _ in range(50):
            s = random_scenario(rng)
            assert parse_scenario(serialize_scenario(s)) == s

    def test_serialization_is_canonical(self, table3_scenario):
        text = serialize_scenario(table3_scenario)
        assert serialize_scenario(parse_scenario(text)) == text
