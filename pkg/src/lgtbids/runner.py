"""End-to-end trial engine: topology -> channel -> attack -> detection
-> scoring, plus the file emitters.

Every trial derives its own random streams from the master seed and the
trial index (string-keyed ``random.Random`` seeding, one stream each for
channel draws, attack draws, and the detector), so results do not depend
on execution order and a run can be split into sub-runs at the matching
offsets. Achieved obstruction loss is sampled uniformly in [0, worst
case] per link; fading (when enabled) multiplies achieved SNR by
1 - scale + scale * Exp(1), a unit-mean family whose scale is the
calibration knob for noisy scenarios.
"""

from __future__ import annotations

import csv
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .attack import AttackSpec, GroundTruth, apply_attacks
from .channel import ChannelParams, NodeBudget, extra_loss_db, link_bounds, link_budget
from .detector import (
    DetectionFlag,
    DetectionReport,
    full_scan,
    run_lgtbids,
)
from .metrics import ConfusionCounts, TrialSummary, score, summarize
from .scenario import RandomAttackTemplate, Scenario
from .topology import LayeredTopology, build_topology, edge_list_rows, parent_edge

DOCUMENT_SCHEMA = "lgtbids.run/1"
EMIT_SELECTIONS = ("summary", "envelope", "report", "layers", "edges")
EMIT_FILENAMES = {
    "summary": "summary.csv",
    "envelope": "envelope_table.csv",
    "report": "detection_report.json",
    "layers": "per_layer_stats.csv",
    "edges": "edge_list.csv",
}

_METRIC_COLUMNS = (
    ("accuracy", "accuracy"),
    ("precision", "detection_rate"),  # tp/(tp+fp); both names refer to it
    ("error_rate", "error_rate"),
    ("far", "far"),
    ("fnr", "fnr"),
    ("for", "for_"),
    ("sensitivity", "sensitivity"),
    ("balanced_accuracy", "balanced_accuracy"),
    ("f1", "f1"),
    ("specificity", "specificity"),
)


class RunnerError(Exception):
    pass


@dataclass(frozen=True)
class EnvelopeRow:
    """One line of the per-node envelope table (first-trial snapshot)."""

    layer: int
    node: str
    power_dbm: float
    sr_lower_bps: float
    sr_upper_bps: float
    ee_lower: float
    ee_upper: float
    ee_achieved: float
    sr_achieved_bps: float
    status: str


@dataclass(frozen=True)
class TrialOutcome:
    report: DetectionReport
    truth: GroundTruth
    primary_spec: Optional[AttackSpec]
    counts: ConfusionCounts
    flags: tuple[DetectionFlag, ...]
    scored_nodes: tuple[str, ...]
    budgets: Optional[dict[str, NodeBudget]]


@dataclass(frozen=True)
class RunArtifacts:
    scenario: Scenario
    topology: LayeredTopology
    mode: str
    detection_reports: tuple[DetectionReport, ...]
    truths: tuple[GroundTruth, ...]
    primary_specs: tuple[Optional[AttackSpec], ...]
    counts: tuple[ConfusionCounts, ...]
    trial_flags: tuple[tuple[DetectionFlag, ...], ...]
    summary: TrialSummary
    table4_dump: tuple[EnvelopeRow, ...]


def _stream(master_seed: int, trial: int, name: str) -> random.Random:
    # String seeding hashes through sha512: stable across platforms and
    # independent of trial execution order.
    return random.Random(f"{master_seed}/{trial}/{name}")


def trial_rng_seed(master_seed: int, trial: int, name: str) -> int:
    return _stream(master_seed, trial, name).getrandbits(63)


def _clean_capacities(
    scenario: Scenario, topo: LayeredTopology, params: ChannelParams
) -> dict[str, float]:
    """Zero-extra-loss capacity per node, used to rank screening picks."""
    caps: dict[str, float] = {}
    for nid in topo.non_bs_ids():
        node = topo.node(nid)
        best = None
        for edge in topo.in_edges(nid):
            eaves = scenario.eavesdropper.capacity_for(params, edge, node.tx_power_dbm)
            budget = link_budget(
                params,
                distance_m=edge.distance_m,
                entity_depths_m=edge.entity_depths_m,
                tx_power_dbm=node.tx_power_dbm,
                power_consumption_w=node.power_consumption_w,
                eavesdropper_bps=eaves,
                achieved_extra_loss_db=0.0,
            )
            if best is None or budget.capacity_bps > best:
                best = budget.capacity_bps
        caps[nid] = best
    return caps


def _min_capacity_by_layer(
    topo: LayeredTopology, clean_caps: Mapping[str, float]
) -> dict[int, str]:
    picks: dict[int, str] = {}
    for idx, layer in enumerate(topo.layers[1:], start=2):
        if layer:
            picks[idx] = min(layer, key=lambda nid: (clean_caps[nid], nid))
    return picks


def _draw_random_attack(
    template: RandomAttackTemplate,
    topo: LayeredTopology,
    min_picks: Mapping[int, str],
    rng: random.Random,
) -> Optional[AttackSpec]:
    non_bs = list(topo.non_bs_ids())
    if not non_bs:
        return None
    if min_picks and rng.random() < template.min_bias:
        layer = rng.choice(sorted(min_picks))
        target = min_picks[layer]
    else:
        target = rng.choice(sorted(non_bs))
    node = topo.node(target)
    outermost = topo.layer_of(target) >= len(topo.layers) - 1
    applicable = [
        k
        for k in template.kinds
        if k.value != "Handover" or (node.mobile and outermost)
    ]
    if not applicable:
        return None
    kind = applicable[rng.randrange(len(applicable))]
    intensity = rng.uniform(template.intensity_lo, template.intensity_hi)
    return AttackSpec(
        kind=kind, target=target, intensity=intensity, constants=template.constants
    )


def _run_trial(
    scenario: Scenario,
    topo: LayeredTopology,
    params: ChannelParams,
    min_picks: Mapping[int, str],
    trial: int,
    mode: str,
    keep_budgets: bool,
) -> TrialOutcome:
    rng_channel = _stream(scenario.seed, trial, "channel")
    rng_attack = _stream(scenario.seed, trial, "attack")
    detector_seed = trial_rng_seed(scenario.seed, trial, "detector")

    edge_states: dict[tuple[str, str], NodeBudget] = {}
    for edge in topo.edges:
        pe_max = extra_loss_db(params, edge.entity_depths_m)
        achieved = rng_channel.uniform(0.0, pe_max) if pe_max > 0 else 0.0
        gain = 1.0
        if scenario.fading_scale > 0:
            s = scenario.fading_scale
            gain = max(1.0 - s + s * rng_channel.expovariate(1.0), 1e-9)
        dst = topo.node(edge.dst)
        eaves = scenario.eavesdropper.capacity_for(params, edge, dst.tx_power_dbm)
        budget = link_budget(
            params,
            distance_m=edge.distance_m,
            entity_depths_m=edge.entity_depths_m,
            tx_power_dbm=dst.tx_power_dbm,
            power_consumption_w=dst.power_consumption_w,
            eavesdropper_bps=eaves,
            achieved_extra_loss_db=achieved,
            fading_gain=gain,
        )
        envelope = link_bounds(
            params,
            edge,
            dst.tx_power_dbm,
            dst.power_consumption_w,
            eaves,
            achieved,
            fading_gain=gain,
        )
        edge_states[edge.key] = NodeBudget(
            edge=edge,
            power_consumption_w=dst.power_consumption_w,
            budget=budget,
            envelope=envelope,
        )

    budgets: dict[str, NodeBudget] = {}
    for nid in topo.non_bs_ids():
        inbound = topo.in_edges(nid)
        caps = {e.key: edge_states[e.key].budget.capacity_bps for e in inbound}
        chosen = parent_edge(topo, nid, caps if len(inbound) > 1 else None)
        budgets[nid] = edge_states[chosen.key]

    specs = list(scenario.attacks)
    for template in scenario.random_attacks:
        drawn = _draw_random_attack(template, topo, min_picks, rng_attack)
        if drawn is not None:
            specs.append(drawn)
    budgets, truth = apply_attacks(specs, topo, budgets)

    report = run_lgtbids(
        topo,
        params,
        budgets,
        scenario.reauth_success_prob,
        detector_seed,
        edge_budgets=edge_states,
        silence_ticks=scenario.silence_ticks,
    )
    if mode == "scan":
        flags = full_scan(topo, params, budgets)
        scored = topo.non_bs_ids()
    else:
        flags = report.flags
        scored = report.screening.nodes()
    counts = score(flags, truth, scored)
    return TrialOutcome(
        report=report,
        truth=truth,
        primary_spec=specs[0] if specs else None,
        counts=counts,
        flags=flags,
        scored_nodes=scored,
        budgets=dict(budgets) if keep_budgets else None,
    )


def _table_rows(
    topo: LayeredTopology,
    budgets: Mapping[str, NodeBudget],
    screened: Iterable[str],
    flagged: Iterable[str],
) -> tuple[EnvelopeRow, ...]:
    screened_set = set(screened)
    flagged_set = set(flagged)
    rows = []
    for nid in topo.non_bs_ids():
        nb = budgets[nid]
        if nid in flagged_set:
            status = "Under attack"
        elif nid in screened_set:
            status = "Vulnerable"
        else:
            status = "Normal"
        rows.append(
            EnvelopeRow(
                layer=topo.layer_of(nid),
                node=nid,
                power_dbm=topo.node(nid).tx_power_dbm,
                sr_lower_bps=nb.envelope.secrecy_lower_bps,
                sr_upper_bps=nb.envelope.secrecy_upper_bps,
                ee_lower=nb.envelope.ee_lower,
                ee_upper=nb.envelope.ee_upper,
                ee_achieved=nb.envelope.ee_achieved,
                sr_achieved_bps=nb.envelope.secrecy_achieved_bps,
                status=status,
            )
        )
    return tuple(rows)


def run(
    scenario: Scenario,
    *,
    threads: int = 1,
    mode: str = "screen",
    trial_offset: int = 0,
    trials: Optional[int] = None,
) -> RunArtifacts:
    """Execute the scenario's Monte Carlo trials and summarize them.

    ``mode`` picks the scoring surface: "screen" scores the screened
    picks (the real pipeline), "scan" scores every node via the
    full-scan oracle. Trials are independent; ``threads`` only changes
    how they are executed, never the results.
    """
    if mode not in ("screen", "scan"):
        raise ValueError(f"mode must be 'screen' or 'scan', got {mode!r}")
    topo = build_topology(scenario.nodes, scenario.edges)
    params = scenario.channel
    n_trials = scenario.trials if trials is None else trials
    clean_caps = _clean_capacities(scenario, topo, params)
    min_picks = _min_capacity_by_layer(topo, clean_caps)

    def job(trial: int) -> TrialOutcome:
        try:
            return _run_trial(
                scenario,
                topo,
                params,
                min_picks,
                trial,
                mode,
                keep_budgets=(trial == trial_offset),
            )
        except Exception as exc:
            raise RunnerError(f"trial {trial}: {exc}") from exc

    indices = range(trial_offset, trial_offset + n_trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(job, indices))
    else:
        outcomes = [job(t) for t in indices]

    summary = summarize(
        [o.counts for o in outcomes],
        [o.primary_spec for o in outcomes],
        [o.report for o in outcomes],
    )
    first = outcomes[0]
    table = _table_rows(
        topo,
        first.budgets,
        first.report.screening.nodes(),
        [f.node for f in first.flags if f.flag == 1],
    )
    return RunArtifacts(
        scenario=scenario,
        topology=topo,
        mode=mode,
        detection_reports=tuple(o.report for o in outcomes),
        truths=tuple(o.truth for o in outcomes),
        primary_specs=tuple(o.primary_spec for o in outcomes),
        counts=tuple(o.counts for o in outcomes),
        trial_flags=tuple(o.flags for o in outcomes),
        summary=summary,
        table4_dump=table,
    )


# -- structured document and emission ---------------------------------------


def _suite_dict(suite) -> dict:
    return {name: getattr(suite, attr) for name, attr in _METRIC_COLUMNS}


def _counts_dict(c: ConfusionCounts) -> dict:
    return {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn}


def to_document(artifacts: RunArtifacts) -> dict:
    """Full structured dump of a run (the detection report document)."""
    summary = artifacts.summary
    trials = []
    for idx, (report, truth, spec, counts, flags) in enumerate(
        zip(
            artifacts.detection_reports,
            artifacts.truths,
            artifacts.primary_specs,
            artifacts.counts,
            artifacts.trial_flags,
        )
    ):
        trials.append(
            {
                "index": idx,
                "elapsed_detection_seconds": report.elapsed_detection_seconds,
                "screening": [
                    {"layer": e.layer, "node": e.node, "capacity_bps": e.capacity_bps}
                    for e in report.screening.entries
                ],
                "flags": [
                    {"node": f.node, "flag": f.flag, "breached": f.breached.value}
                    for f in flags
                ],
                "remediation": [
                    {
                        "node": r.node,
                        "phase": r.phase.value,
                        "random_bits_sent": r.random_bits_sent,
                        "new_edge": list(r.new_edge.key) if r.new_edge else None,
                    }
                    for r in report.remediation
                ],
                "truth": sorted(truth.attacked),
                "attack": None
                if spec is None
                else {
                    "kind": spec.kind.value,
                    "target": spec.target,
                    "intensity": spec.intensity,
                },
                "counts": _counts_dict(counts),
            }
        )
    return {
        "schema": DOCUMENT_SCHEMA,
        "mode": artifacts.mode,
        "summary": {
            "overall": _suite_dict(summary.overall),
            "overall_counts": _counts_dict(summary.overall_counts),
            "per_attack": {
                kind: _suite_dict(suite) for kind, suite in summary.per_attack.items()
            },
            "per_attack_counts": {
                kind: _counts_dict(c) for kind, c in summary.per_attack_counts.items()
            },
            "mean_detection_seconds": summary.mean_detection_seconds,
            "per_layer_ee": {str(k): v for k, v in summary.per_layer_ee.items()},
            "per_layer_ops": {str(k): v for k, v in summary.per_layer_ops.items()},
        },
        "table4": [
            {
                "layer": r.layer,
                "node": r.node,
                "power_dbm": r.power_dbm,
                "sr_lower_bps": r.sr_lower_bps,
                "sr_upper_bps": r.sr_upper_bps,
                "ee_lower": r.ee_lower,
                "ee_upper": r.ee_upper,
                "ee_achieved": r.ee_achieved,
                "sr_achieved_bps": r.sr_achieved_bps,
                "status": r.status,
            }
            for r in artifacts.table4_dump
        ],
        "edges": [
            {
                "src": src,
                "dst": dst,
                "src_layer": sl,
                "dst_layer": dl,
                "distance_m": dist,
            }
            for src, dst, sl, dl, dist in edge_list_rows(artifacts.topology)
        ],
        "trials": trials,
    }


def _full(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _pct(value: Optional[float]) -> str:
    return "" if value is None else f"{100.0 * value:.2f}"


def _write_summary_csv(doc: dict, path: Path) -> None:
    header = ["attack", "tp", "fp", "tn", "fn"]
    header += [name for name, _ in _METRIC_COLUMNS]
    header += [f"{name}_pct" for name, _ in _METRIC_COLUMNS]
    rows = []
    order = ["overall"] + sorted(doc["summary"]["per_attack"])
    for kind in order:
        if kind == "overall":
            suite = doc["summary"]["overall"]
            counts = doc["summary"]["overall_counts"]
        else:
            suite = doc["summary"]["per_attack"][kind]
            counts = doc["summary"]["per_attack_counts"][kind]
        row = [kind, counts["tp"], counts["fp"], counts["tn"], counts["fn"]]
        row += [_full(suite[name]) for name, _ in _METRIC_COLUMNS]
        row += [_pct(suite[name]) for name, _ in _METRIC_COLUMNS]
        rows.append(row)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_envelope_csv(doc: dict, path: Path) -> None:
    header = [
        "layer",
        "node",
        "power_dbm",
        "sr_lower_bps",
        "sr_upper_bps",
        "ee_lower_bps_per_w",
        "ee_upper_bps_per_w",
        "ee_achieved_bps_per_w",
        "sr_achieved_bps",
        "status",
        "sr_lower_gbps",
        "sr_upper_gbps",
        "ee_lower_gbps_per_w",
        "ee_upper_gbps_per_w",
        "ee_achieved_gbps_per_w",
        "sr_achieved_gbps",
    ]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in doc["table4"]:
            writer.writerow(
                [
                    r["layer"],
                    r["node"],
                    r["power_dbm"],
                    repr(r["sr_lower_bps"]),
                    repr(r["sr_upper_bps"]),
                    repr(r["ee_lower"]),
                    repr(r["ee_upper"]),
                    repr(r["ee_achieved"]),
                    repr(r["sr_achieved_bps"]),
                    r["status"],
                    f"{r['sr_lower_bps'] / 1e9:.2f}",
                    f"{r['sr_upper_bps'] / 1e9:.2f}",
                    f"{r['ee_lower'] / 1e9:.2f}",
                    f"{r['ee_upper'] / 1e9:.2f}",
                    f"{r['ee_achieved'] / 1e9:.2f}",
                    f"{r['sr_achieved_bps'] / 1e9:.2f}",
                ]
            )


def _write_layers_csv(doc: dict, path: Path) -> None:
    ee = doc["summary"]["per_layer_ee"]
    ops = doc["summary"]["per_layer_ops"]
    layers = sorted({int(k) for k in ee} | {int(k) for k in ops})
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["layer", "mean_achieved_ee_bps_per_w", "ops", "mean_achieved_ee_gbps_per_w"]
        )
        for layer in layers:
            mean_ee = ee.get(str(layer))
            writer.writerow(
                [
                    layer,
                    "" if mean_ee is None else repr(mean_ee),
                    ops.get(str(layer), 0),
                    "" if mean_ee is None else f"{mean_ee / 1e9:.2f}",
                ]
            )


def _write_edges_csv(doc: dict, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst", "src_layer", "dst_layer", "distance_m"])
        for e in doc["edges"]:
            writer.writerow(
                [e["src"], e["dst"], e["src_layer"], e["dst_layer"], repr(e["distance_m"])]
            )


def emit(
    artifacts_or_document,
    out_dir,
    selection: Sequence[str] = EMIT_SELECTIONS,
) -> list[Path]:
    """Write the selected output files into ``out_dir``.

    Accepts either RunArtifacts or an already-built document (e.g. a
    loaded detection_report.json); emission is pure, so re-emitting the
    same document yields byte-identical files.
    """
    doc = (
        to_document(artifacts_or_document)
        if isinstance(artifacts_or_document, RunArtifacts)
        else artifacts_or_document
    )
    unknown = set(selection) - set(EMIT_SELECTIONS)
    if unknown:
        raise ValueError(f"unknown emit selections: {sorted(unknown)}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name in EMIT_SELECTIONS:
            if name not in selection:
                continue
            path = out / EMIT_FILENAMES[name]
            if name == "summary":
                _write_summary_csv(doc, path)
            elif name == "envelope":
                _write_envelope_csv(doc, path)
            elif name == "report":
                path.write_text(
                    json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
                )
            elif name == "layers":
                _write_layers_csv(doc, path)
            elif name == "edges":
                _write_edges_csv(doc, path)
            written.append(path)
        return written
    except OSError as exc:
        raise RunnerError(f"cannot write outputs under {out}: {exc}") from exc
