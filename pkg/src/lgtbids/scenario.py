"""Scenario files: a line-oriented, human-editable description of one
simulation (channel constants, node/edge tables, eavesdropper model,
attack schedule, trial controls).

Grammar (version 1), sections in any order, full-line ``#`` comments:

    version 1

    [channel]        key value pairs:
        frequency_hz, bandwidth_hz, noise_dbm,
        pathloss_exponent (default 2), gamma_per_m (default 0)

    [simulation]     key value pairs:
        trials, seed, reauth_success_prob (default 1.0),
        silence_ticks (default 1), fading_scale (default 0.0),
        cell_radius_m (default 250)

    [eavesdropper]
        mode constant|derived (default constant)
        constant_gbps X          (constant mode)
        distance_m X             (derived mode)
        link SRC DST GBPS        (per-link override, constant mode)

    [nodes]          rows: ID KIND TX_DBM POWER_W MOBILE(yes|no)
    [edges]          rows: SRC DST DISTANCE_M DEPTHS(w1,w2,..|-)
    [attacks]        rows (optional section):
        fixed KIND TARGET INTENSITY [seed=N] [<constant>=X ...]
        random kinds=K1,K2,.. min_bias=F intensity=LO:HI [<constant>=X ...]

Overridable attack constants: halfduplex_factor, dos_factor,
handover_penalty_db, bws_knee_m, uav_gain. Unknown sections and keys are
errors. Parsing either returns a fully validated Scenario or raises one
ScenarioError aggregating every issue found, each with its line number.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .attack import AttackConstants, AttackKind, AttackSpec
from .channel import (
    ChannelParams,
    capacity_bps,
    free_space_pathloss_db,
    snr_linear,
)
from .topology import Edge, Node, NodeKind

FORMAT_VERSION = 1

_REQUIRED_SECTIONS = ("channel", "simulation", "eavesdropper", "nodes", "edges")
_ALL_SECTIONS = _REQUIRED_SECTIONS + ("attacks",)
_CONSTANT_KEYS = tuple(f.name for f in dataclasses.fields(AttackConstants))


@dataclass(frozen=True)
class Issue:
    """One parse or validation problem, pinned to a line when known."""

    kind: str  # "syntax" | "validation" | "unknown-key"
    field: str
    message: str
    line: Optional[int] = None

    def __str__(self) -> str:
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}[{self.kind}] {self.field}: {self.message}"


class ScenarioError(Exception):
    """Carries every issue found while parsing or validating a scenario."""

    def __init__(self, issues: Sequence[Issue]):
        self.issues = tuple(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


@dataclass(frozen=True)
class EavesdropperSpec:
    """How each link's eavesdropper capacity is obtained."""

    mode: str = "constant"
    constant_gbps: float = 0.0
    distance_m: Optional[float] = None
    per_link: tuple[tuple[str, str, float], ...] = ()

    def capacity_for(
        self, params: ChannelParams, edge: Edge, tx_power_dbm: float
    ) -> float:
        if self.mode == "derived":
            loss = free_space_pathloss_db(params, self.distance_m)
            return capacity_bps(params, snr_linear(params, tx_power_dbm, loss))
        for src, dst, gbps in self.per_link:
            if (src, dst) == edge.key:
                return gbps * 1e9
        return self.constant_gbps * 1e9


@dataclass(frozen=True)
class RandomAttackTemplate:
    """Per-trial attack draw: kind pool, target bias, intensity range.

    ``min_bias`` is the probability that the drawn target is the
    minimum-capacity node of a random layer (the screening pick);
    otherwise any non-BS node is drawn uniformly.
    """

    kinds: tuple[AttackKind, ...]
    min_bias: float = 1.0
    intensity_lo: float = 0.5
    intensity_hi: float = 1.0
    constants: AttackConstants = AttackConstants()


@dataclass(frozen=True)
class Scenario:
    channel: ChannelParams
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    eavesdropper: EavesdropperSpec
    attacks: tuple[AttackSpec, ...] = ()
    random_attacks: tuple[RandomAttackTemplate, ...] = ()
    trials: int = 1
    seed: int = 0
    reauth_success_prob: float = 1.0
    silence_ticks: int = 1
    fading_scale: float = 0.0
    cell_radius_m: float = 250.0


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.issues: list[Issue] = []
        self.kv: dict[str, dict[str, tuple[int, str]]] = {}
        self.rows: dict[str, list[tuple[int, list[str]]]] = {}

    def issue(self, kind: str, field_name: str, message: str, line: Optional[int] = None):
        self.issues.append(Issue(kind=kind, field=field_name, message=message, line=line))

    # -- structural pass ---------------------------------------------------

    def split(self) -> None:
        section: Optional[str] = None
        version_seen = False
        for lineno, raw in enumerate(self.text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not version_seen:
                parts = line.split()
                if parts[0] != "version" or len(parts) != 2 or parts[1] != str(FORMAT_VERSION):
                    self.issue(
                        "syntax",
                        "version",
                        f"first directive must be 'version {FORMAT_VERSION}', got {line!r}",
                        lineno,
                    )
                version_seen = True
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1].strip()
                if name not in _ALL_SECTIONS:
                    self.issue("unknown-key", name, "unknown section", lineno)
                    section = None
                else:
                    section = name
                    self.kv.setdefault(name, {})
                    self.rows.setdefault(name, [])
                continue
            if section is None:
                self.issue("syntax", "-", f"content outside any known section: {line!r}", lineno)
                continue
            if section in ("nodes", "edges", "attacks"):
                self.rows[section].append((lineno, line.split()))
            elif section == "eavesdropper" and line.split()[0] == "link":
                self.rows.setdefault("eavesdropper", []).append((lineno, line.split()))
            else:
                parts = line.split(None, 1)
                if len(parts) != 2:
                    self.issue("syntax", parts[0], "expected 'key value'", lineno)
                    continue
                key, value = parts
                if key in self.kv[section]:
                    self.issue("validation", key, "duplicate key", lineno)
                self.kv[section][key] = (lineno, value)
        if not version_seen:
            self.issue("syntax", "version", "empty document", None)
        for name in _REQUIRED_SECTIONS:
            if name not in self.kv and name not in self.rows:
                self.issue("validation", name, "required section missing", None)

    # -- typed readers ------------------------------------------------------

    def take(
        self,
        section: str,
        key: str,
        conv,
        default=None,
        required: bool = False,
    ):
        entry = self.kv.get(section, {}).pop(key, None)
        if entry is None:
            if required:
                self.issue("validation", f"{section}.{key}", "required key missing")
            return default
        lineno, value = entry
        try:
            return conv(value)
        except (ValueError, TypeError):
            self.issue("validation", f"{section}.{key}", f"bad value {value!r}", lineno)
            return default

    def leftover_keys(self, section: str) -> None:
        for key, (lineno, _) in self.kv.get(section, {}).items():
            self.issue("unknown-key", f"{section}.{key}", "unknown key", lineno)

    # -- section builders ----------------------------------------------------

    def build_channel(self) -> Optional[ChannelParams]:
        freq = self.take("channel", "frequency_hz", float, required=True)
        bw = self.take("channel", "bandwidth_hz", float, required=True)
        noise = self.take("channel", "noise_dbm", float, required=True)
        alpha = self.take("channel", "pathloss_exponent", float, default=2.0)
        gamma = self.take("channel", "gamma_per_m", float, default=0.0)
        self.leftover_keys("channel")
        if None in (freq, bw, noise, alpha, gamma):
            return None
        try:
            return ChannelParams(freq, bw, noise, alpha, gamma)
        except ValueError as exc:
            self.issue("validation", "channel", str(exc))
            return None

    def build_nodes(self) -> list[Node]:
        nodes: list[Node] = []
        for lineno, tokens in self.rows.get("nodes", []):
            if len(tokens) != 5:
                self.issue(
                    "syntax",
                    "nodes",
                    f"expected 'ID KIND TX_DBM POWER_W MOBILE', got {len(tokens)} fields",
                    lineno,
                )
                continue
            nid, kind_s, tx_s, pw_s, mobile_s = tokens
            try:
                kind = NodeKind(kind_s)
            except ValueError:
                self.issue("validation", f"nodes.{nid}.kind", f"unknown kind {kind_s!r}", lineno)
                continue
            if mobile_s not in ("yes", "no"):
                self.issue("validation", f"nodes.{nid}.mobile", "expected yes or no", lineno)
                continue
            try:
                node = Node(nid, kind, float(tx_s), float(pw_s), mobile_s == "yes")
            except ValueError as exc:
                self.issue("validation", f"nodes.{nid}", str(exc), lineno)
                continue
            if not 13.0 <= node.tx_power_dbm <= 30.0:
                self.issue(
                    "validation",
                    f"nodes.{nid}.tx_power_dbm",
                    f"must be within [13, 30] dBm, got {node.tx_power_dbm}",
                    lineno,
                )
                continue
            nodes.append(node)
        return nodes

    def build_edges(self) -> list[Edge]:
        edges: list[Edge] = []
        for lineno, tokens in self.rows.get("edges", []):
            if len(tokens) != 4:
                self.issue(
                    "syntax",
                    "edges",
                    f"expected 'SRC DST DISTANCE_M DEPTHS', got {len(tokens)} fields",
                    lineno,
                )
                continue
            src, dst, dist_s, depths_s = tokens
            try:
                depths = (
                    ()
                    if depths_s == "-"
                    else tuple(float(w) for w in depths_s.split(","))
                )
                edges.append(Edge(src, dst, float(dist_s), depths))
            except ValueError as exc:
                self.issue("validation", f"edges.{src}->{dst}", str(exc), lineno)
        return edges

    def build_eavesdropper(self) -> Optional[EavesdropperSpec]:
        mode = self.take("eavesdropper", "mode", str, default="constant")
        if mode not in (None, "constant", "derived"):
            self.issue("validation", "eavesdropper.mode", f"unknown mode {mode!r}")
            mode = None
        constant = self.take(
            "eavesdropper", "constant_gbps", float, required=(mode == "constant")
        )
        distance = self.take(
            "eavesdropper", "distance_m", float, required=(mode == "derived")
        )
        self.leftover_keys("eavesdropper")
        per_link: list[tuple[str, str, float]] = []
        for lineno, tokens in self.rows.get("eavesdropper", []):
            if len(tokens) != 4:
                self.issue(
                    "syntax", "eavesdropper.link", "expected 'link SRC DST GBPS'", lineno
                )
                continue
            try:
                per_link.append((tokens[1], tokens[2], float(tokens[3])))
            except ValueError:
                self.issue(
                    "validation", "eavesdropper.link", f"bad rate {tokens[3]!r}", lineno
                )
        if mode is None:
            return None
        if mode == "constant" and constant is None:
            return None
        if mode == "derived" and distance is None:
            return None
        if constant is not None and constant < 0:
            self.issue("validation", "eavesdropper.constant_gbps", "must be >= 0")
            return None
        if distance is not None and distance <= 0:
            self.issue("validation", "eavesdropper.distance_m", "must be > 0")
            return None
        return EavesdropperSpec(
            mode=mode,
            constant_gbps=constant if constant is not None else 0.0,
            distance_m=distance,
            per_link=tuple(per_link),
        )

    def _parse_overrides(self, pairs, lineno: int, field_name: str):
        seed = None
        overrides: dict[str, float] = {}
        ok = True
        for pair in pairs:
            if "=" not in pair:
                self.issue("syntax", field_name, f"expected key=value, got {pair!r}", lineno)
                ok = False
                continue
            key, value = pair.split("=", 1)
            if key == "seed":
                try:
                    seed = int(value)
                except ValueError:
                    self.issue("validation", f"{field_name}.seed", f"bad value {value!r}", lineno)
                    ok = False
            elif key in _CONSTANT_KEYS:
                try:
                    overrides[key] = float(value)
                except ValueError:
                    self.issue("validation", f"{field_name}.{key}", f"bad value {value!r}", lineno)
                    ok = False
            else:
                self.issue("unknown-key", f"{field_name}.{key}", "unknown key", lineno)
                ok = False
        return seed, overrides, ok

    def build_attacks(
        self,
    ) -> tuple[list[AttackSpec], list[RandomAttackTemplate]]:
        fixed: list[AttackSpec] = []
        templates: list[RandomAttackTemplate] = []
        for lineno, tokens in self.rows.get("attacks", []):
            if tokens[0] == "fixed":
                if len(tokens) < 4:
                    self.issue(
                        "syntax", "attacks", "expected 'fixed KIND TARGET INTENSITY'", lineno
                    )
                    continue
                try:
                    kind = AttackKind(tokens[1])
                except ValueError:
                    self.issue(
                        "validation", "attacks.kind", f"unknown kind {tokens[1]!r}", lineno
                    )
                    continue
                seed, overrides, ok = self._parse_overrides(tokens[4:], lineno, "attacks")
                if not ok:
                    continue
                try:
                    fixed.append(
                        AttackSpec(
                            kind=kind,
                            target=tokens[2],
                            intensity=float(tokens[3]),
                            seed=seed if seed is not None else 0,
                            constants=AttackConstants(**overrides),
                        )
                    )
                except ValueError as exc:
                    self.issue("validation", "attacks", str(exc), lineno)
            elif tokens[0] == "random":
                kinds: tuple[AttackKind, ...] = ()
                min_bias = 1.0
                lo, hi = 0.5, 1.0
                overrides: dict[str, float] = {}
                ok = True
                for pair in tokens[1:]:
                    if "=" not in pair:
                        self.issue("syntax", "attacks.random", f"expected key=value, got {pair!r}", lineno)
                        ok = False
                        continue
                    key, value = pair.split("=", 1)
                    if key == "kinds":
                        try:
                            kinds = tuple(AttackKind(k) for k in value.split(","))
                        except ValueError:
                            self.issue("validation", "attacks.random.kinds", f"bad kinds {value!r}", lineno)
                            ok = False
                    elif key == "min_bias":
                        try:
                            min_bias = float(value)
                        except ValueError:
                            self.issue("validation", "attacks.random.min_bias", f"bad value {value!r}", lineno)
                            ok = False
                    elif key == "intensity":
                        try:
                            lo_s, hi_s = value.split(":")
                            lo, hi = float(lo_s), float(hi_s)
                        except ValueError:
                            self.issue("validation", "attacks.random.intensity", f"expected LO:HI, got {value!r}", lineno)
                            ok = False
                    elif key in _CONSTANT_KEYS:
                        try:
                            overrides[key] = float(value)
                        except ValueError:
                            self.issue("validation", f"attacks.random.{key}", f"bad value {value!r}", lineno)
                            ok = False
                    else:
                        self.issue("unknown-key", f"attacks.random.{key}", "unknown key", lineno)
                        ok = False
                if not ok:
                    continue
                if not kinds:
                    self.issue("validation", "attacks.random.kinds", "at least one kind required", lineno)
                    continue
                if not 0.0 <= min_bias <= 1.0:
                    self.issue("validation", "attacks.random.min_bias", "must be in [0, 1]", lineno)
                    continue
                if not 0.0 <= lo <= hi <= 1.0:
                    self.issue("validation", "attacks.random.intensity", "need 0 <= LO <= HI <= 1", lineno)
                    continue
                templates.append(
                    RandomAttackTemplate(
                        kinds=kinds,
                        min_bias=min_bias,
                        intensity_lo=lo,
                        intensity_hi=hi,
                        constants=AttackConstants(**overrides),
                    )
                )
            else:
                self.issue(
                    "syntax", "attacks", f"rows must start with 'fixed' or 'random', got {tokens[0]!r}", lineno
                )
        return fixed, templates


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text; raises ScenarioError on any issue."""
    p = _Parser(text)
    p.split()

    channel = p.build_channel()
    trials = p.take("simulation", "trials", int, required=True)
    seed = p.take("simulation", "seed", int, required=True)
    reauth = p.take("simulation", "reauth_success_prob", float, default=1.0)
    silence = p.take("simulation", "silence_ticks", int, default=1)
    fading = p.take("simulation", "fading_scale", float, default=0.0)
    radius = p.take("simulation", "cell_radius_m", float, default=250.0)
    p.leftover_keys("simulation")

    nodes = p.build_nodes()
    edges = p.build_edges()
    eaves = p.build_eavesdropper()
    attacks, templates = p.build_attacks()

    # Cross-field validation once the pieces exist.
    if trials is not None and trials < 1:
        p.issue("validation", "simulation.trials", f"must be >= 1, got {trials}")
    if reauth is not None and not 0.0 <= reauth <= 1.0:
        p.issue("validation", "simulation.reauth_success_prob", "must be in [0, 1]")
    if silence is not None and silence < 1:
        p.issue("validation", "simulation.silence_ticks", "must be >= 1")
    if fading is not None and not 0.0 <= fading <= 1.0:
        p.issue("validation", "simulation.fading_scale", "must be in [0, 1]")
    if radius is not None and radius <= 0:
        p.issue("validation", "simulation.cell_radius_m", "must be > 0")

    node_ids = {n.id for n in nodes}
    bs_ids = {n.id for n in nodes if n.kind is NodeKind.BS}
    if radius is not None:
        for e in edges:
            if e.distance_m > radius:
                p.issue(
                    "validation",
                    f"edges.{e.src}->{e.dst}.distance_m",
                    f"{e.distance_m} m exceeds the cell radius {radius} m",
                )
    for spec in attacks:
        if spec.target not in node_ids:
            p.issue("validation", "attacks.target", f"target {spec.target!r} is not a declared node")
        elif spec.target in bs_ids:
            p.issue("validation", "attacks.target", "target is not allowed to be the BS")
    if eaves is not None:
        known_edges = {e.key for e in edges}
        for src, dst, _ in eaves.per_link:
            if (src, dst) not in known_edges:
                p.issue(
                    "validation",
                    "eavesdropper.link",
                    f"override names unknown edge {src}->{dst}",
                )

    if p.issues:
        raise ScenarioError(p.issues)
    return Scenario(
        channel=channel,
        nodes=tuple(sorted(nodes, key=lambda n: n.id)),
        edges=tuple(sorted(edges, key=lambda e: e.key)),
        eavesdropper=eaves,
        attacks=tuple(attacks),
        random_attacks=tuple(templates),
        trials=trials,
        seed=seed,
        reauth_success_prob=reauth,
        silence_ticks=silence,
        fading_scale=fading,
        cell_radius_m=radius,
    )


def _fmt(value: float) -> str:
    return repr(float(value))


def serialize_scenario(s: Scenario) -> str:
    """Canonical text for a scenario; parse(serialize(s)) == s."""
    lines = [f"version {FORMAT_VERSION}", ""]
    lines += [
        "[channel]",
        f"frequency_hz {_fmt(s.channel.frequency_hz)}",
        f"bandwidth_hz {_fmt(s.channel.bandwidth_hz)}",
        f"noise_dbm {_fmt(s.channel.noise_dbm)}",
        f"pathloss_exponent {_fmt(s.channel.pathloss_exponent)}",
        f"gamma_per_m {_fmt(s.channel.gamma_per_m)}",
        "",
        "[simulation]",
        f"trials {s.trials}",
        f"seed {s.seed}",
        f"reauth_success_prob {_fmt(s.reauth_success_prob)}",
        f"silence_ticks {s.silence_ticks}",
        f"fading_scale {_fmt(s.fading_scale)}",
        f"cell_radius_m {_fmt(s.cell_radius_m)}",
        "",
        "[eavesdropper]",
        f"mode {s.eavesdropper.mode}",
    ]
    if s.eavesdropper.mode == "constant":
        lines.append(f"constant_gbps {_fmt(s.eavesdropper.constant_gbps)}")
    else:
        lines.append(f"distance_m {_fmt(s.eavesdropper.distance_m)}")
    for src, dst, gbps in s.eavesdropper.per_link:
        lines.append(f"link {src} {dst} {_fmt(gbps)}")
    lines += ["", "[nodes]"]
    for n in sorted(s.nodes, key=lambda n: n.id):
        lines.append(
            f"{n.id} {n.kind.value} {_fmt(n.tx_power_dbm)} "
            f"{_fmt(n.power_consumption_w)} {'yes' if n.mobile else 'no'}"
        )
    lines += ["", "[edges]"]
    for e in sorted(s.edges, key=lambda e: e.key):
        depths = ",".join(_fmt(w) for w in e.entity_depths_m) or "-"
        lines.append(f"{e.src} {e.dst} {_fmt(e.distance_m)} {depths}")
    if s.attacks or s.random_attacks:
        lines += ["", "[attacks]"]
        default = AttackConstants()
        for a in s.attacks:
            parts = [f"fixed {a.kind.value} {a.target} {_fmt(a.intensity)}"]
            if a.seed:
                parts.append(f"seed={a.seed}")
            for key in _CONSTANT_KEYS:
                if getattr(a.constants, key) != getattr(default, key):
                    parts.append(f"{key}={_fmt(getattr(a.constants, key))}")
            lines.append(" ".join(parts))
        for t in s.random_attacks:
            parts = [
                "random",
                "kinds=" + ",".join(k.value for k in t.kinds),
                f"min_bias={_fmt(t.min_bias)}",
                f"intensity={_fmt(t.intensity_lo)}:{_fmt(t.intensity_hi)}",
            ]
            for key in _CONSTANT_KEYS:
                if getattr(t.constants, key) != getattr(default, key):
                    parts.append(f"{key}={_fmt(getattr(t.constants, key))}")
            lines.append(" ".join(parts))
    lines.append("")
    return "\n".join(lines)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def fixture_path(name: str) -> Path:
    """Path of a fixture shipped inside the package."""
    return Path(__file__).resolve().parent / "fixtures" / name
