"""Scenario loading, batch execution and trace/statistics emission.

Scenario files are YAML with a versioned schema: a shared issue alphabet,
per-agent private ratings/weights/tactics, and an optional one-to-many
coordination section. Batches are deterministic: session ``i`` derives its
seed as ``scenario seed + i``, and output files are byte-stable.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

import yaml

from .coordination import (
    ContractChoice,
    CoordinationPlan,
    PlanError,
    SubBuyerResult,
    run_one_to_many,
)
from .domain import (
    Issue,
    IssueOption,
    InvalidProfileError,
    NegotiationError,
    PreferenceProfile,
    make_profile,
    validate_profile,
)
from .prediction import PredictorConfig
from .protocol import SessionOutcome, SessionTrace, run_session
from .tactics import ParameterError, TacticSpec

SCHEMA_VERSION = 1
MODES = ("bilateral", "one-to-many")


class ScenarioError(NegotiationError):
    """A scenario file failed to parse or validate; carries every violation."""

    def __init__(self, path: str, violations: Sequence[str]):
        self.violations = list(violations)
        detail = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"invalid scenario {path!r}:\n{detail}")


@dataclass(frozen=True)
class AgentSpec:
    id: str
    role: str
    profile: PreferenceProfile
    tactic: TacticSpec
    predictor: PredictorConfig


@dataclass(frozen=True)
class Scenario:
    seed: int
    mode: str
    opener: str
    max_rounds: int
    agents: tuple[AgentSpec, ...]
    divergence_window: int = 3
    plan: CoordinationPlan | None = None
    buyer_id: str | None = None
    supplier_ids: tuple[str, ...] = ()

    def agent(self, agent_id: str) -> AgentSpec:
        for spec in self.agents:
            if spec.id == agent_id:
                return spec
        raise ScenarioError("<scenario>", [f"unknown agent {agent_id!r}"])

    def with_prediction(self, enabled: bool) -> "Scenario":
        agents = tuple(
            replace(spec, predictor=replace(spec.predictor, enabled=enabled))
            for spec in self.agents
        )
        return replace(self, agents=agents)


def bundled_scenario(name: str) -> Path:
    """Path of a scenario file shipped with the package."""
    return Path(resources.files("negosim") / "scenarios" / name)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(str(path), ["file does not exist"])
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(str(path), [f"YAML parse error: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ScenarioError(str(path), ["top level must be a mapping"])

    violations: list[str] = []
    if raw.get("schema_version") != SCHEMA_VERSION:
        violations.append(
            f"schema_version must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}"
        )
    seed = raw.get("seed")
    if not isinstance(seed, int):
        violations.append("seed is required and must be an integer (determinism contract)")
    mode = raw.get("mode", "bilateral")
    if mode not in MODES:
        violations.append(f"mode must be one of {MODES}, got {mode!r}")
    max_rounds = raw.get("max_rounds", 100)
    if not isinstance(max_rounds, int) or max_rounds < 0:
        violations.append(f"max_rounds must be a non-negative integer, got {max_rounds!r}")
    divergence_window = raw.get("divergence_window", 3)

    alphabet: list[tuple[str, tuple[str, ...]]] = []
    issues_raw = raw.get("issues")
    if not isinstance(issues_raw, list) or not issues_raw:
        violations.append("issues: a non-empty list is required")
        issues_raw = []
    for entry in issues_raw:
        name = entry.get("name") if isinstance(entry, dict) else None
        options = entry.get("options") if isinstance(entry, dict) else None
        if not name or not isinstance(options, list) or not options:
            violations.append(f"issue entry {entry!r} needs a name and a non-empty option list")
            continue
        alphabet.append((str(name), tuple(str(o) for o in options)))

    agents: list[AgentSpec] = []
    agents_raw = raw.get("agents")
    if not isinstance(agents_raw, list) or not agents_raw:
        violations.append("agents: a non-empty list is required")
        agents_raw = []
    for entry in agents_raw:
        spec = _load_agent(entry, alphabet, violations)
        if spec is not None:
            agents.append(spec)
    ids = [spec.id for spec in agents]
    if len(ids) != len(set(ids)):
        violations.append("agent ids must be unique")

    plan = None
    buyer_id = None
    supplier_ids: tuple[str, ...] = ()
    if mode == "bilateral":
        if len(agents_raw) != 2:
            violations.append(f"bilateral mode needs exactly 2 agents, got {len(agents_raw)}")
    else:
        coord = raw.get("coordination")
        if not isinstance(coord, dict):
            violations.append("one-to-many mode requires a coordination section")
        else:
            buyer_id = coord.get("buyer")
            supplier_ids = tuple(coord.get("suppliers", ()))
            if buyer_id not in ids:
                violations.append(f"coordination buyer {buyer_id!r} is not a declared agent")
            missing = [s for s in supplier_ids if s not in ids]
            if missing or not supplier_ids:
                violations.append(f"coordination suppliers invalid or empty (unknown: {missing})")
            try:
                plan = CoordinationPlan(
                    strategy=coord.get("strategy", ""),
                    theta=(
                        float(coord["theta"]) if coord.get("theta") is not None else None
                    ),
                )
            except PlanError as exc:
                violations.append(str(exc))

    opener = raw.get("opener", ids[0] if ids else None)
    if ids and opener not in ids:
        violations.append(f"opener {opener!r} is not a declared agent")

    if violations:
        raise ScenarioError(str(path), violations)
    return Scenario(
        seed=seed,
        mode=mode,
        opener=opener,
        max_rounds=max_rounds,
        agents=tuple(agents),
        divergence_window=divergence_window,
        plan=plan,
        buyer_id=buyer_id,
        supplier_ids=supplier_ids,
    )


def _load_agent(entry, alphabet, violations) -> AgentSpec | None:
    if not isinstance(entry, dict) or "id" not in entry:
        violations.append(f"agent entry {entry!r} needs an id")
        return None
    agent_id = str(entry["id"])
    ratings = entry.get("ratings", {})
    issues = []
    for name, labels in alphabet:
        issue_ratings = ratings.get(name)
        if not isinstance(issue_ratings, dict):
            violations.append(f"agent {agent_id!r}: missing ratings for issue {name!r}")
            continue
        extra = set(issue_ratings) - set(labels)
        if extra:
            violations.append(
                f"agent {agent_id!r}: ratings for unknown options {sorted(extra)} of issue {name!r}"
            )
        options = []
        for label in labels:
            if label not in issue_ratings:
                violations.append(
                    f"agent {agent_id!r}: no rating for option {label!r} of issue {name!r}"
                )
                continue
            options.append(IssueOption(label=label, rating=float(issue_ratings[label])))
        issues.append(Issue(name=name, options=tuple(options)))
    try:
        profile = make_profile(
            agent_id=agent_id,
            issues=issues,
            weights={str(k): float(v) for k, v in entry.get("weights", {}).items()},
            deadline=int(entry.get("deadline", 0)),
            reservation_utility=(
                float(entry["reservation_utility"])
                if entry.get("reservation_utility") is not None
                else None
            ),
        )
    except InvalidProfileError as exc:
        violations.append(str(exc))
        return None
    for problem in validate_profile(profile):
        violations.append(f"agent {agent_id!r}: {problem}")
    try:
        tactic = TacticSpec.from_dict(entry.get("tactic", {"family": "time-dependent"}))
        tactic.build()  # fail fast on bad parameters
    except (ParameterError, KeyError, TypeError, ValueError) as exc:
        violations.append(f"agent {agent_id!r}: bad tactic spec ({exc})")
        tactic = TacticSpec(family="time-dependent")
    predictor = PredictorConfig.from_dict(entry.get("predictor"))
    return AgentSpec(
        id=agent_id,
        role=str(entry.get("role", "")),
        profile=profile,
        tactic=tactic,
        predictor=predictor,
    )


@dataclass(frozen=True)
class SummaryStats:
    sessions: int
    agreements: int
    agreement_rate: float
    mean_rounds: float
    mean_utility: dict[str, float]
    early_terminations: int
    breakdowns: int

    def to_dict(self) -> dict:
        return {
            "sessions": self.sessions,
            "agreements": self.agreements,
            "agreement_rate": self.agreement_rate,
            "mean_rounds": self.mean_rounds,
            "mean_utility": dict(sorted(self.mean_utility.items())),
            "early_terminations": self.early_terminations,
            "breakdowns": self.breakdowns,
        }


@dataclass(frozen=True)
class SessionRecord:
    index: int
    outcome: SessionOutcome
    traces: tuple[tuple[str, SessionTrace], ...]  # (file stem, trace)
    contract: ContractChoice | None = None
    thread_results: tuple[SubBuyerResult, ...] = ()


@dataclass(frozen=True)
class BatchResult:
    stats: SummaryStats
    records: tuple[SessionRecord, ...]


def _run_bilateral(scenario: Scenario, index: int) -> SessionRecord:
    a, b = scenario.agents
    outcome, trace = run_session(
        a.profile,
        b.profile,
        a.tactic.build(),
        b.tactic.build(),
        predictor_config={a.id: a.predictor, b.id: b.predictor},
        max_rounds=scenario.max_rounds,
        seed=scenario.seed + index,
        opener=scenario.opener,
        divergence_window=scenario.divergence_window,
    )
    return SessionRecord(
        index=index, outcome=outcome, traces=((f"session_{index:04d}", trace),)
    )


def _run_one_to_many(scenario: Scenario, index: int) -> SessionRecord:
    buyer = scenario.agent(scenario.buyer_id)
    suppliers = [scenario.agent(s) for s in scenario.supplier_ids]
    choice, results, traces = run_one_to_many(
        buyer.profile,
        buyer.tactic.build,
        [(s.profile, s.tactic.build()) for s in suppliers],
        scenario.plan,
        max_rounds=scenario.max_rounds,
        seed=scenario.seed + index,
        predictor_config={spec.id: spec.predictor for spec in scenario.agents},
        opener=scenario.opener,
        divergence_window=scenario.divergence_window,
    )
    if choice is not None:
        decision_round = choice.round
        utilities = {buyer.id: choice.utility}
        winner = next(r for r in results if r.thread_id == choice.thread_id)
        utilities[choice.supplier_id] = winner.outcome.utilities[choice.supplier_id]
        outcome = SessionOutcome(kind="agreement", round=decision_round, utilities=utilities)
    else:
        decision_round = max(r.completion_round for r in results)
        if all(r.outcome.kind == "early-termination" for r in results):
            outcome = SessionOutcome(kind="early-termination", round=decision_round)
        else:
            outcome = SessionOutcome(kind="withdrawal", round=decision_round)
    named = tuple(
        (f"session_{index:04d}_thread_{r.thread_id}", trace)
        for r, trace in zip(results, traces)
    )
    return SessionRecord(
        index=index,
        outcome=outcome,
        traces=named,
        contract=choice,
        thread_results=tuple(results),
    )


def run_batch(scenario: Scenario, n_sessions: int) -> BatchResult:
    """Run ``n_sessions`` deterministic sessions and aggregate the results."""
    if n_sessions < 1:
        raise NegotiationError(f"n_sessions must be >= 1, got {n_sessions}")
    records = []
    for i in range(n_sessions):
        if scenario.mode == "bilateral":
            records.append(_run_bilateral(scenario, i))
        else:
            records.append(_run_one_to_many(scenario, i))
    return BatchResult(stats=_aggregate(scenario, records), records=tuple(records))


def _aggregate(scenario: Scenario, records: Sequence[SessionRecord]) -> SummaryStats:
    n = len(records)
    agreements = sum(1 for r in records if r.outcome.kind == "agreement")
    early = sum(1 for r in records if r.outcome.kind == "early-termination")
    breakdowns = n - agreements - early
    mean_rounds = sum(r.outcome.round for r in records) / n
    mean_utility = {}
    for spec in scenario.agents:
        total = sum(r.outcome.utilities.get(spec.id, 0.0) for r in records)
        mean_utility[spec.id] = total / n
    return SummaryStats(
        sessions=n,
        agreements=agreements,
        agreement_rate=agreements / n,
        mean_rounds=mean_rounds,
        mean_utility=mean_utility,
        early_terminations=early,
        breakdowns=breakdowns,
    )


def compare_prediction(scenario: Scenario, n_sessions: int) -> dict:
    """Paired runs over the same seeds: prediction disabled vs as configured."""
    off = run_batch(scenario.with_prediction(False), n_sessions)
    on = run_batch(scenario, n_sessions)
    deltas = {
        "agreement_rate": on.stats.agreement_rate - off.stats.agreement_rate,
        "mean_rounds": on.stats.mean_rounds - off.stats.mean_rounds,
        "mean_utility": {
            agent: on.stats.mean_utility[agent] - off.stats.mean_utility[agent]
            for agent in on.stats.mean_utility
        },
    }
    return {"off": off, "on": on, "deltas": deltas}


def trace_csv(trace: SessionTrace, session_index: int, issue_names: Sequence[str]) -> str:
    """Render one session trace as CSV: one row per executed round."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["session", "round", "proposer", *issue_names, "utility_self", "utility_opponent_observed", "action"]
    )
    for row in trace.rows:
        writer.writerow(
            [
                session_index,
                row.round,
                row.proposer,
                *[row.offer.choices[name] for name in issue_names],
                repr(row.utility_proposer),
                repr(row.utility_receiver),
                row.action,
            ]
        )
    return buffer.getvalue()


def _outcome_dict(record: SessionRecord) -> dict:
    out = {
        "session": record.index,
        "kind": record.outcome.kind,
        "round": record.outcome.round,
        "party": record.outcome.party,
        "reason": record.outcome.reason,
        "utilities": dict(sorted(record.outcome.utilities.items())),
    }
    if record.contract is not None:
        out["contract"] = {
            "thread": record.contract.thread_id,
            "supplier": record.contract.supplier_id,
            "round": record.contract.round,
            "utility": record.contract.utility,
        }
    return out


def write_outputs(
    scenario: Scenario, result: BatchResult, out_dir: str | Path, traces: bool = True
) -> list[Path]:
    """Write per-session trace CSVs plus stats.yaml; byte-stable across runs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    issue_names = [issue.name for issue in scenario.agents[0].profile.issues]
    written = []
    if traces:
        for record in result.records:
            for stem, trace in record.traces:
                path = out_dir / f"{stem}.csv"
                path.write_text(trace_csv(trace, record.index, issue_names))
                written.append(path)
    stats = {
        "schema_version": SCHEMA_VERSION,
        "seed": scenario.seed,
        "mode": scenario.mode,
        **result.stats.to_dict(),
        "outcomes": [_outcome_dict(record) for record in result.records],
    }
    stats_path = out_dir / "stats.yaml"
    stats_path.write_text(yaml.safe_dump(stats, sort_keys=True))
    written.append(stats_path)
    return written
