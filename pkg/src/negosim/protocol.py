"""Bilateral alternating-offers state machine.

Each round one party acts: it either opens with an offer or responds to the
standing offer. A response is withdraw (past its deadline), accept (the
incoming offer beats the counter it was about to send) or a counteroffer.
On top of the response function sit the early-termination rules: an incoming
offer that picks one of the receiver's zero-rated options, a strictly
diverging utility trend, or a predictor verdict that the thread cannot
become profitable before the deadline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .domain import (
    InvalidOfferError,
    NegotiationError,
    OfferVector,
    PreferenceProfile,
    total_profit,
)
from .tactics import Tactic

DEFAULT_DIVERGENCE_WINDOW = 3


class SetupError(NegotiationError):
    """The two parties cannot negotiate (e.g. incompatible issue alphabets)."""


class ProtocolViolationError(NegotiationError):
    """A malformed offer entered the session; treated as withdrawal by the violator."""

    def __init__(self, violator: str, message: str):
        super().__init__(message)
        self.violator = violator


@dataclass(frozen=True)
class TraceRow:
    round: int
    proposer: str  # the acting party
    offer: OfferVector
    utility_proposer: float  # offer's value under the acting party's profile
    utility_receiver: float  # offer's value under the other party's profile
    action: str  # offer | accept | withdraw | terminate-<reason>


class SessionTrace:
    """Append-only per-round record of offers and actions."""

    def __init__(self) -> None:
        self._rows: list[TraceRow] = []
        self.metadata: dict = {"fallbacks": []}

    @property
    def rows(self) -> tuple[TraceRow, ...]:
        return tuple(self._rows)

    def append(self, row: TraceRow) -> None:
        if row.round != len(self._rows):
            raise NegotiationError(
                f"trace rounds must be contiguous: got {row.round}, expected {len(self._rows)}"
            )
        self._rows.append(row)

    def note_fallback(self, agent_id: str, reason: str) -> None:
        self.metadata["fallbacks"].append((agent_id, len(self._rows), reason))

    def offers_from(self, agent_id: str) -> list[TraceRow]:
        return [r for r in self._rows if r.proposer == agent_id and r.action == "offer"]

    def offers_to(self, agent_id: str) -> list[TraceRow]:
        return [r for r in self._rows if r.proposer != agent_id and r.action == "offer"]

    def __len__(self) -> int:
        return len(self._rows)

    def __iter__(self) -> Iterator[TraceRow]:
        return iter(self._rows)


@dataclass
class NegotiationState:
    round: int = 0
    phase: str = "awaiting-offer"  # awaiting-offer | awaiting-response | ended
    history: SessionTrace = field(default_factory=SessionTrace)
    active_party: str = ""


@dataclass(frozen=True)
class Withdraw:
    party: str


@dataclass(frozen=True)
class Accept:
    offer: OfferVector  # the opponent's last offer, unchanged


@dataclass(frozen=True)
class Offer:
    counter: OfferVector


Response = Withdraw | Accept | Offer


@dataclass(frozen=True)
class SessionOutcome:
    kind: str  # agreement | withdrawal | deadline-expiry | early-termination
    round: int
    offer: OfferVector | None = None
    party: str | None = None  # who withdrew / terminated
    reason: str | None = None  # early-termination reason
    utilities: Mapping[str, float] = field(default_factory=dict)


def respond(
    profile: PreferenceProfile,
    state: NegotiationState,
    incoming: OfferVector,
    planned_counter: OfferVector,
) -> Response:
    """The three-way response function; branches are exclusive and exhaustive.

    Withdraw once past the deadline; accept only on strict utility dominance
    of the incoming offer over the planned counter; otherwise counteroffer.
    """
    if state.round > profile.deadline:
        return Withdraw(party=profile.agent_id)
    try:
        incoming_value = total_profit(profile, incoming)
        planned_value = total_profit(profile, planned_counter)
    except InvalidOfferError as exc:
        violator = incoming.proposer or "opponent"
        raise ProtocolViolationError(violator, f"malformed offer: {exc}") from exc
    if incoming_value > planned_value:
        return Accept(offer=incoming)
    return Offer(counter=planned_counter)


def check_termination(
    trace: SessionTrace,
    profile: PreferenceProfile,
    window: int = DEFAULT_DIVERGENCE_WINDOW,
) -> str | None:
    """Early-termination rules, judged from the receiving agent's standpoint.

    Returns ``"threshold"`` when the latest incoming offer picks an option
    the agent rates zero, ``"diverging"`` when the last ``window`` incoming
    offers are strictly losing value, else ``None`` (continue).
    """
    incoming = trace.offers_to(profile.agent_id)
    if not incoming:
        return None
    latest = incoming[-1].offer
    for issue in profile.issues:
        if latest.choices[issue.name] in issue.zero_rated_labels:
            return "threshold"
    if window >= 1 and len(incoming) >= window:
        utilities = [total_profit(profile, r.offer) for r in incoming[-window:]]
        if all(b < a for a, b in zip(utilities, utilities[1:])):
            return "diverging"
    return None


def _check_alphabets(a: PreferenceProfile, b: PreferenceProfile) -> None:
    menu_a = {issue.name: set(issue.labels()) for issue in a.issues}
    menu_b = {issue.name: set(issue.labels()) for issue in b.issues}
    if menu_a != menu_b:
        raise SetupError(
            f"profiles {a.agent_id!r} and {b.agent_id!r} do not share an issue/option alphabet"
        )


def run_session(
    profile_a: PreferenceProfile,
    profile_b: PreferenceProfile,
    tactic_a: Tactic,
    tactic_b: Tactic,
    predictor_config=None,
    max_rounds: int = 100,
    seed: int = 0,
    opener: str | None = None,
    divergence_window: int = DEFAULT_DIVERGENCE_WINDOW,
) -> tuple[SessionOutcome, SessionTrace]:
    """Run one bilateral session to completion; deterministic given the seed.

    ``predictor_config`` (a :class:`negosim.prediction.PredictorConfig` or a
    mapping ``{agent_id: config}``) arms per-agent behavior prediction.
    Check order on a responding turn: deadline withdrawal, threshold /
    divergence termination, predictor advice, then accept-or-counter.
    """
    from .prediction import PredictorState, advise  # runtime import, avoids a cycle

    _check_alphabets(profile_a, profile_b)
    profiles = {profile_a.agent_id: profile_a, profile_b.agent_id: profile_b}
    tactics = {profile_a.agent_id: tactic_a, profile_b.agent_id: tactic_b}
    if len(profiles) != 2:
        raise SetupError("the two parties must have distinct agent ids")
    if opener is None:
        opener = profile_a.agent_id
    if opener not in profiles:
        raise SetupError(f"opener {opener!r} is not one of the parties")

    predictors: dict[str, PredictorState | None] = {}
    for agent_id in profiles:
        config = None
        if predictor_config is not None:
            if isinstance(predictor_config, Mapping):
                config = predictor_config.get(agent_id)
            else:
                config = predictor_config
        if config is not None and config.enabled:
            predictors[agent_id] = PredictorState(config, agent_id, seed=seed)
        else:
            predictors[agent_id] = None

    order = list(profiles)
    if order[0] != opener:
        order.reverse()

    trace = SessionTrace()
    state = NegotiationState(history=trace)
    incoming: OfferVector | None = None
    outcome: SessionOutcome | None = None
    round_no = 0
    while outcome is None:
        if round_no >= max_rounds:
            outcome = SessionOutcome(kind="deadline-expiry", round=round_no)
            break
        me = order[round_no % 2]
        other = order[(round_no + 1) % 2]
        profile = profiles[me]
        state.round = round_no
        state.active_party = me
        state.phase = "awaiting-offer" if incoming is None else "awaiting-response"

        try:
            planned = tactics[me].propose(profile, trace, round_no)
            # a malformed counter is a protocol violation by its proposer
            total_profit(profile, planned)
            total_profit(profiles[other], planned)
        except InvalidOfferError:
            outcome = SessionOutcome(kind="withdrawal", round=round_no, party=me)
            break

        if incoming is None:
            trace.append(
                TraceRow(
                    round=round_no,
                    proposer=me,
                    offer=planned,
                    utility_proposer=total_profit(profile, planned),
                    utility_receiver=total_profit(profiles[other], planned),
                    action="offer",
                )
            )
            incoming = planned
            round_no += 1
            continue

        try:
            response = respond(profile, state, incoming, planned)
        except ProtocolViolationError as exc:
            outcome = SessionOutcome(kind="withdrawal", round=round_no, party=exc.violator)
            break

        def terminal_row(action: str) -> None:
            trace.append(
                TraceRow(
                    round=round_no,
                    proposer=me,
                    offer=incoming,
                    utility_proposer=total_profit(profile, incoming),
                    utility_receiver=total_profit(profiles[other], incoming),
                    action=action,
                )
            )

        if isinstance(response, Withdraw):
            terminal_row("withdraw")
            outcome = SessionOutcome(kind="withdrawal", round=round_no, party=me)
            break

        reason = check_termination(trace, profile, divergence_window)
        if reason is not None:
            terminal_row(f"terminate-{reason}")
            outcome = SessionOutcome(
                kind="early-termination", round=round_no, party=me, reason=reason
            )
            break

        predictor = predictors[me]
        if predictor is not None:
            advice = advise(predictor, trace, profile)
            if advice.kind == "terminate-unprofitable":
                terminal_row("terminate-unprofitable")
                outcome = SessionOutcome(
                    kind="early-termination", round=round_no, party=me, reason="unprofitable"
                )
                break

        if isinstance(response, Accept):
            terminal_row("accept")
            outcome = SessionOutcome(
                kind="agreement",
                round=round_no,
                offer=response.offer,
                utilities={
                    agent: total_profit(prof, response.offer)
                    for agent, prof in profiles.items()
                },
            )
            break

        trace.append(
            TraceRow(
                round=round_no,
                proposer=me,
                offer=response.counter,
                utility_proposer=total_profit(profile, response.counter),
                utility_receiver=total_profit(profiles[other], response.counter),
                action="offer",
            )
        )
        incoming = response.counter
        round_no += 1

    state.phase = "ended"
    return outcome, trace
