"""Cycle-accurate simulation of the midpoint-source receiver protocol.

The midpoint emits a photon pair every clock cycle; each receiver attempts
a local Bell-state measurement while "open", closes on a herald, announces
the success over a classical channel that takes ``n`` cycles end to end,
and reopens on a matching announcement (a confirmed pair), a mismatched
announcement, or a timeout ``n`` cycles after its own herald.

Two information models are implemented:

* ``LITERAL`` - receivers act only on local heralds and on messages that
  have physically arrived, so stale announcements can reset a receiver
  that is holding a fresh herald;
* ``OMNISCIENT`` - both sides reset together at the earlier deadline as if
  each instantly knew about the other's heralds, reproducing the Markov
  chain of :mod:`mpslink.markov` exactly.

The engine is event-driven: while nothing can happen, whole stretches of
idle cycles are skipped by sampling the next herald time from a geometric
law, which is distribution-exact because attempts are independent per
cycle.  All randomness is keyed by (seed, side, cycle, purpose) through
:mod:`mpslink.rng`, so runs are reproducible and the two modes can be
compared on paired seeds.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .optics import (
    BsmVariant,
    ChannelGeometry,
    DetectorModel,
    EncodingVariant,
    LossBudget,
    MidpointVariant,
    mps_side_loss,
)
from .rates import TimingParams
from .rng import u01

_NEVER = 2**62  # herald time used when the per-cycle herald probability is zero


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def other(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


class HeraldKind(Enum):
    TRUE_HERALD = "true"  # both photons detected
    FALSE_HERALD = "false"  # double click completed by at least one dark count


@dataclass(frozen=True)
class HeraldRecord:
    cycle: int
    side: Side
    kind: HeraldKind


@dataclass(frozen=True)
class Open:
    """Receiver attempting entanglement swapping every cycle."""


@dataclass(frozen=True)
class Closed:
    """Receiver holding a heralded spin, waiting for the remote announcement.

    ``true_herald`` is simulator-internal truth tracking, not protocol data.
    """

    bin: int
    deadline: int
    true_herald: bool = True


OPEN = Open()
ReceiverState = Open | Closed


@dataclass(frozen=True)
class ClassicalMessage:
    """Success announcement; arrives exactly one full channel delay after its bin."""

    origin: Side
    bin: int
    arrival: int
    true_herald: bool = True

    @classmethod
    def announce(cls, origin: Side, bin: int, n: int, true_herald: bool) -> "ClassicalMessage":
        return cls(origin=origin, bin=bin, arrival=bin + n, true_herald=true_herald)


@dataclass(frozen=True)
class StepEvent:
    kind: str  # herald | confirm | mismatch_reset | timeout | stale_ignored
    bin: int | None = None
    pair_true: bool | None = None


def receiver_step(
    state: ReceiverState,
    cycle: int,
    local_herald: HeraldRecord | None,
    inbox: Sequence[ClassicalMessage],
    n: int,
) -> tuple[ReceiverState, list[ClassicalMessage], list[StepEvent]]:
    """One controller transition; returns the state entering ``cycle + 1``.

    A closed receiver first checks arrived messages (a match confirms the
    pair, a mismatch discards the held spin), then its own deadline.  An
    open receiver ignores arrived messages and closes on a local herald,
    announcing the success bin to the other side.
    """
    inbox = list(inbox)
    # Message timing violations are simulator bugs, not runtime conditions.
    assert all(msg.arrival == cycle and msg.arrival - msg.bin == n for msg in inbox)
    assert len(inbox) <= 1, "one sender can have at most one announcement per cycle"

    events: list[StepEvent] = []
    outgoing: list[ClassicalMessage] = []

    if isinstance(state, Closed):
        assert local_herald is None, "a closed receiver cannot herald"
        assert state.deadline - state.bin == n
        if inbox:
            msg = inbox[0]
            if msg.bin == state.bin:
                events.append(
                    StepEvent(
                        "confirm",
                        bin=state.bin,
                        pair_true=state.true_herald and msg.true_herald,
                    )
                )
            else:
                events.append(StepEvent("mismatch_reset", bin=state.bin))
            return OPEN, outgoing, events
        if cycle == state.deadline:
            events.append(StepEvent("timeout", bin=state.bin))
            return OPEN, outgoing, events
        return state, outgoing, events

    if inbox:
        # An announcement landing on an open receiver carries no news.
        events.append(StepEvent("stale_ignored", bin=inbox[0].bin))
    if local_herald is not None:
        assert local_herald.cycle == cycle
        truth = local_herald.kind is HeraldKind.TRUE_HERALD
        outgoing.append(ClassicalMessage.announce(local_herald.side, cycle, n, truth))
        events.append(StepEvent("herald", bin=cycle))
        return Closed(bin=cycle, deadline=cycle + n, true_herald=truth), outgoing, events
    return OPEN, outgoing, events


@dataclass(frozen=True)
class HeraldModel:
    """Per-attempt herald probabilities of one receiver."""

    p_true: float
    p_false: float

    @property
    def p_any(self) -> float:
        return self.p_true + self.p_false

    @property
    def true_fraction(self) -> float:
        return self.p_true / self.p_any if self.p_any > 0 else 0.0


def herald_model(
    beta_qd: float, beta_ms: float, p_dc: float, variant: BsmVariant
) -> HeraldModel:
    """Lowest-order herald statistics for one attempt.

    A genuine herald needs both photons; a lost photon can still complete
    the double click through one dark count, and a fully lost pair through
    two.
    """
    one_survivor = beta_qd * (1.0 - beta_ms) + beta_ms * (1.0 - beta_qd)
    none_survive = (1.0 - beta_qd) * (1.0 - beta_ms)
    factor = variant.dark_count_factor
    p_false = one_survivor * (2.0 * factor * p_dc) + none_survive * (factor * p_dc**2)
    return HeraldModel(p_true=beta_qd * beta_ms, p_false=p_false)


def bsm_attempt_sample(
    rng,
    beta_qd: float,
    beta_ms: float,
    p_dc: float,
    variant: BsmVariant = BsmVariant.SINGLET_ONLY,
) -> HeraldKind | None:
    """Sample one open-cycle attempt; ``rng`` needs only a ``random()`` method."""
    qd = rng.random() < beta_qd
    ms = rng.random() < beta_ms
    factor = variant.dark_count_factor
    if qd and ms:
        return HeraldKind.TRUE_HERALD
    if qd or ms:
        return HeraldKind.FALSE_HERALD if rng.random() < 2.0 * factor * p_dc else None
    return HeraldKind.FALSE_HERALD if rng.random() < factor * p_dc**2 else None


class SimMode(Enum):
    LITERAL = "literal"
    OMNISCIENT = "omniscient"

    @classmethod
    def from_key(cls, key: str) -> "SimMode":
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown mode {key!r}")


@dataclass(frozen=True)
class SimConfig:
    """Inputs of one simulation run; equal configs give bit-identical stats."""

    beta_qd: float
    beta_ms: float
    n: int
    total_cycles: int
    seed: int = 0
    p_dc: float = 0.0
    bsm_variant: BsmVariant = BsmVariant.SINGLET_PLUS_TRIPLET
    mode: SimMode = SimMode.OMNISCIENT
    tau_c_ns: float = 500.0
    trace_limit: int = 0

    def __post_init__(self) -> None:
        for name in ("beta_qd", "beta_ms", "p_dc"):
            value = getattr(self, name)
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n!r}")
        if self.total_cycles < 1:
            raise ValueError(f"total_cycles must be >= 1, got {self.total_cycles!r}")
        if self.tau_c_ns <= 0:
            raise ValueError(f"tau_c_ns must be positive, got {self.tau_c_ns!r}")
        if self.trace_limit < 0:
            raise ValueError("trace_limit must be >= 0")
        if 2.0 * self.bsm_variant.dark_count_factor * self.p_dc > 1.0:
            raise ValueError("p_dc too large: per-attempt dark acceptance exceeds 1")
        if self.total_cycles < 10 * self.n:
            warnings.warn(
                "total_cycles below 10*n; equilibrium statistics will be unreliable",
                stacklevel=2,
            )

    @classmethod
    def from_hardware(
        cls,
        budget: LossBudget,
        geom: ChannelGeometry,
        *,
        total_cycles: int,
        tau_c_ns: float = 500.0,
        seed: int = 0,
        encoding: EncodingVariant = EncodingVariant.POLARIZATION,
        midpoint: MidpointVariant = MidpointVariant.ENTANGLED_PAIR_SOURCE,
        detector: DetectorModel | None = None,
        bsm_variant: BsmVariant = BsmVariant.SINGLET_PLUS_TRIPLET,
        mode: SimMode = SimMode.OMNISCIENT,
        trace_limit: int = 0,
    ) -> "SimConfig":
        """Derive the per-cycle probabilities and timeout from hardware parameters."""
        side = mps_side_loss(budget, geom, encoding, midpoint)
        timing = TimingParams(tau_c_ns=tau_c_ns, tau_t_us=geom.tau_t_us)
        return cls(
            beta_qd=side.beta_qd,
            beta_ms=side.beta_ms,
            n=timing.n,
            total_cycles=total_cycles,
            seed=seed,
            p_dc=detector.p_dc if detector is not None else 0.0,
            bsm_variant=bsm_variant,
            mode=mode,
            tau_c_ns=tau_c_ns,
            trace_limit=trace_limit,
        )

    @property
    def herald(self) -> HeraldModel:
        return herald_model(self.beta_qd, self.beta_ms, self.p_dc, self.bsm_variant)

    @property
    def warmup_cycles(self) -> int:
        """Cycles excluded from statistics: the transient from the all-open start."""
        return min(2 * self.n, self.total_cycles)


@dataclass(frozen=True)
class SimStats:
    """Aggregated outcome of one run.  Field names are the JSON contract."""

    mode: str
    cycles_run: int
    warmup_cycles: int
    measured_cycles: int
    tau_c_ns: float
    heralds_left: int
    heralds_right: int
    true_coincidences: int
    false_coincidences: int
    one_sided_confirms: int
    open_fraction: float
    rate_hz: float
    infidelity_estimate: float | None
    trace: tuple[tuple[int, str, str], ...] = ()

    def __post_init__(self) -> None:
        pairs = self.true_coincidences + self.false_coincidences
        if pairs > min(self.heralds_left, self.heralds_right):
            raise ValueError("more confirmed pairs than heralds on one side")
        if not 0.0 <= self.open_fraction <= 1.0:
            raise ValueError("open_fraction must lie in [0, 1]")

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "cycles_run": self.cycles_run,
            "warmup_cycles": self.warmup_cycles,
            "measured_cycles": self.measured_cycles,
            "tau_c_ns": self.tau_c_ns,
            "heralds_left": self.heralds_left,
            "heralds_right": self.heralds_right,
            "true_coincidences": self.true_coincidences,
            "false_coincidences": self.false_coincidences,
            "one_sided_confirms": self.one_sided_confirms,
            "open_fraction": self.open_fraction,
            "rate_hz": self.rate_hz,
            "infidelity_estimate": self.infidelity_estimate,
        }
        return out

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def estimate_infidelity(stats: SimStats) -> float | None:
    """Fraction of confirmed pairs tainted by a false herald; None when no pairs."""
    pairs = stats.true_coincidences + stats.false_coincidences
    if pairs == 0:
        return None
    return stats.false_coincidences / pairs


def write_trace_csv(stats: SimStats, destination) -> None:
    """Dump the recorded event trace as ``cycle,side,event`` rows."""
    lines = ["cycle,side,event"]
    lines += [f"{cycle},{side},{event}" for cycle, side, event in stats.trace]
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="ascii") as handle:
            handle.write(text)


class _HeraldStream:
    """Deterministic herald times and kinds, keyed by (side, cycle).

    ``next_herald`` draws the first success at or after ``open_from`` for a
    receiver that attempts every cycle with probability ``p_any``; skipping
    the failed cycles via the geometric law is exact because attempts are
    independent.  Keying by the opening cycle (rather than a call counter)
    lets runs in different modes re-synchronise on the same seed.
    """

    def __init__(self, seed: int, model: HeraldModel):
        self._seed = seed
        self._q = model.p_any
        self._true_fraction = model.true_fraction
        self._log_fail = math.log1p(-self._q) if 0.0 < self._q < 1.0 else None

    def next_herald(self, side: Side, open_from: int) -> int:
        if self._q <= 0.0:
            return _NEVER
        if self._q >= 1.0:
            return open_from
        u = u01(self._seed, side.value, open_from, "gap")
        gap = math.ceil(math.log1p(-u) / self._log_fail)
        return open_from + max(1, gap) - 1

    def kind(self, side: Side, cycle: int) -> HeraldKind:
        if self._true_fraction >= 1.0:
            return HeraldKind.TRUE_HERALD
        genuine = u01(self._seed, side.value, cycle, "kind") < self._true_fraction
        return HeraldKind.TRUE_HERALD if genuine else HeraldKind.FALSE_HERALD


class _Accumulator:
    def __init__(self, total: int, warmup: int, trace_limit: int):
        self.total = total
        self.warmup = warmup
        self.both_open = 0
        self.heralds = {Side.LEFT: 0, Side.RIGHT: 0}
        self.true_pairs = 0
        self.false_pairs = 0
        self.one_sided = 0
        self.trace: list[tuple[int, str, str]] = []
        self.trace_limit = trace_limit

    def add_open_span(self, lo: int, hi: int) -> None:
        lo = max(lo, self.warmup)
        hi = min(hi, self.total - 1)
        if hi >= lo:
            self.both_open += hi - lo + 1

    def herald(self, side: Side, cycle: int) -> None:
        if self.warmup <= cycle < self.total:
            self.heralds[side] += 1

    def pair(self, bin: int, pair_true: bool) -> None:
        if bin < self.warmup:
            return
        if pair_true:
            self.true_pairs += 1
        else:
            self.false_pairs += 1

    def note(self, cycle: int, side: str, event: str) -> None:
        if len(self.trace) < self.trace_limit:
            self.trace.append((cycle, side, event))

    def finish(self, config: SimConfig, mode: SimMode) -> SimStats:
        measured = self.total - self.warmup
        pairs = self.true_pairs + self.false_pairs
        tau_c_s = config.tau_c_ns * 1e-9
        rate = pairs / (measured * tau_c_s) if measured > 0 else 0.0
        return SimStats(
            mode=mode.value,
            cycles_run=self.total,
            warmup_cycles=self.warmup,
            measured_cycles=measured,
            tau_c_ns=config.tau_c_ns,
            heralds_left=self.heralds[Side.LEFT],
            heralds_right=self.heralds[Side.RIGHT],
            true_coincidences=self.true_pairs,
            false_coincidences=self.false_pairs,
            one_sided_confirms=self.one_sided,
            open_fraction=self.both_open / measured if measured > 0 else 0.0,
            rate_hz=rate,
            infidelity_estimate=(self.false_pairs / pairs) if pairs > 0 else None,
            trace=tuple(self.trace),
        )


def _run_omniscient(config: SimConfig) -> SimStats:
    """Epoch-driven run where resets follow the omniscient joint rule.

    From a both-open epoch, the first herald closes its side for ``n``
    cycles.  A coincident herald confirms a pair at the window end; a later
    herald on the other side just joins the wait, and in every non-matching
    case both sides reopen together right after the first herald's deadline,
    discarding a herald that lands on the final closed cycle.
    """
    n, total = config.n, config.total_cycles
    stream = _HeraldStream(config.seed, config.herald)
    acc = _Accumulator(total, config.warmup_cycles, config.trace_limit)

    pending = {
        Side.LEFT: stream.next_herald(Side.LEFT, 0),
        Side.RIGHT: stream.next_herald(Side.RIGHT, 0),
    }
    t0 = 0
    while t0 < total:
        t_first = min(pending[Side.LEFT], pending[Side.RIGHT])
        if t_first >= total:
            acc.add_open_span(t0, total - 1)
            break
        acc.add_open_span(t0, t_first)
        if pending[Side.LEFT] == pending[Side.RIGHT]:
            bin = t_first
            kinds = {side: stream.kind(side, bin) for side in Side}
            for side in Side:
                acc.herald(side, bin)
                acc.note(bin, side.value, "herald")
            confirm = bin + n
            if confirm < total:
                acc.pair(bin, all(k is HeraldKind.TRUE_HERALD for k in kinds.values()))
                acc.note(confirm, "both", "confirm")
            t0 = confirm + 1
            if t0 >= total:
                break
            pending = {side: stream.next_herald(side, t0) for side in Side}
        else:
            first = Side.LEFT if pending[Side.LEFT] < pending[Side.RIGHT] else Side.RIGHT
            second = first.other
            bin = pending[first]
            acc.herald(first, bin)
            acc.note(bin, first.value, "herald")
            reopen = bin + n + 1
            if pending[second] <= bin + n:
                # The open side heralded into the closed window; both reopen
                # together at the first side's deadline.
                if pending[second] < total:
                    acc.herald(second, pending[second])
                    acc.note(pending[second], second.value, "herald")
                second_consumed = True
            else:
                second_consumed = False
            acc.note(min(bin + n, total - 1), first.value, "timeout")
            t0 = reopen
            if t0 >= total:
                break
            pending[first] = stream.next_herald(first, t0)
            if second_consumed:
                pending[second] = stream.next_herald(second, t0)
    return acc.finish(config, SimMode.OMNISCIENT)


def _run_literal(config: SimConfig) -> SimStats:
    """Event-driven run of the literal message protocol via :func:`receiver_step`."""
    n, total = config.n, config.total_cycles
    stream = _HeraldStream(config.seed, config.herald)
    acc = _Accumulator(total, config.warmup_cycles, config.trace_limit)

    state: dict[Side, ReceiverState] = {Side.LEFT: OPEN, Side.RIGHT: OPEN}
    next_herald = {
        Side.LEFT: stream.next_herald(Side.LEFT, 0),
        Side.RIGHT: stream.next_herald(Side.RIGHT, 0),
    }
    inflight: dict[Side, deque[ClassicalMessage]] = {
        Side.LEFT: deque(),
        Side.RIGHT: deque(),
    }

    both_open = True
    both_open_since = 0

    def record_status(change_cycle: int, now_open: bool) -> None:
        nonlocal both_open, both_open_since
        if now_open != both_open:
            if both_open:
                acc.add_open_span(both_open_since, change_cycle - 1)
            both_open = now_open
            both_open_since = change_cycle

    while True:
        candidates = []
        for side in Side:
            if isinstance(state[side], Closed):
                candidates.append(state[side].deadline)
            else:
                candidates.append(next_herald[side])
            if inflight[side]:
                candidates.append(inflight[side][0].arrival)
        t = min(candidates)
        if t >= total:
            break

        confirms: dict[Side, StepEvent] = {}
        for side in Side:
            inbox = []
            while inflight[side] and inflight[side][0].arrival == t:
                inbox.append(inflight[side].popleft())
            local = None
            if isinstance(state[side], Open) and next_herald[side] == t:
                local = HeraldRecord(cycle=t, side=side, kind=stream.kind(side, t))
                acc.herald(side, t)
            due = isinstance(state[side], Closed) and state[side].deadline == t
            if local is None and not inbox and not due:
                continue
            new_state, outgoing, events = receiver_step(state[side], t, local, inbox, n)
            for msg in outgoing:
                inflight[side.other].append(msg)
            for event in events:
                acc.note(t, side.value, event.kind)
                if event.kind == "confirm":
                    confirms[side] = event
            if isinstance(new_state, Closed):
                next_herald[side] = _NEVER
            elif isinstance(state[side], Closed):
                next_herald[side] = stream.next_herald(side, t + 1)
            state[side] = new_state

        if len(confirms) == 2:
            left, right = confirms[Side.LEFT], confirms[Side.RIGHT]
            assert left.bin == right.bin and left.pair_true == right.pair_true
            acc.pair(left.bin, bool(left.pair_true))
        elif len(confirms) == 1:
            # The other side was reset by a stale announcement and its spin
            # is gone; the lone confirmation does not yield a pair.
            acc.one_sided += 1

        record_status(t + 1, all(isinstance(state[side], Open) for side in Side))

    if both_open:
        acc.add_open_span(both_open_since, total - 1)
    return acc.finish(config, SimMode.LITERAL)


def des_run(config: SimConfig) -> SimStats:
    """Run the configured simulation; deterministic in the config (incl. seed)."""
    if config.mode is SimMode.OMNISCIENT:
        return _run_omniscient(config)
    return _run_literal(config)


def mpi_reference_run(beta_1: float, tau_t_s: float, windows: int, seed: int = 0) -> SimStats:
    """Baseline midpoint-interference run: one attempt per full delay window.

    Window outcomes are independent Bernoulli(beta_1) trials, drawn as one
    binomial count; the long-run rate converges to ``beta_1 / tau_t``.
    """
    if not 0.0 <= beta_1 <= 1.0:
        raise ValueError(f"beta_1 must lie in [0, 1], got {beta_1!r}")
    if tau_t_s <= 0:
        raise ValueError(f"tau_t_s must be positive, got {tau_t_s!r}")
    if windows < 1:
        raise ValueError(f"windows must be >= 1, got {windows!r}")
    successes = int(np.random.default_rng(seed).binomial(windows, beta_1))
    return SimStats(
        mode="mpi_reference",
        cycles_run=windows,
        warmup_cycles=0,
        measured_cycles=windows,
        tau_c_ns=tau_t_s * 1e9,
        heralds_left=successes,
        heralds_right=successes,
        true_coincidences=successes,
        false_coincidences=0,
        one_sided_confirms=0,
        open_fraction=1.0,
        rate_hz=successes / (windows * tau_t_s),
        infidelity_estimate=0.0 if successes > 0 else None,
    )
