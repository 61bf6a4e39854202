"""Visit-loop simulation of the exchange.

Two interchangeable engines produce bit-identical results: a fast array
kernel (`engine="fast"`, the default) and a plain-object reference loop built
from the composable operations below (`engine="reference"`), kept around as
the oracle for equivalence tests.

Pricing: the weighted-rank mode charges the winner its own bid on a click
(first price); both GSP modes charge the second price fixed at selection
time. Visit arrival is uniform over non-expelled publishers.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import engine as _eng
from . import selection
from .accounting import (PenaltyBreakdown, PenaltyCoefficients, adx_performance,
                         compute_penalties, record_click)
from .domain import ClickRecord, Visit, WorldState, refresh_category_max_cpc
from .engine import MODE_CODES, RunBuffers, StaticWorld, visit_uniforms
from .governance import (KIND_ADVERTISER, KIND_NETWORK, KIND_PUBLISHER,
                         RULE_ADVERTISER_SPAM, RULE_NETWORK_FRAUD,
                         RULE_PUBLISHER_FRAUD, ExpulsionEvent, RuleThresholds,
                         checkpoint)
from .selection import AdvertContext, WeightVector

MODES = ("asf", "gsp_collaborative", "gsp_independent")

REPORT_FORMAT = "adxsim-report-v1"


@dataclass
class SimulationConfig:
    mode: str = "asf"
    visits_total: int = 150_000
    weights: WeightVector | None = None
    coefficients: PenaltyCoefficients = field(default_factory=PenaltyCoefficients)
    thresholds: RuleThresholds = field(default_factory=RuleThresholds)
    apply_penalties: bool = True
    campaign_cost_form: str = selection.PROSE

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.visits_total < 0:
            raise ValueError("visits_total must be >= 0")
        if self.mode == "asf" and not isinstance(self.weights, WeightVector):
            raise ValueError("asf mode requires a WeightVector")
        if self.campaign_cost_form not in (selection.PROSE, selection.PRINTED):
            raise ValueError("campaign_cost_form must be 'prose' or 'printed'")

    def digest(self) -> str:
        doc = {
            "mode": self.mode,
            "visits_total": self.visits_total,
            "weights": list(self.weights.as_tuple()) if self.weights else None,
            "coefficients": list(self.coefficients.as_tuple()),
            "thresholds": asdict(self.thresholds),
            "apply_penalties": self.apply_penalties,
            "campaign_cost_form": self.campaign_cost_form,
        }
        blob = json.dumps(doc, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class SimulationReport:
    mode: str
    seed: int
    config_digest: str
    visits_processed: int
    impressions_total: int
    clicks_total: int
    income: float
    penalties: PenaltyBreakdown
    performance: float
    network_stats: list[dict]
    advertiser_stats: list[dict]
    publisher_stats: list[dict]
    expulsion_events: list[ExpulsionEvent]

    def to_json(self) -> str:
        doc = {
            "format": REPORT_FORMAT,
            "mode": self.mode,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "visits_processed": self.visits_processed,
            "impressions_total": self.impressions_total,
            "clicks_total": self.clicks_total,
            "income": round(self.income, 2),
            "penalties": {
                **{k: round(v, 2) for k, v in zip(
                    ("pen1", "pen2", "pen3", "pen4", "pen5"),
                    self.penalties.as_tuple())},
                "counts": [self.penalties.starved_advertiser_count,
                           self.penalties.spam_click_count,
                           self.penalties.overpriced_advertiser_count,
                           self.penalties.imbalanced_network_count,
                           self.penalties.fraud_click_count],
            },
            "performance": round(self.performance, 2),
            "networks": [
                {**row, "income": round(row["income"], 2)}
                for row in self.network_stats
            ],
            "advertisers": [
                {**row, "revenue_paid": round(row["revenue_paid"], 2)}
                for row in self.advertiser_stats
            ],
            "publishers": self.publisher_stats,
            "expulsion_events": [asdict(e) for e in self.expulsion_events],
        }
        return json.dumps(doc, sort_keys=True, indent=1)


def next_visit(world: WorldState, rng) -> Visit | None:
    """Draw the next visit: a uniform choice among non-expelled publishers.

    Returns None when no publisher is left to visit.
    """
    active = world.active_publisher_ids()
    if not active:
        return None
    idx = min(int(rng.random() * len(active)), len(active) - 1)
    pub_id = active[idx]
    return Visit(world.visit_count_processed + 1, pub_id,
                 world.publishers[pub_id].category)


def candidates(world: WorldState, visit: Visit, mode: str,
               cost_form: str = selection.PROSE) -> list[AdvertContext]:
    """Candidate contexts for a visit, ordered by advert id.

    Non-expelled adverts matching the visit's category; in gsp_independent
    mode only adverts of the visited publisher's own network qualify.
    Variables are computed from current world statistics; the per-category
    maximum CPC comes from the checkpoint-refreshed cache.
    """
    visit_pub = world.publishers[visit.publisher_id]
    fraud_score = selection.fraud_publisher_score(visit_pub.fraud_prob)
    out = []
    for ad_id in sorted(world.adverts):
        ad = world.adverts[ad_id]
        if ad.category != visit.category or not world.advert_active(ad_id):
            continue
        adv = world.advertisers[ad.advertiser_id]
        if mode == "gsp_independent" and adv.network_id != visit_pub.network_id:
            continue
        net = world.networks[adv.network_id]
        adval = selection.ad_value(ad.ctr, ad.cpc_bid,
                                   world.category_max_cpc[ad.category])
        out.append(AdvertContext(
            advert_id=ad_id,
            an_satisfaction=selection.an_satisfaction(
                net.visits_received, net.visits_delivered),
            advertiser_satisfaction=selection.advertiser_satisfaction(
                adv.potential_visits, adv.received_impressions, adval),
            spam_score=selection.spam_score(ad.spam_prob),
            campaign_cost=selection.campaign_cost(ad.cpc_bid, ad.real_price,
                                                  cost_form),
            fraud_publisher_score=fraud_score,
            ad_value=adval,
        ))
    return out


def _serve_visit(world: WorldState, visit: Visit, config: SimulationConfig,
                 u_click: float, u_fraud: float) -> tuple[int | None, ClickRecord | None]:
    """Select, update counters, maybe realize a click. Returns (winner, record)."""
    cands = candidates(world, visit, config.mode, config.campaign_cost_form)
    if not cands:
        world.visit_count_processed = visit.seq
        return None, None

    if config.mode == "asf":
        winner_id = selection.select_asf(cands, config.weights)
        price_if_click = world.adverts[winner_id].cpc_bid
    else:
        pairs = [(c.advert_id, world.adverts[c.advert_id].cpc_bid) for c in cands]
        winner_id, price_if_click = selection.select_gsp(pairs)

    bumped: set[int] = set()
    for c in cands:
        adv_id = world.adverts[c.advert_id].advertiser_id
        if adv_id not in bumped:
            bumped.add(adv_id)
            world.advertisers[adv_id].potential_visits += 1

    ad = world.adverts[winner_id]
    owner = world.advertisers[ad.advertiser_id]
    owner.received_impressions += 1
    if ad.is_spam:
        owner.spam_impressions += 1
    world.networks[owner.network_id].visits_delivered += 1
    world.networks[world.publishers[visit.publisher_id].network_id].visits_received += 1

    record = None
    if u_click < ad.ctr:
        fraud = bool(u_fraud < world.publishers[visit.publisher_id].fraud_prob)
        record = ClickRecord(visit.seq, winner_id, ad.advertiser_id,
                             visit.publisher_id, price_if_click,
                             ad.is_spam, fraud)
        record_click(world, record)
    world.visit_count_processed = visit.seq
    return winner_id, record


def serve(world: WorldState, visit: Visit, config: SimulationConfig,
          rng) -> tuple[WorldState, ClickRecord | None]:
    """Spec-level serve: one visit against the current world state.

    `rng` only needs a .random() method; the click coin is drawn first, the
    fraud coin second (and only when a click is realized).
    """
    u_click = rng.random()
    u_fraud = rng.random()
    _, record = _serve_visit(world, visit, config, u_click, u_fraud)
    return world, record


class _Replay:
    """Duck-typed rng replaying fixed uniforms (engine parity in tests)."""

    def __init__(self, values):
        self._values = list(values)

    def random(self):
        return self._values.pop(0)


def _run_reference(world: WorldState, config: SimulationConfig, seed: int,
                   trace: bool) -> tuple[list[ExpulsionEvent], list[tuple[int, int]]]:
    refresh_category_max_cpc(world)
    n = config.visits_total
    u_pub, u_click, u_fraud = visit_uniforms(seed, n)
    events: list[ExpulsionEvent] = []
    trace_rows: list[tuple[int, int]] = []
    interval = config.thresholds.checkpoint_interval
    for i in range(n):
        active = world.active_publisher_ids()
        winner = None
        pub_id = -1
        if active:
            idx = min(int(u_pub[i] * len(active)), len(active) - 1)
            pub_id = active[idx]
            visit = Visit(world.visit_count_processed + 1, pub_id,
                          world.publishers[pub_id].category)
            winner, _ = _serve_visit(world, visit, config,
                                     float(u_click[i]), float(u_fraud[i]))
        else:
            world.visit_count_processed += 1
        if trace:
            trace_rows.append((winner if winner is not None else -1, pub_id))
        if world.visit_count_processed % interval == 0:
            events.extend(checkpoint(world, config.thresholds))
    return events, trace_rows


_EV_KIND_NAMES = {0: KIND_ADVERTISER, 1: KIND_PUBLISHER, 2: KIND_NETWORK}
_EV_RULE_NAMES = {0: RULE_ADVERTISER_SPAM, 1: RULE_PUBLISHER_FRAUD, 2: RULE_NETWORK_FRAUD}


def _run_fast(world: WorldState, config: SimulationConfig, seed: int,
              trace: bool) -> tuple[WorldState, list[ExpulsionEvent], list[tuple[int, int]]]:
    static = StaticWorld(world)
    buffers = RunBuffers(static, config.visits_total, record_ledger=True, trace=trace)
    result = _eng.run_visits(
        static, buffers,
        mode=MODE_CODES[config.mode],
        theta=np.array(config.weights.as_tuple()) if config.weights
        else np.zeros(6),
        printed_cost=config.campaign_cost_form == selection.PRINTED,
        thresholds=config.thresholds, visits=config.visits_total, seed=seed,
        record_ledger=True, trace=trace)

    final = copy.deepcopy(world)
    for k, adv_id in enumerate(static.adv_ids):
        adv = final.advertisers[int(adv_id)]
        adv.potential_visits = int(buffers.adv_potential[k])
        adv.received_impressions = int(buffers.adv_received[k])
        adv.spam_impressions = int(buffers.adv_spam_impr[k])
        adv.clicks_received = int(buffers.adv_clicks[k])
        adv.spam_clicks = int(buffers.adv_spam_clicks[k])
        adv.revenue_paid = float(buffers.adv_revenue[k])
        adv.expelled = bool(buffers.adv_expelled[k])
    for k, pub_id in enumerate(static.pub_ids):
        pub = final.publishers[int(pub_id)]
        pub.clicks_total = int(buffers.pub_clicks[k])
        pub.fraudulent_clicks = int(buffers.pub_fraud_clicks[k])
        pub.expelled = bool(buffers.pub_expelled[k])
    for k, net_id in enumerate(static.net_ids):
        net = final.networks[int(net_id)]
        net.visits_received = int(buffers.net_recv[k])
        net.visits_delivered = int(buffers.net_deliv[k])
        net.income = float(buffers.net_income[k])
        net.expelled = bool(buffers.net_expelled[k])
    for j in range(result.n_clicks):
        a = int(buffers.led_advert[j])
        final.click_ledger.append(ClickRecord(
            visit_seq=int(buffers.led_seq[j]),
            advert_id=int(static.ad_ids[a]),
            advertiser_id=int(static.adv_ids[static.ad_advertiser[a]]),
            publisher_id=int(static.pub_ids[buffers.led_publisher[j]]),
            price_charged=float(buffers.led_price[j]),
            was_spam_advert=bool(buffers.led_spam[j]),
            was_fraudulent_click=bool(buffers.led_fraud[j])))
    final.income_total = result.income
    final.visit_count_processed = static.init_visits + result.visits
    refresh_category_max_cpc(final)

    events = []
    for j in range(result.n_events):
        kind = int(buffers.ev_kind[j])
        idx = int(buffers.ev_entity[j])
        ids = (static.adv_ids, static.pub_ids, static.net_ids)[kind]
        events.append(ExpulsionEvent(int(buffers.ev_seq[j]), _EV_RULE_NAMES[kind],
                                     _EV_KIND_NAMES[kind], int(ids[idx])))
    trace_rows = []
    if trace:
        for i in range(result.visits):
            a = int(buffers.trace_advert[i])
            p = int(buffers.trace_publisher[i])
            trace_rows.append((int(static.ad_ids[a]) if a >= 0 else -1,
                               int(static.pub_ids[p]) if p >= 0 else -1))
    return final, events, trace_rows


def _build_report(world: WorldState, config: SimulationConfig, seed: int,
                  events: list[ExpulsionEvent]) -> SimulationReport:
    if config.apply_penalties:
        penalties = compute_penalties(world, config.coefficients)
        performance = adx_performance(world.income_total, penalties)
    else:
        penalties = PenaltyBreakdown()
        performance = world.income_total
    return SimulationReport(
        mode=config.mode,
        seed=int(seed),
        config_digest=config.digest(),
        visits_processed=world.visit_count_processed,
        impressions_total=sum(a.received_impressions
                              for a in world.advertisers.values()),
        clicks_total=len(world.click_ledger),
        income=world.income_total,
        penalties=penalties,
        performance=performance,
        network_stats=[
            {"id": i, "visits_received": n.visits_received,
             "visits_delivered": n.visits_delivered, "income": n.income,
             "expelled": n.expelled}
            for i, n in sorted(world.networks.items())],
        advertiser_stats=[
            {"id": i, "network_id": a.network_id,
             "potential_visits": a.potential_visits,
             "received_impressions": a.received_impressions,
             "spam_impressions": a.spam_impressions,
             "clicks_received": a.clicks_received,
             "spam_clicks": a.spam_clicks,
             "revenue_paid": a.revenue_paid, "expelled": a.expelled}
            for i, a in sorted(world.advertisers.items())],
        publisher_stats=[
            {"id": i, "network_id": p.network_id, "clicks_total": p.clicks_total,
             "fraudulent_clicks": p.fraudulent_clicks, "expelled": p.expelled}
            for i, p in sorted(world.publishers.items())],
        expulsion_events=events,
    )


def simulate(world: WorldState, config: SimulationConfig, seed: int, *,
             engine: str = "fast",
             return_world: bool = False) -> SimulationReport | tuple[SimulationReport, WorldState]:
    """Run the full visit loop and return the report.

    Deterministic in (world, config, seed); the caller's world is never
    mutated. `engine` selects the fast array kernel or the reference loop.
    """
    report, final, _ = _simulate_impl(world, config, seed, engine, trace=False)
    return (report, final) if return_world else report


def simulate_traced(world: WorldState, config: SimulationConfig, seed: int, *,
                    engine: str = "fast"):
    """simulate() plus a per-visit (advert_id, publisher_id) trace, -1 for
    unserved/unplaced; used by selection-equivalence tests."""
    return _simulate_impl(world, config, seed, engine, trace=True)


def _simulate_impl(world, config, seed, engine, trace):
    if engine == "fast":
        final, events, trace_rows = _run_fast(world, config, seed, trace)
    elif engine == "reference":
        final = copy.deepcopy(world)
        events, trace_rows = _run_reference(final, config, seed, trace)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    report = _build_report(final, config, seed, events)
    return report, final, trace_rows
