"""Expulsion rules, applied at fixed visit-count checkpoints.

Advertisers and publishers are expelled on a strict > 20% fraud fraction once
past their volume gates; networks on an inclusive >= 20% fraction of
fraudulent members. Fraction comparisons are done as float divisions so the
documented boundary cases (exactly 20%) behave identically everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

from .domain import AdNetwork, Advertiser, Publisher, WorldState, refresh_category_max_cpc

KIND_ADVERTISER = "advertiser"
KIND_PUBLISHER = "publisher"
KIND_NETWORK = "network"

RULE_ADVERTISER_SPAM = "advertiser_spam"
RULE_PUBLISHER_FRAUD = "publisher_fraud"
RULE_NETWORK_FRAUD = "network_fraud"


@dataclass(frozen=True)
class RuleThresholds:
    fraud_fraction: float = 0.20
    advertiser_min_adverts: int = 200
    publisher_min_clicks: int = 30
    network_min_visits: int = 2000
    checkpoint_interval: int = 1000

    def __post_init__(self):
        if not (0.0 < self.fraud_fraction < 1.0):
            raise ValueError("fraud_fraction must be in (0, 1)")
        if min(self.advertiser_min_adverts, self.publisher_min_clicks,
               self.network_min_visits, self.checkpoint_interval) <= 0:
            raise ValueError("thresholds must be positive")


@dataclass(frozen=True)
class ExpulsionEvent:
    visit_seq: int
    rule: str
    entity_kind: str
    entity_id: int


def is_fraudulent_advertiser(advertiser: Advertiser, fraud_fraction: float) -> bool:
    """Spam-impression fraction above the threshold, volume gate ignored."""
    if advertiser.received_impressions == 0:
        return False
    return advertiser.spam_impressions / advertiser.received_impressions > fraud_fraction


def is_fraudulent_publisher(publisher: Publisher, fraud_fraction: float) -> bool:
    """Fraudulent-click fraction above the threshold, volume gate ignored."""
    if publisher.clicks_total == 0:
        return False
    return publisher.fraudulent_clicks / publisher.clicks_total > fraud_fraction


def should_expel_advertiser(advertiser: Advertiser, thresholds: RuleThresholds) -> bool:
    """Spam on more than 20% of displayed impressions, past the volume gate."""
    if advertiser.received_impressions <= thresholds.advertiser_min_adverts:
        return False
    return is_fraudulent_advertiser(advertiser, thresholds.fraud_fraction)


def should_expel_publisher(publisher: Publisher, thresholds: RuleThresholds) -> bool:
    """Fraud on more than 20% of clicks, past the volume gate."""
    if publisher.clicks_total <= thresholds.publisher_min_clicks:
        return False
    return is_fraudulent_publisher(publisher, thresholds.fraud_fraction)


def should_expel_network(network: AdNetwork,
                         members: list[Advertiser | Publisher],
                         thresholds: RuleThresholds) -> bool:
    """20% or more fraudulent members and enough total visit volume.

    A member counts as fraudulent when it meets its own rule's full condition
    (fraud fraction past that member's volume gate); fraud can only be judged
    over a large enough sample, and below the gates the fractions are pure
    small-sample noise. Members already expelled keep counting: a network
    that sheltered fraudsters does not get whitewashed by their removal.
    Received and delivered visits are summed for the volume gate.
    """
    if network.visits_received + network.visits_delivered <= thresholds.network_min_visits:
        return False
    if not members:
        return False
    fraudulent = 0
    for m in members:
        if isinstance(m, Advertiser):
            fraudulent += should_expel_advertiser(m, thresholds)
        else:
            fraudulent += should_expel_publisher(m, thresholds)
    return fraudulent / len(members) >= thresholds.fraud_fraction


def checkpoint(world: WorldState, thresholds: RuleThresholds) -> list[ExpulsionEvent]:
    """Apply all three rules in order, flag the expelled, refresh caches.

    Members of an expelled network are flagged expelled as well (the network
    takes them down with it); only the rule-triggered entity gets an event.
    Must be called when visit_count_processed is a checkpoint multiple.
    """
    if world.visit_count_processed % thresholds.checkpoint_interval != 0:
        raise ValueError("checkpoint called off the configured visit cadence")
    seq = world.visit_count_processed
    events: list[ExpulsionEvent] = []

    for adv_id in sorted(world.advertisers):
        adv = world.advertisers[adv_id]
        if not adv.expelled and should_expel_advertiser(adv, thresholds):
            adv.expelled = True
            events.append(ExpulsionEvent(seq, RULE_ADVERTISER_SPAM, KIND_ADVERTISER, adv_id))

    for pub_id in sorted(world.publishers):
        pub = world.publishers[pub_id]
        if not pub.expelled and should_expel_publisher(pub, thresholds):
            pub.expelled = True
            events.append(ExpulsionEvent(seq, RULE_PUBLISHER_FRAUD, KIND_PUBLISHER, pub_id))

    for net_id in sorted(world.networks):
        net = world.networks[net_id]
        if net.expelled:
            continue
        members = ([world.advertisers[a] for a in net.advertiser_ids]
                   + [world.publishers[p] for p in net.publisher_ids])
        if should_expel_network(net, members, thresholds):
            net.expelled = True
            events.append(ExpulsionEvent(seq, RULE_NETWORK_FRAUD, KIND_NETWORK, net_id))
            for a in net.advertiser_ids:
                world.advertisers[a].expelled = True
            for p in net.publisher_ids:
                world.publishers[p].expelled = True

    refresh_category_max_cpc(world)
    return events
