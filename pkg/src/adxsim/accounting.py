"""Income accumulation, the five economic penalties, and exchange performance.

Penalties are whole-run quantities computed over the final world state and
click ledger. Component sums are plain left-to-right folds in a pinned order
(ledger order for click sums, ascending entity id otherwise) so the
array-based engine can reproduce them bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum

from .domain import ClickRecord, WorldState

IMPRESSION_SHARE_FLOOR = 0.25   # advertisers below this impression ratio are penalized
OVERPRICE_FACTOR = 1.25         # bids above this multiple of market value are penalized
IMBALANCE_FLOOR = 0.75          # networks receiving less than this share of deliveries


@dataclass(frozen=True)
class PenaltyCoefficients:
    """Multipliers turning each unmet objective into a dollar deduction."""

    starved_advertisers: float = 0.5
    spam_clicks: float = 0.5
    overpriced_campaigns: float = 0.5
    network_imbalance: float = 0.5
    fraud_clicks: float = 0.5

    def __post_init__(self):
        for v in self.as_tuple():
            if v < 0:
                raise ValueError("penalty coefficients must be >= 0")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.starved_advertisers, self.spam_clicks,
                self.overpriced_campaigns, self.network_imbalance,
                self.fraud_clicks)

    @classmethod
    def all_equal(cls, value: float) -> "PenaltyCoefficients":
        return cls(value, value, value, value, value)

    @classmethod
    def zero(cls) -> "PenaltyCoefficients":
        return cls.all_equal(0.0)


@dataclass(frozen=True)
class PenaltyBreakdown:
    starved_advertisers: float = 0.0
    spam_clicks: float = 0.0
    overpriced_campaigns: float = 0.0
    network_imbalance: float = 0.0
    fraud_clicks: float = 0.0
    starved_advertiser_count: int = 0
    spam_click_count: int = 0
    overpriced_advertiser_count: int = 0
    imbalanced_network_count: int = 0
    fraud_click_count: int = 0

    def as_tuple(self) -> tuple[float, ...]:
        return (self.starved_advertisers, self.spam_clicks,
                self.overpriced_campaigns, self.network_imbalance,
                self.fraud_clicks)

    def total(self) -> float:
        return fsum(self.as_tuple())


def record_click(world: WorldState, record: ClickRecord) -> WorldState:
    """Append a click to the ledger and update every affected counter.

    Income is attributed to the visited publisher's network. Spam and fraud
    income is collected like any other; the penalty engine claws it back.
    """
    advertiser = world.advertisers[record.advertiser_id]
    publisher = world.publishers[record.publisher_id]
    if not world.advert_active(record.advert_id):
        raise ValueError("click references an expelled advertiser or network")
    if not world.publisher_active(record.publisher_id):
        raise ValueError("click references an expelled publisher or network")

    world.click_ledger.append(record)
    world.income_total += record.price_charged
    advertiser.clicks_received += 1
    advertiser.revenue_paid += record.price_charged
    if record.was_spam_advert:
        advertiser.spam_clicks += 1
    publisher.clicks_total += 1
    if record.was_fraudulent_click:
        publisher.fraudulent_clicks += 1
    world.networks[publisher.network_id].income += record.price_charged
    return world


def penalty_starved_advertisers(world: WorldState, coefficient: float) -> tuple[float, int]:
    """Penalty for advertisers whose impression ratio fell below 25%.

    Each non-expelled advertiser with received / potential below the floor
    (0/0 counts as fully served) costs `coefficient` times the mean revenue
    per non-expelled advertiser of its own network.
    """
    per_network_mean: dict[int, float] = {}
    for net_id in sorted(world.networks):
        revenues = [world.advertisers[a].revenue_paid
                    for a in sorted(world.networks[net_id].advertiser_ids)
                    if not world.advertisers[a].expelled]
        per_network_mean[net_id] = sum(revenues) / len(revenues) if revenues else 0.0

    total = 0.0
    count = 0
    for adv_id in sorted(world.advertisers):
        adv = world.advertisers[adv_id]
        if adv.expelled:
            continue
        ratio = 1.0 if adv.potential_visits == 0 else (
            adv.received_impressions / adv.potential_visits)
        if ratio < IMPRESSION_SHARE_FLOOR:
            total += coefficient * per_network_mean[adv.network_id]
            count += 1
    return total, count


def penalty_spam_clicks(world: WorldState, coefficient: float) -> tuple[float, int]:
    """Coefficient times the total revenue of clicks on spam adverts."""
    total = 0.0
    count = 0
    for r in world.click_ledger:
        if r.was_spam_advert:
            total += r.price_charged
            count += 1
    return coefficient * total, count


def penalty_overpriced_campaigns(world: WorldState, coefficient: float) -> tuple[float, int]:
    """Penalty for advertisers bidding more than 25% above market value.

    An advertiser triggers (strict inequality) when any of its adverts bids
    above OVERPRICE_FACTOR times that advert's real price; the penalty is
    `coefficient` times all revenue that advertiser generated.
    """
    total = 0.0
    count = 0
    for adv_id in sorted(world.advertisers):
        adv = world.advertisers[adv_id]
        overpriced = any(
            world.adverts[a].cpc_bid > OVERPRICE_FACTOR * world.adverts[a].real_price
            for a in adv.adverts)
        if overpriced:
            total += coefficient * adv.revenue_paid
            count += 1
    return total, count


def penalty_network_imbalance(world: WorldState, coefficient: float) -> tuple[float, int]:
    """Penalty for non-expelled networks receiving 25% fewer visits than
    they deliver; costs `coefficient` times the network's income."""
    total = 0.0
    count = 0
    for net_id in sorted(world.networks):
        net = world.networks[net_id]
        if net.expelled:
            continue
        if net.visits_received < IMBALANCE_FLOOR * net.visits_delivered:
            total += coefficient * net.income
            count += 1
    return total, count


def penalty_fraud_clicks(world: WorldState, coefficient: float) -> tuple[float, int]:
    """Coefficient times the total value of fraudulent clicks."""
    total = 0.0
    count = 0
    for r in world.click_ledger:
        if r.was_fraudulent_click:
            total += r.price_charged
            count += 1
    return coefficient * total, count


def compute_penalties(world: WorldState, coefficients: PenaltyCoefficients) -> PenaltyBreakdown:
    p1, c1 = penalty_starved_advertisers(world, coefficients.starved_advertisers)
    p2, c2 = penalty_spam_clicks(world, coefficients.spam_clicks)
    p3, c3 = penalty_overpriced_campaigns(world, coefficients.overpriced_campaigns)
    p4, c4 = penalty_network_imbalance(world, coefficients.network_imbalance)
    p5, c5 = penalty_fraud_clicks(world, coefficients.fraud_clicks)
    return PenaltyBreakdown(p1, p2, p3, p4, p5, c1, c2, c3, c4, c5)


def adx_performance(income: float, penalties: PenaltyBreakdown) -> float:
    """Income minus the sum of all penalties; may be negative."""
    return income - penalties.total()
