"""Advert scoring and selection.

Six normalized variables, each in [0, 1], feed a weighted linear rank; the
advert with the highest rank wins the visit. A generalized second-price
selector is provided as the baseline mechanism.

Cold-start convention: any 0/0 satisfaction ratio is defined as 0.5 (neutral).
"""

from __future__ import annotations

from dataclasses import dataclass

PROSE = "prose"
PRINTED = "printed"

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class WeightVector:
    """Selection weights, one per variable, summing to one.

    Field order matches the rank formula: network satisfaction, advertiser
    satisfaction, spam adverts, campaign cost, fraud publisher, ad value.
    """

    an_satisfaction: float
    advertiser_satisfaction: float
    spam_adverts: float
    campaign_cost: float
    fraud_publisher: float
    ad_value: float

    def __post_init__(self):
        vals = self.as_tuple()
        for v in vals:
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"weights must be in [0, 1], got {v}")
        if abs(sum(vals) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {sum(vals)!r}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.an_satisfaction, self.advertiser_satisfaction,
                self.spam_adverts, self.campaign_cost,
                self.fraud_publisher, self.ad_value)

    @classmethod
    def uniform(cls) -> "WeightVector":
        sixth = 1.0 / 6.0
        return cls(sixth, sixth, sixth, sixth, sixth, sixth)

    @classmethod
    def from_sequence(cls, values) -> "WeightVector":
        vals = list(values)
        if len(vals) != 6:
            raise ValueError("expected exactly 6 weights")
        return cls(*[float(v) for v in vals])


@dataclass(frozen=True)
class AdvertContext:
    """One candidate advert's six normalized variables."""

    advert_id: int
    an_satisfaction: float
    advertiser_satisfaction: float
    spam_score: float
    campaign_cost: float
    fraud_publisher_score: float
    ad_value: float

    def __post_init__(self):
        for name in ("an_satisfaction", "advertiser_satisfaction", "spam_score",
                     "campaign_cost", "fraud_publisher_score", "ad_value"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {v}")


def an_satisfaction(received_visits: int, delivered_visits: int) -> float:
    """Dissatisfaction of the advert's network: 1 - received / (received +
    delivered). 1.0 means fully starved, 0.5 is balanced (and the 0/0 value).
    """
    if received_visits < 0 or delivered_visits < 0:
        raise ValueError("visit counts must be >= 0")
    total = received_visits + delivered_visits
    if total == 0:
        return 0.5
    return 1.0 - received_visits / total


def advertiser_satisfaction(potential_visits: int, received_visits: int,
                            ad_value: float) -> float:
    """Discontent of the advertiser, scaled by its advert's value.

    The ratio potential / (potential + received) approaches 1 for advertisers
    that rarely win the visits they were candidates for; 0/0 counts as 0.5.
    """
    if potential_visits < 0 or received_visits < 0:
        raise ValueError("visit counts must be >= 0")
    if not (0.0 <= ad_value <= 1.0):
        raise ValueError("ad_value must be in [0, 1]")
    total = potential_visits + received_visits
    ratio = 0.5 if total == 0 else potential_visits / total
    return ratio * ad_value


def spam_score(spam_prob: float) -> float:
    """1 - spam probability: likelier spam means closer to zero."""
    if not (0.0 <= spam_prob <= 1.0):
        raise ValueError("spam_prob must be in [0, 1]")
    return 1.0 - spam_prob


def campaign_cost(advertiser_price: float, real_price: float,
                  form: str = PROSE) -> float:
    """How fairly priced the campaign is, in [0, 1].

    The default "prose" form, real / (advertiser + real), drops toward zero
    for advertisers paying above market value. The "printed" form flips the
    numerator to advertiser / (advertiser + real).
    """
    if advertiser_price <= 0 or real_price <= 0:
        raise ValueError("prices must be positive")
    if form == PROSE:
        return real_price / (advertiser_price + real_price)
    if form == PRINTED:
        return advertiser_price / (advertiser_price + real_price)
    raise ValueError(f"unknown campaign cost form: {form!r}")


def fraud_publisher_score(fraud_prob: float) -> float:
    """1 - click-fraud probability of the visited publisher."""
    if not (0.0 <= fraud_prob <= 1.0):
        raise ValueError("fraud_prob must be in [0, 1]")
    return 1.0 - fraud_prob


def ad_value(ctr: float, cpc_bid: float, max_category_cpc: float) -> float:
    """CTR-weighted bid, normalized by the best bid in the advert's category.

    `max_category_cpc` must be the true maximum over the exchange's
    non-expelled adverts of that category.
    """
    if not (0.0 <= ctr <= 1.0):
        raise ValueError("ctr must be in [0, 1]")
    if cpc_bid <= 0:
        raise ValueError("cpc_bid must be positive")
    if cpc_bid > max_category_cpc:
        raise ValueError("cpc_bid exceeds the category maximum")
    return ctr * cpc_bid / max_category_cpc


def ad_rank(ctx: AdvertContext, w: WeightVector) -> float:
    """Weighted linear combination of the six variables; lies in [0, 1]."""
    return (w.an_satisfaction * ctx.an_satisfaction
            + w.advertiser_satisfaction * ctx.advertiser_satisfaction
            + w.spam_adverts * ctx.spam_score
            + w.campaign_cost * ctx.campaign_cost
            + w.fraud_publisher * ctx.fraud_publisher_score
            + w.ad_value * ctx.ad_value)


def argmax_ranked(ranked: list[tuple[int, float]]) -> int | None:
    """Id of the highest-ranked entry; ties broken by lowest id."""
    best_id = None
    best_rank = 0.0
    for advert_id, rank in ranked:
        if best_id is None or rank > best_rank or (rank == best_rank and advert_id < best_id):
            best_id = advert_id
            best_rank = rank
    return best_id


def select_asf(candidates: list[AdvertContext], w: WeightVector) -> int | None:
    """Advert id with the maximal rank; ties broken by lowest id.

    Returns None for an empty candidate set (the visit goes unserved).
    """
    return argmax_ranked([(ctx.advert_id, ad_rank(ctx, w)) for ctx in candidates])


def select_gsp(candidates: list[tuple[int, float]]) -> tuple[int, float] | None:
    """Winner and price under the generalized second-price rule.

    The highest bid wins (ties broken by lowest advert id) and pays the
    highest losing bid; a lone candidate pays its own bid. Returns None for
    an empty candidate set.
    """
    if not candidates:
        return None
    winner_id = None
    b1 = b2 = -1.0
    for advert_id, bid in candidates:
        if bid > b1 or (bid == b1 and advert_id < winner_id):
            if winner_id is not None and bid > b1:
                b2 = b1
            elif winner_id is not None:
                b2 = max(b2, bid)
            winner_id = advert_id
            b1 = max(b1, bid)
        elif bid > b2:
            b2 = bid
    price = b2 if b2 >= 0.0 else b1
    return winner_id, price
