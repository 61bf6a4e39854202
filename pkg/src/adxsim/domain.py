"""Domain model of the simulated ad exchange.

Entities: ad networks, each holding advertisers (one advert per advertiser by
default) and publishers; a world object aggregating them plus the run-wide
click ledger. Categories are plain integers in ``[0, category_count)``.

All monetary amounts are floats in dollars; rounding to cents happens only at
serialization time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

# Sub-stream tags so that world generation, visit generation and GA draws can
# never bleed into each other even when they share a user-facing seed.
STREAM_WORLD = 11
STREAM_VISITS = 23
STREAM_GA = 37

WORLD_FORMAT = "adxsim-world-v1"


def rng_stream(seed: int, tag: int) -> np.random.Generator:
    """Generator for one of the named sub-streams derived from `seed`."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(tag)]))


def derive_seed(base: int, *key: int) -> int:
    """Stable 63-bit integer seed derived from a base seed and a key path."""
    ss = np.random.SeedSequence([int(base), *[int(k) for k in key]])
    a, b = ss.generate_state(2)
    return int((int(a) << 31) ^ int(b))


@dataclass
class WorldConfig:
    """Size and attribute ranges of a generated exchange."""

    networks: int = 10
    advertisers_per_network: int = 10
    publishers_per_network: int = 100
    adverts_per_advertiser: int = 1
    categories: int = 20
    cpc_bid_range: tuple[float, float] = (0.2, 1.2)
    real_price_range: tuple[float, float] = (0.2, 1.2)
    ctr_range: tuple[float, float] = (0.0, 1.0)
    spam_prob_range: tuple[float, float] = (0.13, 0.16)
    fraud_prob_range: tuple[float, float] = (0.17, 0.20)

    def validate(self) -> None:
        if self.networks < 1:
            raise ValueError("networks must be >= 1")
        if self.advertisers_per_network < 1:
            raise ValueError("advertisers_per_network must be >= 1")
        if self.publishers_per_network < 1:
            raise ValueError("publishers_per_network must be >= 1")
        if self.adverts_per_advertiser < 1:
            raise ValueError("adverts_per_advertiser must be >= 1")
        if self.categories < 1:
            raise ValueError("categories must be >= 1")
        for name in ("cpc_bid_range", "real_price_range", "ctr_range",
                     "spam_prob_range", "fraud_prob_range"):
            lo, hi = getattr(self, name)
            if not (0.0 <= lo <= hi):
                raise ValueError(f"{name} must satisfy 0 <= lo <= hi")


@dataclass
class Advert:
    id: int
    advertiser_id: int
    category: int
    cpc_bid: float
    real_price: float
    ctr: float
    spam_prob: float
    # Ground-truth label drawn once at generation; the selection function only
    # ever sees spam_prob, while penalties and rules act on this label.
    is_spam: bool

    def __post_init__(self):
        if self.category < 0:
            raise ValueError("category must be non-negative")
        if self.cpc_bid <= 0 or self.real_price <= 0:
            raise ValueError("prices must be positive")
        if not (0.0 <= self.ctr <= 1.0):
            raise ValueError("ctr must be in [0, 1]")
        if not (0.0 <= self.spam_prob <= 1.0):
            raise ValueError("spam_prob must be in [0, 1]")


@dataclass
class Advertiser:
    id: int
    network_id: int
    adverts: list[int]
    potential_visits: int = 0
    received_impressions: int = 0
    spam_impressions: int = 0
    clicks_received: int = 0
    spam_clicks: int = 0
    revenue_paid: float = 0.0
    expelled: bool = False

    def __post_init__(self):
        if self.received_impressions > self.potential_visits:
            raise ValueError("received_impressions cannot exceed potential_visits")
        if self.spam_clicks > self.clicks_received:
            raise ValueError("spam_clicks cannot exceed clicks_received")
        if min(self.potential_visits, self.received_impressions,
               self.spam_impressions, self.clicks_received, self.spam_clicks) < 0:
            raise ValueError("counters must be non-negative")


@dataclass
class Publisher:
    id: int
    network_id: int
    category: int
    fraud_prob: float
    clicks_total: int = 0
    fraudulent_clicks: int = 0
    expelled: bool = False

    def __post_init__(self):
        if not (0.0 <= self.fraud_prob <= 1.0):
            raise ValueError("fraud_prob must be in [0, 1]")
        if self.fraudulent_clicks > self.clicks_total:
            raise ValueError("fraudulent_clicks cannot exceed clicks_total")
        if min(self.clicks_total, self.fraudulent_clicks) < 0:
            raise ValueError("counters must be non-negative")


@dataclass
class AdNetwork:
    id: int
    advertiser_ids: list[int]
    publisher_ids: list[int]
    visits_received: int = 0
    visits_delivered: int = 0
    income: float = 0.0
    expelled: bool = False

    def __post_init__(self):
        if min(self.visits_received, self.visits_delivered) < 0:
            raise ValueError("counters must be non-negative")


@dataclass(frozen=True)
class Visit:
    """One user visit: 1-based position in the stream plus where it landed."""

    seq: int
    publisher_id: int
    category: int


@dataclass(frozen=True)
class ClickRecord:
    visit_seq: int
    advert_id: int
    advertiser_id: int
    publisher_id: int
    price_charged: float
    was_spam_advert: bool
    was_fraudulent_click: bool

    def __post_init__(self):
        if self.price_charged < 0:
            raise ValueError("price_charged must be >= 0")


@dataclass
class WorldState:
    """Full state of the exchange; a plain value safe to deep-copy."""

    config: WorldConfig
    networks: dict[int, AdNetwork]
    advertisers: dict[int, Advertiser]
    publishers: dict[int, Publisher]
    adverts: dict[int, Advert]
    rng_seed: int
    visit_count_processed: int = 0
    income_total: float = 0.0
    click_ledger: list[ClickRecord] = field(default_factory=list)
    # Cache refreshed at generation time and at every governance checkpoint,
    # deliberately not per visit.
    category_max_cpc: dict[int, float] = field(default_factory=dict)

    def advert_network(self, advert_id: int) -> int:
        return self.advertisers[self.adverts[advert_id].advertiser_id].network_id

    def advert_active(self, advert_id: int) -> bool:
        ad = self.adverts[advert_id]
        adv = self.advertisers[ad.advertiser_id]
        return not adv.expelled and not self.networks[adv.network_id].expelled

    def publisher_active(self, publisher_id: int) -> bool:
        pub = self.publishers[publisher_id]
        return not pub.expelled and not self.networks[pub.network_id].expelled

    def active_publisher_ids(self) -> list[int]:
        return [p for p in sorted(self.publishers) if self.publisher_active(p)]


def refresh_category_max_cpc(world: WorldState) -> None:
    """Recompute the per-category maximum CPC bid over non-expelled adverts."""
    maxima: dict[int, float] = {}
    for ad_id in sorted(world.adverts):
        if not world.advert_active(ad_id):
            continue
        ad = world.adverts[ad_id]
        cur = maxima.get(ad.category, 0.0)
        if ad.cpc_bid > cur:
            maxima[ad.category] = ad.cpc_bid
    world.category_max_cpc = maxima


def generate_world(config: WorldConfig, seed: int) -> WorldState:
    """Build a fresh exchange with every stochastic attribute drawn from its
    configured range. Identical (config, seed) pairs yield identical worlds.

    Draw order (fixed for reproducibility): per advert category, cpc_bid,
    real_price, ctr, spam_prob, spam label; then per publisher category,
    fraud_prob. Entities are numbered contiguously network by network.
    """
    config.validate()
    rng = rng_stream(seed, STREAM_WORLD)

    networks: dict[int, AdNetwork] = {}
    advertisers: dict[int, Advertiser] = {}
    publishers: dict[int, Publisher] = {}
    adverts: dict[int, Advert] = {}

    adv_id = 0
    pub_id = 0
    ad_id = 0
    for net_id in range(config.networks):
        advertiser_ids = []
        publisher_ids = []
        for _ in range(config.advertisers_per_network):
            owned = []
            for _ in range(config.adverts_per_advertiser):
                category = int(rng.integers(0, config.categories))
                cpc = float(rng.uniform(*config.cpc_bid_range))
                real = float(rng.uniform(*config.real_price_range))
                ctr = float(rng.uniform(*config.ctr_range))
                spam_prob = float(rng.uniform(*config.spam_prob_range))
                is_spam = bool(rng.random() < spam_prob)
                adverts[ad_id] = Advert(ad_id, adv_id, category, cpc, real,
                                        ctr, spam_prob, is_spam)
                owned.append(ad_id)
                ad_id += 1
            advertisers[adv_id] = Advertiser(adv_id, net_id, owned)
            advertiser_ids.append(adv_id)
            adv_id += 1
        for _ in range(config.publishers_per_network):
            category = int(rng.integers(0, config.categories))
            fraud_prob = float(rng.uniform(*config.fraud_prob_range))
            publishers[pub_id] = Publisher(pub_id, net_id, category, fraud_prob)
            publisher_ids.append(pub_id)
            pub_id += 1
        networks[net_id] = AdNetwork(net_id, advertiser_ids, publisher_ids)

    world = WorldState(config=config, networks=networks, advertisers=advertisers,
                       publishers=publishers, adverts=adverts, rng_seed=int(seed))
    refresh_category_max_cpc(world)
    return world


def world_to_json(world: WorldState) -> str:
    """Serialize a world snapshot to stable, sorted-key JSON text.

    Lists are ordered by entity id and money fields are rounded to cents, so
    equal worlds serialize to byte-identical text (golden-file friendly).
    """
    doc = {
        "format": WORLD_FORMAT,
        "config": asdict(world.config),
        "rng_seed": world.rng_seed,
        "visit_count_processed": world.visit_count_processed,
        "income_total": round(world.income_total, 2),
        "networks": [asdict(world.networks[i]) for i in sorted(world.networks)],
        "advertisers": [
            {**asdict(world.advertisers[i]),
             "revenue_paid": round(world.advertisers[i].revenue_paid, 2)}
            for i in sorted(world.advertisers)
        ],
        "publishers": [asdict(world.publishers[i]) for i in sorted(world.publishers)],
        "adverts": [asdict(world.adverts[i]) for i in sorted(world.adverts)],
        "category_max_cpc": [[c, world.category_max_cpc[c]]
                             for c in sorted(world.category_max_cpc)],
        "click_ledger": [asdict(r) for r in world.click_ledger],
    }
    for net in doc["networks"]:
        net["income"] = round(net["income"], 2)
    return json.dumps(doc, sort_keys=True, indent=1)
