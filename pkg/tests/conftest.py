import pytest

from adxsim.domain import (Advert, Advertiser, AdNetwork, Publisher,
                           WorldConfig, WorldState, refresh_category_max_cpc)


def build_world(networks, categories=1):
    """Hand-built world for precise scenarios.

    `networks` is a list of dicts with "advertisers" and "publishers" lists;
    each advertiser dict may carry advert attributes (cpc, real, ctr,
    spam_prob, is_spam, category) and counter overrides, each publisher dict
    a category, fraud_prob and counter overrides.
    """
    nets, advs, pubs, ads = {}, {}, {}, {}
    adv_id = pub_id = ad_id = 0
    for net_id, net_spec in enumerate(networks):
        a_ids, p_ids = [], []
        for a in net_spec.get("advertisers", []):
            ads[ad_id] = Advert(
                id=ad_id, advertiser_id=adv_id,
                category=a.get("category", 0),
                cpc_bid=a.get("cpc", 0.6), real_price=a.get("real", 0.6),
                ctr=a.get("ctr", 0.5), spam_prob=a.get("spam_prob", 0.15),
                is_spam=a.get("is_spam", False))
            advs[adv_id] = Advertiser(
                id=adv_id, network_id=net_id, adverts=[ad_id],
                potential_visits=a.get("potential", 0),
                received_impressions=a.get("received", 0),
                spam_impressions=a.get("spam_impressions", 0),
                clicks_received=a.get("clicks", 0),
                spam_clicks=a.get("spam_clicks", 0),
                revenue_paid=a.get("revenue", 0.0),
                expelled=a.get("expelled", False))
            a_ids.append(adv_id)
            adv_id += 1
            ad_id += 1
        for p in net_spec.get("publishers", []):
            pubs[pub_id] = Publisher(
                id=pub_id, network_id=net_id,
                category=p.get("category", 0),
                fraud_prob=p.get("fraud_prob", 0.18),
                clicks_total=p.get("clicks", 0),
                fraudulent_clicks=p.get("fraud_clicks", 0),
                expelled=p.get("expelled", False))
            p_ids.append(pub_id)
            pub_id += 1
        nets[net_id] = AdNetwork(
            id=net_id, advertiser_ids=a_ids, publisher_ids=p_ids,
            visits_received=net_spec.get("visits_received", 0),
            visits_delivered=net_spec.get("visits_delivered", 0),
            income=net_spec.get("income", 0.0),
            expelled=net_spec.get("expelled", False))
    config = WorldConfig(
        networks=len(networks),
        advertisers_per_network=max(
            [len(n.get("advertisers", [])) for n in networks] + [1]),
        publishers_per_network=max(
            [len(n.get("publishers", [])) for n in networks] + [1]),
        categories=categories)
    world = WorldState(config=config, networks=nets, advertisers=advs,
                       publishers=pubs, adverts=ads, rng_seed=0)
    refresh_category_max_cpc(world)
    return world


@pytest.fixture
def world_builder():
    return build_world


def pytest_terminal_summary(terminalreporter):
    import sys
    for name, module in sys.modules.items():
        if name.endswith("test_acceptance"):
            lines = getattr(module, "ACCEPTANCE_LINES", None)
            if lines:
                terminalreporter.section("acceptance criteria")
                for line in lines:
                    terminalreporter.write_line(line)
            return
