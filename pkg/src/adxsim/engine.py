"""Array-based simulation engine.

The visit loop runs inside one numba-jitted kernel over flat numpy arrays;
worlds are converted to a StaticWorld of read-only arrays plus RunBuffers of
mutable counters that can be reset and reused across runs. The pure-object
reference path in `simulation` mirrors these semantics operation for
operation, and the equivalence is pinned by tests.

If numba is unavailable the kernel runs as plain Python (slow but identical).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import accounting
from .accounting import PenaltyBreakdown, PenaltyCoefficients
from .domain import STREAM_VISITS, WorldState, rng_stream
from .governance import RuleThresholds

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

MODE_ASF = 0
MODE_GSP_COLLABORATIVE = 1
MODE_GSP_INDEPENDENT = 2

MODE_CODES = {
    "asf": MODE_ASF,
    "gsp_collaborative": MODE_GSP_COLLABORATIVE,
    "gsp_independent": MODE_GSP_INDEPENDENT,
}

EV_ADVERTISER = 0
EV_PUBLISHER = 1
EV_NETWORK = 2


def visit_uniforms(seed: int, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-visit uniforms indexed by visit position, derived from `seed`.

    Three draws per visit: publisher choice, click coin, fraud coin. All
    visit randomness for a run comes from these arrays, so candidate-set
    differences between modes never desynchronize the coin flips.
    """
    rng = rng_stream(seed, STREAM_VISITS)
    u_pub = rng.random(n)
    u_click = rng.random(n)
    u_fraud = rng.random(n)
    return u_pub, u_click, u_fraud


class StaticWorld:
    """Read-only array image of a WorldState plus id/index translation."""

    def __init__(self, world: WorldState):
        self.n_categories = world.config.categories
        self.ad_ids = np.array(sorted(world.adverts), dtype=np.int64)
        self.adv_ids = np.array(sorted(world.advertisers), dtype=np.int64)
        self.pub_ids = np.array(sorted(world.publishers), dtype=np.int64)
        self.net_ids = np.array(sorted(world.networks), dtype=np.int64)
        adv_index = {int(i): k for k, i in enumerate(self.adv_ids)}
        net_index = {int(i): k for k, i in enumerate(self.net_ids)}

        A, V, P, N = map(len, (self.ad_ids, self.adv_ids, self.pub_ids, self.net_ids))
        self.ad_advertiser = np.empty(A, dtype=np.int64)
        self.ad_network = np.empty(A, dtype=np.int64)
        self.ad_category = np.empty(A, dtype=np.int64)
        self.ad_cpc = np.empty(A, dtype=np.float64)
        self.ad_real = np.empty(A, dtype=np.float64)
        self.ad_ctr = np.empty(A, dtype=np.float64)
        self.ad_spam_prob = np.empty(A, dtype=np.float64)
        self.ad_is_spam = np.zeros(A, dtype=np.uint8)
        for k, ad_id in enumerate(self.ad_ids):
            ad = world.adverts[int(ad_id)]
            if not (0 <= ad.category < self.n_categories):
                raise ValueError("advert category outside configured range")
            owner = world.advertisers[ad.advertiser_id]
            self.ad_advertiser[k] = adv_index[ad.advertiser_id]
            self.ad_network[k] = net_index[owner.network_id]
            self.ad_category[k] = ad.category
            self.ad_cpc[k] = ad.cpc_bid
            self.ad_real[k] = ad.real_price
            self.ad_ctr[k] = ad.ctr
            self.ad_spam_prob[k] = ad.spam_prob
            self.ad_is_spam[k] = ad.is_spam

        self.adv_network = np.empty(V, dtype=np.int64)
        for k, adv_id in enumerate(self.adv_ids):
            self.adv_network[k] = net_index[world.advertisers[int(adv_id)].network_id]

        self.pub_network = np.empty(P, dtype=np.int64)
        self.pub_category = np.empty(P, dtype=np.int64)
        self.pub_fraud_prob = np.empty(P, dtype=np.float64)
        for k, pub_id in enumerate(self.pub_ids):
            pub = world.publishers[int(pub_id)]
            if not (0 <= pub.category < self.n_categories):
                raise ValueError("publisher category outside configured range")
            self.pub_network[k] = net_index[pub.network_id]
            self.pub_category[k] = pub.category
            self.pub_fraud_prob[k] = pub.fraud_prob

        self.net_member_count = np.zeros(N, dtype=np.int64)
        for net_id in self.net_ids:
            net = world.networks[int(net_id)]
            self.net_member_count[net_index[int(net_id)]] = (
                len(net.advertiser_ids) + len(net.publisher_ids))

        # Initial counters and flags, snapshotted so buffers can be reset.
        self.init_adv_counts = np.zeros((5, V), dtype=np.int64)
        for k, adv_id in enumerate(self.adv_ids):
            adv = world.advertisers[int(adv_id)]
            self.init_adv_counts[:, k] = (adv.potential_visits, adv.received_impressions,
                                          adv.spam_impressions, adv.clicks_received,
                                          adv.spam_clicks)
        self.init_adv_revenue = np.array(
            [world.advertisers[int(i)].revenue_paid for i in self.adv_ids])
        self.init_adv_expelled = np.array(
            [world.advertisers[int(i)].expelled for i in self.adv_ids], dtype=np.uint8)
        self.init_pub_counts = np.zeros((2, P), dtype=np.int64)
        for k, pub_id in enumerate(self.pub_ids):
            pub = world.publishers[int(pub_id)]
            self.init_pub_counts[:, k] = (pub.clicks_total, pub.fraudulent_clicks)
        self.init_pub_expelled = np.array(
            [world.publishers[int(i)].expelled for i in self.pub_ids], dtype=np.uint8)
        self.init_net_counts = np.zeros((2, N), dtype=np.int64)
        self.init_net_income = np.zeros(N)
        self.init_net_expelled = np.zeros(N, dtype=np.uint8)
        for k, net_id in enumerate(self.net_ids):
            net = world.networks[int(net_id)]
            self.init_net_counts[:, k] = (net.visits_received, net.visits_delivered)
            self.init_net_income[k] = net.income
            self.init_net_expelled[k] = net.expelled

        self.init_income = world.income_total
        self.init_visits = world.visit_count_processed

    @property
    def sizes(self) -> tuple[int, int, int, int]:
        return (len(self.ad_ids), len(self.adv_ids),
                len(self.pub_ids), len(self.net_ids))


class RunBuffers:
    """Mutable per-run state; allocate once, reset before every run."""

    def __init__(self, static: StaticWorld, max_visits: int,
                 record_ledger: bool = False, trace: bool = False):
        A, V, P, N = static.sizes
        C = static.n_categories
        self.adv_potential = np.zeros(V, dtype=np.int64)
        self.adv_received = np.zeros(V, dtype=np.int64)
        self.adv_spam_impr = np.zeros(V, dtype=np.int64)
        self.adv_clicks = np.zeros(V, dtype=np.int64)
        self.adv_spam_clicks = np.zeros(V, dtype=np.int64)
        self.adv_revenue = np.zeros(V)
        self.adv_seen = np.zeros(V, dtype=np.int64)
        self.adv_expelled = np.zeros(V, dtype=np.uint8)
        self.pub_clicks = np.zeros(P, dtype=np.int64)
        self.pub_fraud_clicks = np.zeros(P, dtype=np.int64)
        self.pub_expelled = np.zeros(P, dtype=np.uint8)
        self.net_recv = np.zeros(N, dtype=np.int64)
        self.net_deliv = np.zeros(N, dtype=np.int64)
        self.net_income = np.zeros(N)
        self.net_expelled = np.zeros(N, dtype=np.uint8)
        # scratch rebuilt inside the kernel
        self.cat_start = np.zeros(C + 1, dtype=np.int64)
        self.cat_items = np.zeros(A, dtype=np.int64)
        self.act_pubs = np.zeros(P, dtype=np.int64)
        self.maxcpc = np.zeros(C)
        self.net_fraud_scratch = np.zeros(N, dtype=np.int64)
        n_led = max_visits if record_ledger else 0
        self.led_seq = np.zeros(n_led, dtype=np.int64)
        self.led_advert = np.zeros(n_led, dtype=np.int64)
        self.led_publisher = np.zeros(n_led, dtype=np.int64)
        self.led_price = np.zeros(n_led)
        self.led_spam = np.zeros(n_led, dtype=np.uint8)
        self.led_fraud = np.zeros(n_led, dtype=np.uint8)
        cap_ev = A + V + P + N
        self.ev_seq = np.zeros(cap_ev, dtype=np.int64)
        self.ev_kind = np.zeros(cap_ev, dtype=np.int64)
        self.ev_entity = np.zeros(cap_ev, dtype=np.int64)
        n_tr = max_visits if trace else 0
        self.trace_advert = np.zeros(n_tr, dtype=np.int64)
        self.trace_publisher = np.zeros(n_tr, dtype=np.int64)

    def reset(self, static: StaticWorld) -> None:
        self.adv_potential[:] = static.init_adv_counts[0]
        self.adv_received[:] = static.init_adv_counts[1]
        self.adv_spam_impr[:] = static.init_adv_counts[2]
        self.adv_clicks[:] = static.init_adv_counts[3]
        self.adv_spam_clicks[:] = static.init_adv_counts[4]
        self.adv_revenue[:] = static.init_adv_revenue
        self.adv_seen[:] = -1
        self.adv_expelled[:] = static.init_adv_expelled
        self.pub_clicks[:] = static.init_pub_counts[0]
        self.pub_fraud_clicks[:] = static.init_pub_counts[1]
        self.pub_expelled[:] = static.init_pub_expelled
        self.net_recv[:] = static.init_net_counts[0]
        self.net_deliv[:] = static.init_net_counts[1]
        self.net_income[:] = static.init_net_income
        self.net_expelled[:] = static.init_net_expelled


@njit(cache=True)
def _kernel(  # noqa: C901 - one hot loop on purpose
        # static advert/publisher/network data
        ad_advertiser, ad_network, ad_category, ad_cpc, ad_real, ad_ctr,
        ad_spam_prob, ad_is_spam, adv_network,
        pub_network, pub_category, pub_fraud_prob, net_member_count,
        # mutable counters
        adv_potential, adv_received, adv_spam_impr, adv_clicks,
        adv_spam_clicks, adv_revenue, adv_seen, adv_expelled,
        pub_clicks, pub_fraud_clicks, pub_expelled,
        net_recv, net_deliv, net_income, net_expelled,
        # scratch
        cat_start, cat_items, act_pubs, maxcpc, net_fraud,
        # run parameters
        theta, mode, printed_cost, income0,
        frac, adv_min, pub_min, net_min, interval,
        u_pub, u_click, u_fraud, n_visits, start_seq,
        # outputs
        record_ledger, led_seq, led_advert, led_publisher, led_price,
        led_spam, led_fraud,
        ev_seq, ev_kind, ev_entity,
        trace_on, trace_advert, trace_publisher):
    A = ad_advertiser.shape[0]
    V = adv_potential.shape[0]
    P = pub_network.shape[0]
    N = net_recv.shape[0]
    C = cat_start.shape[0] - 1

    # --- candidate CSR, active publishers, category maxima ---
    def _rebuild():
        for c in range(C + 1):
            cat_start[c] = 0
        for a in range(A):
            if not adv_expelled[ad_advertiser[a]] and not net_expelled[ad_network[a]]:
                cat_start[ad_category[a] + 1] += 1
        for c in range(C):
            cat_start[c + 1] += cat_start[c]
        fill = cat_start.copy()
        for a in range(A):  # ascending advert index keeps per-category id order
            if not adv_expelled[ad_advertiser[a]] and not net_expelled[ad_network[a]]:
                c = ad_category[a]
                cat_items[fill[c]] = a
                fill[c] += 1
        n_act = 0
        for p in range(P):
            if not pub_expelled[p] and not net_expelled[pub_network[p]]:
                act_pubs[n_act] = p
                n_act += 1
        for c in range(C):
            maxcpc[c] = 0.0
        for a in range(A):
            if not adv_expelled[ad_advertiser[a]] and not net_expelled[ad_network[a]]:
                c = ad_category[a]
                if ad_cpc[a] > maxcpc[c]:
                    maxcpc[c] = ad_cpc[a]
        return n_act

    n_act_pubs = _rebuild()
    income = income0
    spam_rev = 0.0
    fraud_rev = 0.0
    n_led = 0
    n_ev = 0

    for i in range(n_visits):
        seq = start_seq + i + 1
        if n_act_pubs > 0:
            idx = int(u_pub[i] * n_act_pubs)
            if idx >= n_act_pubs:
                idx = n_act_pubs - 1
            p = act_pubs[idx]
            c = pub_category[p]
            vn = pub_network[p]

            best = -1
            price_if_click = 0.0
            if mode == 0:  # weighted-rank selection, first-price on click
                bestv = -1.0
                fraudvar = 1.0 - pub_fraud_prob[p]
                mc = maxcpc[c]
                for j in range(cat_start[c], cat_start[c + 1]):
                    a = cat_items[j]
                    netw = ad_network[a]
                    r = net_recv[netw]
                    d = net_deliv[netw]
                    if r + d == 0:
                        an_sat = 0.5
                    else:
                        an_sat = 1.0 - r / (r + d)
                    adval = ad_ctr[a] * ad_cpc[a] / mc
                    v = ad_advertiser[a]
                    pot = adv_potential[v]
                    rec = adv_received[v]
                    if pot + rec == 0:
                        ratio = 0.5
                    else:
                        ratio = pot / (pot + rec)
                    adv_sat = ratio * adval
                    spamvar = 1.0 - ad_spam_prob[a]
                    if printed_cost:
                        cost = ad_cpc[a] / (ad_cpc[a] + ad_real[a])
                    else:
                        cost = ad_real[a] / (ad_cpc[a] + ad_real[a])
                    score = (theta[0] * an_sat + theta[1] * adv_sat
                             + theta[2] * spamvar + theta[3] * cost
                             + theta[4] * fraudvar + theta[5] * adval)
                    if score > bestv:
                        bestv = score
                        best = a
                if best >= 0:
                    price_if_click = ad_cpc[best]
            else:  # second-price auction on the bid
                b1 = -1.0
                b2 = -1.0
                for j in range(cat_start[c], cat_start[c + 1]):
                    a = cat_items[j]
                    if mode == 2 and ad_network[a] != vn:
                        continue
                    b = ad_cpc[a]
                    if b > b1:
                        b2 = b1
                        b1 = b
                        best = a
                    elif b > b2:
                        b2 = b
                if best >= 0:
                    price_if_click = b2 if b2 >= 0.0 else b1

            if best >= 0:
                for j in range(cat_start[c], cat_start[c + 1]):
                    a = cat_items[j]
                    if mode == 2 and ad_network[a] != vn:
                        continue
                    v = ad_advertiser[a]
                    if adv_seen[v] != seq:
                        adv_seen[v] = seq
                        adv_potential[v] += 1
                aw = ad_advertiser[best]
                adv_received[aw] += 1
                if ad_is_spam[best]:
                    adv_spam_impr[aw] += 1
                net_deliv[ad_network[best]] += 1
                net_recv[vn] += 1
                if trace_on:
                    trace_advert[i] = best
                    trace_publisher[i] = p
                if u_click[i] < ad_ctr[best]:
                    price = price_if_click
                    spam = ad_is_spam[best]
                    fraud = u_fraud[i] < pub_fraud_prob[p]
                    adv_clicks[aw] += 1
                    if spam:
                        adv_spam_clicks[aw] += 1
                    adv_revenue[aw] += price
                    pub_clicks[p] += 1
                    if fraud:
                        pub_fraud_clicks[p] += 1
                    net_income[vn] += price
                    income += price
                    if spam:
                        spam_rev += price
                    if fraud:
                        fraud_rev += price
                    if record_ledger:
                        led_seq[n_led] = seq
                        led_advert[n_led] = best
                        led_publisher[n_led] = p
                        led_price[n_led] = price
                        led_spam[n_led] = spam
                        led_fraud[n_led] = fraud
                        n_led += 1
            else:
                if trace_on:
                    trace_advert[i] = -1
                    trace_publisher[i] = p
        else:
            if trace_on:
                trace_advert[i] = -1
                trace_publisher[i] = -1

        if seq % interval == 0:
            for v in range(V):
                if not adv_expelled[v] and adv_received[v] > adv_min:
                    if adv_spam_impr[v] / adv_received[v] > frac:
                        adv_expelled[v] = 1
                        ev_seq[n_ev] = seq
                        ev_kind[n_ev] = 0
                        ev_entity[n_ev] = v
                        n_ev += 1
            for pp in range(P):
                if not pub_expelled[pp] and pub_clicks[pp] > pub_min:
                    if pub_fraud_clicks[pp] / pub_clicks[pp] > frac:
                        pub_expelled[pp] = 1
                        ev_seq[n_ev] = seq
                        ev_kind[n_ev] = 1
                        ev_entity[n_ev] = pp
                        n_ev += 1
            for nn in range(N):
                net_fraud[nn] = 0
            for v in range(V):
                if adv_received[v] > adv_min and adv_spam_impr[v] / adv_received[v] > frac:
                    net_fraud[adv_network[v]] += 1
            for pp in range(P):
                if pub_clicks[pp] > pub_min and pub_fraud_clicks[pp] / pub_clicks[pp] > frac:
                    net_fraud[pub_network[pp]] += 1
            for nn in range(N):
                if net_expelled[nn]:
                    continue
                if net_recv[nn] + net_deliv[nn] <= net_min:
                    continue
                if net_member_count[nn] > 0 and net_fraud[nn] / net_member_count[nn] >= frac:
                    net_expelled[nn] = 1
                    ev_seq[n_ev] = seq
                    ev_kind[n_ev] = 2
                    ev_entity[n_ev] = nn
                    n_ev += 1
                    for v in range(V):
                        if adv_network[v] == nn:
                            adv_expelled[v] = 1
                    for pp in range(P):
                        if pub_network[pp] == nn:
                            pub_expelled[pp] = 1
            n_act_pubs = _rebuild()

    return income, spam_rev, fraud_rev, n_led, n_ev


@dataclass
class RunResult:
    income: float
    spam_revenue: float
    fraud_revenue: float
    n_clicks: int
    n_events: int
    visits: int


def run_visits(static: StaticWorld, buffers: RunBuffers, *,
               mode: int, theta: np.ndarray, printed_cost: bool,
               thresholds: RuleThresholds, visits: int, seed: int | None = None,
               uniforms: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
               record_ledger: bool = False, trace: bool = False) -> RunResult:
    """Reset buffers and run `visits` visits of one simulation.

    Pass `uniforms` (from visit_uniforms) to share one pre-drawn visit stream
    across many runs; otherwise it is derived from `seed`.
    """
    buffers.reset(static)
    if uniforms is None:
        if seed is None:
            raise ValueError("either seed or uniforms is required")
        uniforms = visit_uniforms(seed, visits)
    u_pub, u_click, u_fraud = uniforms
    if u_pub.shape[0] < visits:
        raise ValueError("uniform arrays shorter than the visit count")
    income, spam_rev, fraud_rev, n_led, n_ev = _kernel(
        static.ad_advertiser, static.ad_network, static.ad_category,
        static.ad_cpc, static.ad_real, static.ad_ctr,
        static.ad_spam_prob, static.ad_is_spam, static.adv_network,
        static.pub_network, static.pub_category, static.pub_fraud_prob,
        static.net_member_count,
        buffers.adv_potential, buffers.adv_received, buffers.adv_spam_impr,
        buffers.adv_clicks, buffers.adv_spam_clicks, buffers.adv_revenue,
        buffers.adv_seen, buffers.adv_expelled,
        buffers.pub_clicks, buffers.pub_fraud_clicks, buffers.pub_expelled,
        buffers.net_recv, buffers.net_deliv, buffers.net_income,
        buffers.net_expelled,
        buffers.cat_start, buffers.cat_items, buffers.act_pubs,
        buffers.maxcpc, buffers.net_fraud_scratch,
        np.asarray(theta, dtype=np.float64), mode, int(printed_cost),
        static.init_income,
        thresholds.fraud_fraction, thresholds.advertiser_min_adverts,
        thresholds.publisher_min_clicks, thresholds.network_min_visits,
        thresholds.checkpoint_interval,
        u_pub, u_click, u_fraud, visits, static.init_visits,
        int(record_ledger), buffers.led_seq, buffers.led_advert,
        buffers.led_publisher, buffers.led_price, buffers.led_spam,
        buffers.led_fraud,
        buffers.ev_seq, buffers.ev_kind, buffers.ev_entity,
        int(trace), buffers.trace_advert, buffers.trace_publisher)
    return RunResult(income=income, spam_revenue=spam_rev, fraud_revenue=fraud_rev,
                     n_clicks=n_led, n_events=n_ev, visits=visits)


def penalties_from_buffers(static: StaticWorld, buffers: RunBuffers,
                           result: RunResult,
                           coefficients: PenaltyCoefficients) -> PenaltyBreakdown:
    """Penalty breakdown computed directly from run arrays.

    Iteration order (ascending entity index) and plain sequential sums match
    `accounting.compute_penalties` bit for bit on worlds with empty initial
    ledgers; spam/fraud click sums come off the kernel's in-order
    accumulators, so the ledger is not needed.
    """
    A, V, P, N = static.sizes
    coeff = coefficients

    net_sum = [0.0] * N
    net_cnt = [0] * N
    for v in range(V):
        if not buffers.adv_expelled[v]:
            n = static.adv_network[v]
            net_sum[n] += buffers.adv_revenue[v]
            net_cnt[n] += 1
    net_mean = [net_sum[n] / net_cnt[n] if net_cnt[n] else 0.0 for n in range(N)]

    p1 = 0.0
    c1 = 0
    for v in range(V):
        if buffers.adv_expelled[v]:
            continue
        pot = buffers.adv_potential[v]
        ratio = 1.0 if pot == 0 else buffers.adv_received[v] / pot
        if ratio < accounting.IMPRESSION_SHARE_FLOOR:
            p1 += coeff.starved_advertisers * net_mean[static.adv_network[v]]
            c1 += 1

    # Valid whenever the run started from an empty ledger (the GA path always
    # does): every spam/fraud click of the run is in these counters.
    p2 = coeff.spam_clicks * result.spam_revenue
    c2 = int(buffers.adv_spam_clicks.sum())
    p5 = coeff.fraud_clicks * result.fraud_revenue
    c5 = int(buffers.pub_fraud_clicks.sum())

    p3 = 0.0
    c3 = 0
    overpriced = np.zeros(V, dtype=np.uint8)
    for a in range(A):
        if static.ad_cpc[a] > accounting.OVERPRICE_FACTOR * static.ad_real[a]:
            overpriced[static.ad_advertiser[a]] = 1
    for v in range(V):
        if overpriced[v]:
            p3 += coeff.overpriced_campaigns * buffers.adv_revenue[v]
            c3 += 1

    p4 = 0.0
    c4 = 0
    for n in range(N):
        if buffers.net_expelled[n]:
            continue
        if buffers.net_recv[n] < accounting.IMBALANCE_FLOOR * buffers.net_deliv[n]:
            p4 += coeff.network_imbalance * buffers.net_income[n]
            c4 += 1

    return PenaltyBreakdown(p1, p2, p3, p4, p5, c1, c2, c3, c4, c5)
