"""Regenerate the bundled synthetic pool in src/clmm_game/data/demo_pool.

Eight daily price rows (seven days) of a pool trading around q = 2 with six
NFT liquidity providers, one fungible vault, a same-day JIT position and a
mid-week entry and partial exit.
"""

import csv
import json
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "clmm_game" / "data" / "demo_pool"
START = date(2024, 1, 1)
DAYS = 7


def ts(d: date, hour: float) -> int:
    base = datetime(d.year, d.month, d.day, tzinfo=timezone.utc)
    return int((base + timedelta(hours=hour)).timestamp())


def main():
    rng = np.random.default_rng(20240101)
    q = [2.0]
    for _ in range(DAYS):
        q.append(round(q[-1] * float(np.exp(rng.normal(0, 0.04))), 6))
    p_y = [round(1.0 + float(rng.normal(0, 0.001)), 6) for _ in q]
    p_x = [round(qi * pyi * (1 + float(rng.normal(0, 0.002))), 6) for qi, pyi in zip(q, p_y)]

    events = []

    def mint(t, sender, pid, lo, hi, liq, nft=True):
        events.append(dict(kind="mint", timestamp=t, sender=sender, position_id=pid, is_nft=int(nft),
                           lower=lo, upper=hi, liquidity=liq, q_before="", q_after=""))

    def burn(t, sender, pid, lo, hi, liq):
        events.append(dict(kind="burn", timestamp=t, sender=sender, position_id=pid, is_nft="",
                           lower=lo, upper=hi, liquidity=liq, q_before="", q_after=""))

    eve = START - timedelta(days=1)
    mint(ts(eve, 1), "lp01", "p1", 1.5, 2.5, 2000.0)
    mint(ts(eve, 2), "lp02", "p2", 1.75, 2.25, 3000.0)
    mint(ts(eve, 3), "lp02", "p3", 1.0, 4.0, 400.0)
    mint(ts(eve, 4), "lp03", "p4", 1.25, 2.0, 1500.0)
    mint(ts(eve, 5), "lp04", "p5", 2.0, 3.0, 1200.0)
    mint(ts(eve, 6), "lp05", "p6", 1.8, 2.2, 2500.0)
    mint(ts(eve, 7), "lp06", "p7", 1.9, 2.1, 30.0)
    mint(ts(eve, 8), "vault", "v1", 1.0, 4.0, 800.0, nft=False)

    for d in range(DAYS):
        day = START + timedelta(days=d)
        hours = np.sort(rng.uniform(0.5, 23.5, size=12))
        path = [q[d]]
        for k in range(1, 12):
            frac = k / 12
            drift = q[d] * (q[d + 1] / q[d]) ** frac
            path.append(round(drift * float(np.exp(rng.normal(0, 0.01))), 6))
        path.append(q[d + 1])
        specials = {
            2: [(6.0, lambda t: mint(t, "jit", "j1", 1.9, 2.3, 5000.0)),
                (8.0, lambda t: burn(t, "jit", "j1", 1.9, 2.3, 5000.0))],
            3: [(12.0, lambda t: mint(t, "lp07", "p8", 1.6, 2.4, 1800.0))],
            4: [(15.0, lambda t: burn(t, "lp03", "p4", 1.25, 2.0, 500.0))],
        }.get(d, [])
        timeline = [(float(h), "swap", i) for i, h in enumerate(hours)]
        timeline += [(h, "special", fn) for h, fn in specials]
        timeline.sort(key=lambda x: x[0])
        for h, what, item in timeline:
            t = ts(day, h)
            if what == "special":
                item(t)
            else:
                events.append(dict(kind="swap", timestamp=t, sender=f"trader{item % 3}", position_id="",
                                   is_nft="", lower="", upper="", liquidity="",
                                   q_before=path[item], q_after=path[item + 1]))

    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "pool.json").write_text(json.dumps({"gamma": 0.003, "name": "demo"}, indent=2) + "\n")
    with open(OUT / "events.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(events[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(events)
    with open(OUT / "prices.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "q", "p_x", "p_y"])
        for d in range(DAYS + 1):
            w.writerow([(START + timedelta(days=d)).isoformat(), q[d], p_x[d], p_y[d]])


if __name__ == "__main__":
    main()
