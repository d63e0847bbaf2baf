#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Generate the test fixtures under tests/data.

corpus_en.jsonl   200 synthetic news chunks (<= 512 units) with entity spans
freq_en.tsv       wordfreq Zipf values for the fixture vocabulary
surprisal_en.jsonl  bigram surprisal (unigram prior from the Zipf table)
corpus_zh.jsonl   a few "/"-segmented Chinese records

Calibration tables are produced afterwards with `lstc calibrate` (see README).
Requires the `wordfreq` package. Output is deterministic for a given seed.
"""

import argparse
import json
import math
import random
import re
from collections import Counter, defaultdict
from pathlib import Path

from wordfreq import zipf_frequency

FIRST = ["Sarah", "James", "Priya", "Tom", "Aisha", "David", "Helen", "Marcus", "Li", "Owen",
         "Grace", "Ravi", "Emma", "Kofi", "Lucy", "Ahmed", "Claire", "Ian", "Nadia", "Rob"]
LAST = ["Thompson", "Okafor", "Patel", "Hughes", "Khan", "Walsh", "Murray", "Reid", "Chen",
        "Evans", "Doyle", "Shah", "Price", "Mensah", "Lowe", "Barker", "Ng", "Foster", "Quinn", "Hale"]
PLACES = ["London", "Leeds", "Cardiff", "Glasgow", "Belfast", "Bristol", "Hull", "Bath", "York",
          "Dundee", "Paris", "Berlin", "Madrid", "Tokyo", "Lagos", "Dublin", "Oslo", "Rome", "Kent", "Devon"]
ORGS = ["BBC", "NHS", "EU", "UN", "Ofcom", "Tesco", "Barclays", "Unilever", "Rolls-Royce",
        "the Treasury", "the Met Office", "Network Rail", "Sony", "Nissan", "Ford", "BP", "IMF",
        "the Bank of England", "Amnesty International", "the FA"]
COUNTRIES = ["UK", "US", "France", "Germany", "China", "India", "Japan", "Brazil", "Spain", "Italy"]
ROLES = ["chief executive", "minister", "spokesperson", "chairman", "analyst", "director",
         "economist", "coach", "council leader", "professor", "union leader", "head teacher"]
TOPICS = ["profits", "sales", "ticket prices", "waiting times", "energy bills", "house prices",
          "exports", "broadband coverage", "bus services", "school funding", "job cuts",
          "interest rates", "fuel duty", "rail fares", "film releases", "transfer fees"]
VERBS = ["rose", "fell", "climbed", "dropped", "slipped", "jumped", "recovered", "stalled"]
SAYS = ["said", "told reporters", "warned", "argued", "confirmed", "insisted", "admitted", "added"]
QUOTES = [
    "we are not going to change course now",
    "the figures show that demand remains strong",
    "families deserve clearer answers about the plan",
    "this is a difficult moment for the whole industry",
    "nobody expected the numbers to move so quickly",
    "the decision was taken after months of talks",
    "we will keep listening to customers and staff",
    "there is still a great deal of work to do",
    "the pressure on budgets is not going away",
    "our priority is to keep services running safely",
    "the evidence points in a very different direction",
    "investors have been waiting for a signal like this",
]
EVENTS = [
    "The announcement came after a long dispute over pay and conditions",
    "Critics said the proposals would do little to ease the backlog",
    "Officials expect the changes to take effect early next year",
    "The company has faced growing pressure from shareholders",
    "Opposition politicians called for an independent review",
    "Talks are due to resume later this week",
    "Local residents have campaigned against the plans for years",
    "The report also highlighted a sharp rise in complaints",
    "Some experts believe the worst of the slowdown is over",
    "The move is likely to be watched closely by rivals",
    "Staff were told about the decision at a meeting on Monday",
    "The scheme will be reviewed again in the autumn",
    "Regulators said they would examine the deal in detail",
    "Fans queued for hours outside the stadium before kick off",
    "Unions have threatened further strikes if talks fail",
]
MONTHS = ["January", "February", "March", "April", "May", "June", "July", "August",
          "September", "October", "November", "December"]
DAYS = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"]


class Builder:
    def __init__(self):
        self.text = ""
        self.entities = []

    def add(self, s):
        self.text += s

    def ent(self, s):
        self.entities.append({"surface": s, "start": len(self.text), "end": len(self.text) + len(s)})
        self.text += s


def sentence(rng):
    """Returns a list of (piece, is_entity) tuples forming one sentence."""
    person = (rng.choice(FIRST) + " " + rng.choice(LAST), True)
    place = (rng.choice(PLACES), True)
    org = rng.choice(ORGS)
    org_piece = [("the ", False), (org[4:], True)] if org.startswith("the ") else [(org, True)]
    country = (rng.choice(COUNTRIES), True)
    pct = f"{rng.randint(1, 40)}.{rng.randint(0, 9)}%"
    money = f"£{rng.randint(2, 900)}m"
    year = str(rng.randint(1998, 2024))
    k = rng.randrange(8)
    if k == 0:
        parts = [person, (f", the {rng.choice(ROLES)} of ", False), *org_piece,
                 (f", {rng.choice(SAYS)}: \"{rng.choice(QUOTES).capitalize()}.\"", False)]
    elif k == 1:
        parts = [(rng.choice(TOPICS).capitalize() + f" in ", False), place,
                 (f" {rng.choice(VERBS)} by {pct} in {rng.choice(MONTHS)}, according to ", False),
                 *org_piece, (".", False)]
    elif k == 2:
        parts = [*org_piece, (f" said it would spend {money} on new projects in ", False), place,
                 (f" by {year}.", False)]
    elif k == 3:
        parts = [(rng.choice(EVENTS), False), (" in ", False), place, (".", False)]
    elif k == 4:
        parts = [(f"Speaking on {rng.choice(DAYS)}, ", False), person, (" said the ", False), country,
                 (f" economy needed a \"clear plan\" for {rng.choice(TOPICS)}.", False)]
    elif k == 5:
        parts = [(f"{rng.choice(EVENTS)}, and ", False), person,
                 (f" is expected to meet officials from ", False), *org_piece, (" next month.", False)]
    elif k == 6:
        parts = [(f"Figures published on {rng.choice(DAYS)} showed {rng.choice(TOPICS)} across the ", False),
                 country, (f" {rng.choice(VERBS)} for the {rng.choice(['first', 'second', 'third'])} time since {year}.", False)]
    else:
        parts = [(f"\"{rng.choice(QUOTES).capitalize()},\" ", False), person, (f" {rng.choice(SAYS)}.", False)]
    return parts


def make_chunk(rng, idx, max_len=512, min_len=440):
    while True:
        b = Builder()
        while True:
            parts = sentence(rng)
            piece_len = sum(len(p) for p, _ in parts) + (1 if b.text else 0)
            if len(b.text) + piece_len > max_len:
                break
            if b.text:
                b.add(" ")
            for p, is_ent in parts:
                (b.ent if is_ent else b.add)(p)
        if len(b.text) >= min_len:
            return {"id": f"news-{idx:03d}", "text": b.text, "entities": b.entities}


WORD_RE = re.compile(r"[A-Za-z]+")
TOKEN_RE = re.compile(r"[A-Za-z]+|[0-9]+")


def bigram_surprisal(records, zipf):
    seqs = [[w.lower() for w in WORD_RE.findall(r["text"])] for r in records]
    bi = defaultdict(Counter)
    for s in seqs:
        for a, b in zip(["<s>"] + s, s):
            bi[a][b] += 1
    k = 50.0

    def prior(w):
        z = zipf.get(w, 0.0)
        return max(10 ** (z - 9), 1e-9)

    out = []
    for r, s in zip(records, seqs):
        vals = []
        for a, b in zip(["<s>"] + s, s):
            ctx = bi[a]
            total = sum(ctx.values())
            p = (ctx[b] + k * prior(b)) / (total + k)
            vals.append(round(-math.log(p), 6))
        out.append({"id": r["id"], "tokens": WORD_RE.findall(r["text"]), "surprisal": vals})
    return out


ZH = [
    "国家/统计局/今天/发布/数据/，/一季度/国内/生产/总值/同比/增长/百分之五/。",
    "北京/市政府/宣布/将/在/明年/新建/三十/所/学校/，/缓解/入学/压力/。",
    "上海/证券/交易所/表示/，/科技/企业/的/融资/规模/继续/扩大/。",
    "气象/部门/预计/，/未来/三天/华南/地区/将/出现/强/降雨/天气/。",
    "专家/认为/，/新能源/汽车/的/出口/仍/有/很大/增长/空间/。",
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "data"))
    ap.add_argument("--seed", type=int, default=20240517)
    ap.add_argument("--chunks", type=int, default=200)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    records = [make_chunk(rng, i) for i in range(args.chunks)]
    for r in records:
        for e in r["entities"]:
            assert r["text"][e["start"]:e["end"]] == e["surface"]
    with open(out / "corpus_en.jsonl", "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps({"id": r["id"], "text": r["text"], "lang": "english",
                                "entities": r["entities"]}, ensure_ascii=False) + "\n")

    vocab = sorted({t.lower() for r in records for t in TOKEN_RE.findall(r["text"])})
    zipf = {}
    for w in vocab:
        z = zipf_frequency(w, "en")
        if z > 0:
            zipf[w] = z
    with open(out / "freq_en.tsv", "w", encoding="utf-8") as f:
        for w in sorted(zipf):
            f.write(f"{w}\t{zipf[w]:.2f}\n")

    with open(out / "surprisal_en.jsonl", "w", encoding="utf-8") as f:
        for rec in bigram_surprisal(records, zipf):
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")

    with open(out / "corpus_zh.jsonl", "w", encoding="utf-8") as f:
        for i, t in enumerate(ZH):
            f.write(json.dumps({"id": f"zh-{i:02d}", "text": t, "lang": "presegmented"},
                               ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
