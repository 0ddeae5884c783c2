#!/usr/bin/env python3
"""Deterministically regenerate everything under fixtures/.

Self-contained on purpose: counting, substitution and request hashing are
re-implemented here with plain stdlib code so the fixtures stay independent
of the package under test. Every structural assumption the test suite leans
on (frequency thresholds, span bounds, coverage of the replay cassettes) is
asserted before files are written.

Usage: python scripts/make_fixtures.py [--out fixtures]
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
from fractions import Fraction
from itertools import product
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
PINYIN_TSV = REPO / "src" / "homoprobe" / "data" / "pinyin_table.tsv"

SLANG_PLAN = [
    # (word, instance count, MT transliteration, slang gloss)
    ("尼玛", 60, "Nima", "f**k your mother"),
    ("特么", 51, "Teme", "what the f**k"),
    ("卧槽", 22, "Wocao", "f**k"),
    ("草泥马", 22, "Caonima", "f**k your mother"),
    ("劳资", 12, "Laozi", "I"),
]

# Top-5 generated forms per slang word, ranked by mean human rating.
RANKED_FORMS = {
    "尼玛": ["你妈", "尼妈", "泥马", "尼马", "泥玛"],
    "特么": ["他妈", "她妈", "它妈", "踏妈", "他玛"],
    "卧槽": ["我操", "我艹", "窝艹", "窝操", "我草"],
    "劳资": ["老子", "老资", "老自", "劳子", "劳自"],
    "草泥马": ["艹泥马", "操你妈", "艹你妈", "草你妈", "草尼妈"],
}

EMOTIONS = ("anger", "joy", "sadness", "surprise", "fear", "neutral")
QE_MODELS = ("qe-small", "qe-medium", "qe-large")
EMOTION_MODEL = "emo-base"

# --- Chinese text pools (no character overlaps the homophone pools) -----------

PREFIXES = ["", "今天", "真是", "唉，", "刚刚", "说真的，", "一大早", "大晚上的"]
BODIES = [
    "这公交车又晚点了",
    "外卖等了一个钟头还没到",
    "电脑蓝屏把稿都弄没了",
    "排队排了四十分钟",
    "加班到半夜还被催",
    "快递又给弄丢了",
    "游戏掉线掉到心态爆炸",
    "客服踢皮球踢了一下午",
    "地铁挤得门都关不上",
    "演唱会票三秒就没了",
    "食堂饭卡又刷不出来",
    "宿舍断电断到现在",
]
TAILS = ["", "。", "！", "？？", "……", "！！！"]

FILLERS = [
    "天气好差啊出门就淋成落汤鸡",
    "公交车又错过了只能走回去",
    "真是气死人了这事没完",
    "这也太离谱了吧谁顶得住",
    "考试没过暑假还要重修",
    "手机摔坏了屏幕全是裂纹",
    "明天还要上班想想就头大",
    "排队排了一小时就买到一杯",
    "外卖又送错了还洒了一半",
    "会议开到半夜脑袋嗡嗡的",
    "股票又跌了不敢看账户",
    "邻居装修吵死了根本睡不着",
    "快递丢了客服还让我等",
    "电脑蓝屏两次文档全没了",
    "彻底无语了这都能搞砸",
    "心态崩了今天什么都不顺",
    "笑不活了这视频也太逗了",
    "开心到飞起终于拿到offer了",
    "难受想哭一整天都提不起劲",
    "吓人一跳半夜门自己开了",
    "平平无奇的一天上班下班",
    "今天運气爆棚抽奖居然中了",
]

MT_BODIES = [
    ", the bus was late again today.",
    ", the delivery took a whole hour and still nothing came.",
    ", the computer crashed and ate my draft.",
    ", I queued for forty minutes for one cup.",
    ", they kept pushing me while I worked past midnight.",
    ", the courier lost my parcel again.",
    ", the game disconnected three times in a row.",
    ", customer service passed me around all afternoon.",
    ", the subway was packed so the doors would not close.",
    ", the concert tickets sold out in three seconds.",
    ", the canteen card reader failed again.",
    ", the dorm power has been out for hours.",
]
REF_BODIES = [
    "the bus was late again today.",
    "the delivery took a whole hour and still nothing came.",
    "the computer crashed and ate my draft.",
    "I queued for forty minutes for one cup.",
    "they kept pushing me while I worked past midnight.",
    "the courier lost my parcel again.",
    "the game disconnected three times in a row.",
    "customer service passed me around all afternoon.",
    "the subway was packed so the doors would not close.",
    "the concert tickets sold out in three seconds.",
    "the canteen card reader failed again.",
    "the dorm power has been out for hours.",
]

NO_SLANG_SOURCES = [
    "周末去公园走了一圈心情舒畅",
    "新买的耳机音质意外地不错",
    "楼下面馆换了菜单味道一般",
    "电影院重映的片票卖得挺快",
    "健身房年卡终于用上了第一次",
    "阳台的花开了一整排很好看",
    "图书馆温书的人比想象的多",
    "夜跑五公里配速稳住了",
]

# --- Published correlations (4-decimal originals and percent tables) ----------

PUBLISHED_RAW = {
    "FT-COMETKIWI": {
        "spearman": {"G0": "0.2617", "M1G1": "0.2523", "M1G2": "0.2604", "M1G3": "0.2694", "M1G4": "0.2770", "M1G5": "0.2652"},
        "pearson": {"G0": "0.3211", "M1G1": "0.3014", "M1G2": "0.3081", "M1G3": "0.3276", "M1G4": "0.3315", "M1G5": "0.3100"},
    },
    "FT-TransQuest": {
        "spearman": {"G0": "0.2518", "M1G1": "0.2664", "M1G2": "0.2725", "M1G3": "0.2537", "M1G4": "0.2698", "M1G5": "0.2770"},
        "pearson": {"G0": "0.2954", "M1G1": "0.3028", "M1G2": "0.3144", "M1G3": "0.3019", "M1G4": "0.3238", "M1G5": "0.3183"},
    },
    "CFT-TransQuest": {
        "spearman": {"G0": "0.2853", "M1G1": "0.2609", "M1G2": "0.2709", "M1G3": "0.2583", "M1G4": "0.2380", "M1G5": "0.2451"},
        "pearson": {"G0": "0.3219", "M1G1": "0.2987", "M1G2": "0.3061", "M1G3": "0.3013", "M1G4": "0.2788", "M1G5": "0.2806"},
    },
    "MTL-XLM-V-base": {
        "spearman": {"G0": "0.2179", "M1G1": "0.2139", "M1G2": "0.2475", "M1G3": "0.2207", "M1G4": "0.2439", "M1G5": "0.2181"},
        "pearson": {"G0": "0.2139", "M1G1": "0.2247", "M1G2": "0.2358", "M1G3": "0.2070", "M1G4": "0.2284", "M1G5": "0.2239"},
    },
    "MTL-XLM-R-large": {
        "spearman": {"G0": "0.1958", "M1G1": "0.1913", "M1G2": "0.1904", "M1G3": "0.1848", "M1G4": "0.1915", "M1G5": "0.1974"},
        "pearson": {"G0": "0.1841", "M1G1": "0.0076", "M1G2": "0.1419", "M1G3": "0.1865", "M1G4": "0.1861", "M1G5": "0.0935"},
    },
    "Mixtral-8x7B": {
        "spearman": {"G0": "0.1886", "M1G1": "0.0910", "M1G2": "0.0755", "M1G3": "0.0538", "M1G4": "0.0751", "M1G5": "0.1218"},
        "pearson": {"G0": "0.1984", "M1G1": "-0.0625", "M1G2": "-0.0625", "M1G3": "0.0817", "M1G4": "0.0310", "M1G5": "-0.0624"},
    },
    "Deepseek-67B": {
        "spearman": {"G0": "0.2073", "M1G1": "0.1899", "M1G2": "0.1533", "M1G3": "0.1977", "M1G4": "0.0905", "M1G5": "0.1289"},
        "pearson": {"G0": "0.1338", "M1G1": "0.0878", "M1G2": "0.0609", "M1G3": "0.1441", "M1G4": "0.0047", "M1G5": "0.1342"},
    },
    "FT-Yi-34B": {
        "spearman": {"G0": "0.3413", "M1G1": "0.4133", "M1G2": "0.2620", "M1G3": "0.2919", "M1G4": "0.2838", "M1G5": "0.1880"},
        "pearson": {"G0": "0.3485", "M1G1": "0.4223", "M1G2": "0.2689", "M1G3": "0.3049", "M1G4": "0.2825", "M1G5": "0.2216"},
    },
    "FT-Deepseek-67B": {
        "spearman": {"G0": "0.2802", "M1G1": "0.2320", "M1G2": "0.2678", "M1G3": "0.2619", "M1G4": "0.3528", "M1G5": "0.2962"},
        "pearson": {"G0": "0.2469", "M1G1": "0.2756", "M1G2": "0.2444", "M1G3": "0.2780", "M1G4": "0.3833", "M1G5": "0.3305"},
    },
}

PUBLISHED_PCT = {
    "FT-COMETKIWI": {
        "spearman": {"M1G1": "-3.59", "M1G2": "-0.50", "M1G3": "+2.94", "M1G4": "+5.85", "M1G5": "+1.34"},
        "pearson": {"M1G1": "-6.13", "M1G2": "-4.05", "M1G3": "+1.99", "M1G4": "+3.21", "M1G5": "-3.45"},
    },
    "FT-TransQuest": {
        "spearman": {"M1G1": "+5.79", "M1G2": "+8.21", "M1G3": "+0.77", "M1G4": "+7.17", "M1G5": "+9.99"},
        "pearson": {"M1G1": "+2.51", "M1G2": "+6.43", "M1G3": "+2.20", "M1G4": "+9.62", "M1G5": "+7.74"},
    },
    "CFT-TransQuest": {
        "spearman": {"M1G1": "-8.55", "M1G2": "-5.06", "M1G3": "-9.46", "M1G4": "-16.57", "M1G5": "-14.09"},
        "pearson": {"M1G1": "-7.21", "M1G2": "-4.90", "M1G3": "-6.40", "M1G4": "-13.37", "M1G5": "-12.84"},
    },
    "MTL-XLM-V-base": {
        "spearman": {"M1G1": "-1.83", "M1G2": "+13.58", "M1G3": "+1.29", "M1G4": "+11.92", "M1G5": "+0.09"},
        "pearson": {"M1G1": "+5.03", "M1G2": "+10.26", "M1G3": "-3.23", "M1G4": "+6.79", "M1G5": "+4.67"},
    },
    "MTL-XLM-R-large": {
        "spearman": {"M1G1": "-2.30", "M1G2": "-2.76", "M1G3": "-5.61", "M1G4": "-2.20", "M1G5": "+0.82"},
        "pearson": {"M1G1": "-95.88", "M1G2": "-22.98", "M1G3": "+1.30", "M1G4": "+1.09", "M1G5": "-49.17"},
    },
    "Mixtral-8x7B": {
        "spearman": {"M1G1": "-51.73", "M1G2": "-59.97", "M1G3": "-71.46", "M1G4": "-60.18", "M1G5": "-35.41"},
        "pearson": {"M1G1": "-131.45", "M1G2": "-131.45", "M1G3": "-58.79", "M1G4": "-84.36", "M1G5": "-131.35"},
    },
    "Deepseek-67B": {
        "spearman": {"M1G1": "-8.39", "M1G2": "-26.04", "M1G3": "-4.63", "M1G4": "-56.35", "M1G5": "-37.83"},
        "pearson": {"M1G1": "-34.39", "M1G2": "-54.52", "M1G3": "+7.70", "M1G4": "-96.49", "M1G5": "+0.30"},
    },
    "FT-Yi-34B": {
        "spearman": {"M1G1": "+21.09", "M1G2": "-23.22", "M1G3": "-14.47", "M1G4": "-16.86", "M1G5": "-44.92"},
        "pearson": {"M1G1": "+21.18", "M1G2": "-22.85", "M1G3": "-12.51", "M1G4": "-18.94", "M1G5": "-36.41"},
    },
    "FT-Deepseek-67B": {
        "spearman": {"M1G1": "-17.20", "M1G2": "-4.43", "M1G3": "-6.53", "M1G4": "+25.91", "M1G5": "+5.71"},
        "pearson": {"M1G1": "+11.62", "M1G2": "-1.01", "M1G3": "+12.60", "M1G4": "+55.24", "M1G5": "+33.86"},
    },
}

MODEL_FAMILY = {
    "FT-COMETKIWI": "finetuned",
    "FT-TransQuest": "finetuned",
    "CFT-TransQuest": "finetuned",
    "MTL-XLM-V-base": "mtl",
    "MTL-XLM-R-large": "mtl",
    "Mixtral-8x7B": "llm",
    "Deepseek-67B": "llm",
    "FT-Yi-34B": "llm",
    "FT-Deepseek-67B": "llm",
}


def jdump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_jsonl(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(jdump(row) + "\n")


def digest_int(*parts: str) -> int:
    return int(hashlib.sha256("\x00".join(parts).encode("utf-8")).hexdigest()[:12], 16)


# --- Homophone pools read straight off the TSV ---------------------------------


def load_pools() -> tuple[dict[str, set[str]], dict[str, set[str]]]:
    char_to_syll: dict[str, set[str]] = {}
    syll_to_char: dict[str, set[str]] = {}
    for line in PINYIN_TSV.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        char, syll = line.split("\t")
        char_to_syll.setdefault(char, set()).add(syll)
        syll_to_char.setdefault(syll, set()).add(char)
    return char_to_syll, syll_to_char


def combos_for(word: str, c2s, s2c) -> list[str]:
    pools = []
    for char in word:
        pool: set[str] = set()
        for syll in c2s[char]:
            pool |= s2c[syll]
        pools.append(sorted(pool))
    return ["".join(p) for p in product(*pools)]


def count_overlapping(lines: list[str], target: str) -> int:
    total = 0
    for line in lines:
        start = line.find(target)
        while start != -1:
            total += 1
            start = line.find(target, start + 1)
    return total


# --- Corpus ---------------------------------------------------------------------


def build_corpus(c2s, s2c) -> list[str]:
    rng = random.Random(20240501)
    lines: list[str] = []

    wanted: list[str] = []
    for word, _, _, _ in SLANG_PLAN:
        wanted.extend(RANKED_FORMS[word])

    # Slang forms and originals embedded in short UGC-style lines.
    embeds = [(form, 110 + (i * 37) % 290) for i, form in enumerate(wanted)]
    embeds += [(word, 130 + (i * 23) % 120) for i, (word, _, _, _) in enumerate(SLANG_PLAN)]
    for form, target_count in embeds:
        for k in range(target_count):
            pre = PREFIXES[(k * 5 + len(form)) % len(PREFIXES)]
            body = BODIES[(k * 7 + ord(form[0])) % len(BODIES)]
            tail = TAILS[k % len(TAILS)]
            lines.append(f"{pre}{form}{body}{tail}")

    # Filler lines so the dictionary sees ordinary characters too.
    for i in range(600):
        lines.append(FILLERS[i % len(FILLERS)] + TAILS[i % len(TAILS)])

    # Character soup: every table character separated by a neutral particle so
    # no unintended pool-pair adjacency can form.
    table_chars = sorted(c2s)
    for repeat in range(6):
        for start in range(0, len(table_chars), 12):
            chunk = table_chars[start : start + 12]
            lines.append("的".join(chunk))

    rng.shuffle(lines)

    # Safety: exactly the ranked forms exceed the frequency-100 filter.
    all_combos: set[str] = set()
    for word, _, _, _ in SLANG_PLAN:
        all_combos.update(combos_for(word, c2s, s2c))
    originals = {word for word, _, _, _ in SLANG_PLAN}
    for combo in sorted(all_combos):
        n = count_overlapping(lines, combo)
        if combo in wanted:
            assert n > 100, f"wanted form {combo} has corpus count {n} <= 100"
        elif combo not in originals:
            assert n <= 100, f"unwanted combination {combo} has corpus count {n} > 100"
    for char in table_chars:
        assert count_overlapping(lines, char) >= 1, f"table character {char} missing from corpus"
    return lines


# --- Dataset --------------------------------------------------------------------


def build_dataset(corpus_lines: list[str]):
    rng = random.Random(20240502)
    instances = []
    serial = 0
    extended_budget = {"尼玛": 3, "特么": 2, "卧槽": 1}  # spans covering slang + particle

    for word, n_instances, translit, gloss in SLANG_PLAN:
        for k in range(n_instances):
            serial += 1
            pre = PREFIXES[(k * 3 + serial) % len(PREFIXES)]
            body = BODIES[(k * 5 + serial) % len(BODIES)]
            tail = TAILS[(k + serial) % len(TAILS)]
            extended = extended_budget.get(word, 0) > 0 and k < extended_budget[word]
            if extended:
                source = f"{pre}{word}的{body}{tail}"
                span = [len(pre), len(pre) + len(word) + 1]
            else:
                source = f"{pre}{word}{body}{tail}"
                span = [len(pre), len(pre) + len(word)]
            idx = (k * 7 + serial) % len(MT_BODIES)
            mt = f"{translit}{MT_BODIES[idx]}"
            tgt_span = [0, len(translit)]
            reference = f"{gloss[0].upper()}{gloss[1:]}, {REF_BODIES[idx]}"
            fixed_mt = f"{gloss}{MT_BODIES[idx]}"
            instances.append(
                {
                    "word": word,
                    "source": source,
                    "span": span,
                    "mt": mt,
                    "tgt_span": tgt_span,
                    "reference": reference,
                    "fixed_mt": fixed_mt,
                    "qe_score": round(rng.uniform(0.05, 0.95), 4),
                    "emotion_label": rng.choices(EMOTIONS, weights=[55, 8, 15, 10, 6, 6])[0],
                }
            )

    extras = []
    for i, source in enumerate(NO_SLANG_SOURCES):
        extras.append(
            {
                "word": None,
                "source": source,
                "span": None,
                "mt": f"An ordinary day, entry number {i + 1} in the diary.",
                "tgt_span": None,
                "reference": f"Just an ordinary day, diary entry {i + 1}.",
                "fixed_mt": None,
                "qe_score": round(rng.uniform(0.3, 0.99), 4),
                "emotion_label": rng.choices(EMOTIONS, weights=[5, 35, 10, 10, 5, 35])[0],
            }
        )

    combined = instances + extras
    rng.shuffle(combined)
    rows_all, rows_167, fixes = [], [], []
    slang_words = [w for w, _, _, _ in SLANG_PLAN]
    seen_sources = set()
    for i, item in enumerate(combined, start=1):
        iid = f"h{i:04d}"
        assert item["source"] not in seen_sources, f"duplicate source: {item['source']}"
        seen_sources.add(item["source"])
        row = {
            "id": iid,
            "source": item["source"],
            "mt": item["mt"],
            "qe_score": item["qe_score"],
            "src_error_spans": [item["span"]] if item["span"] else [],
            "tgt_error_spans": [item["tgt_span"]] if item["tgt_span"] else [],
            "reference": item["reference"],
            "emotion_label": item["emotion_label"],
        }
        rows_all.append(row)
        contains = [w for w in slang_words if w in item["source"]]
        if item["word"] is None:
            assert not contains, f"extra instance accidentally contains slang: {item['source']}"
        else:
            assert contains == [item["word"]] or set(contains) == {item["word"]}, (
                f"instance {iid} contains unexpected slang {contains}"
            )
            rows_167.append(row)
            fixes.append({"id": iid, "mt": item["fixed_mt"]})
            # Span bounds must survive both Method-2 rewrites.
            end = item["tgt_span"][1]
            assert end <= len(item["fixed_mt"]), f"{iid}: fix shorter than target span"
            assert end <= len(item["reference"]), f"{iid}: reference shorter than target span"

    assert len(rows_167) == 167, len(rows_167)
    assert len(rows_all) == 167 + len(NO_SLANG_SOURCES)
    per_word = {w: 0 for w in slang_words}
    for row in rows_167:
        for w in slang_words:
            if w in row["source"]:
                per_word[w] += 1
    assert per_word == {w: n for w, n, _, _ in SLANG_PLAN}, per_word
    return rows_all, rows_167, fixes


# --- Perturbation groups (independent re-implementation) ------------------------


def scan_replace(text: str, rules: dict[str, str]) -> str:
    out = []
    i = 0
    keys = sorted(rules)
    while i < len(text):
        for original in keys:
            if text.startswith(original, i):
                out.append(rules[original])
                i += len(original)
                break
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def build_groups(rows_167: list[dict], fixes: list[dict]) -> dict[str, list[dict]]:
    groups = {"G0": [dict(r) for r in rows_167]}
    for rank in range(1, 6):
        rules = {word: RANKED_FORMS[word][rank - 1] for word, _, _, _ in SLANG_PLAN}
        rows = []
        for row in rows_167:
            row = dict(row)
            row["source"] = scan_replace(row["source"], rules)
            rows.append(row)
        groups[f"M1G{rank}"] = rows
    fix_map = {f["id"]: f["mt"] for f in fixes}
    groups["M2G1"] = [{**row, "mt": fix_map[row["id"]]} for row in rows_167]
    groups["M2G2"] = [{**row, "mt": row["reference"]} for row in rows_167]
    return groups


# --- Cassettes ------------------------------------------------------------------


def fingerprint(kind: str, payload: dict) -> str:
    canonical = json.dumps(
        {"endpoint": kind, **payload}, ensure_ascii=False, sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def stub_qe_score(model: str, source: str, mt: str) -> float:
    return digest_int("qe-fixture", model, source, mt) / 16**12


def stub_emotion_label(text: str, gold: str) -> str:
    roll = digest_int("emo-fixture", text)
    if roll % 100 < 88:
        return gold
    return EMOTIONS[roll % len(EMOTIONS)]


def build_cassettes(groups: dict[str, list[dict]]):
    qe_rows, emo_rows = [], []
    seen = set()
    for group_name in ("G0", "M1G1", "M1G2", "M1G3", "M1G4", "M1G5", "M2G1", "M2G2"):
        for model in QE_MODELS:
            for row in groups[group_name]:
                key = fingerprint("qe", {"model": model, "source": row["source"], "mt": row["mt"]})
                if key in seen:
                    continue
                seen.add(key)
                qe_rows.append(
                    {"request_hash": key, "response": {"score": stub_qe_score(model, row["source"], row["mt"])}}
                )
    for group_name in ("G0", "M1G1", "M1G2", "M1G3", "M1G4", "M1G5"):
        for row in groups[group_name]:
            key = fingerprint("emotion", {"text": row["source"]})
            if key in seen:
                continue
            seen.add(key)
            emo_rows.append(
                {"request_hash": key, "response": {"label": stub_emotion_label(row["source"], row["emotion_label"])}}
            )
    return qe_rows, emo_rows


# --- Published-correlation fixture ----------------------------------------------


def build_published() -> dict:
    tolerance = Fraction(2, 100)
    models = {}
    adjusted = []
    for model in PUBLISHED_RAW:
        entry = {"family": MODEL_FAMILY[model], "raw": {}, "pct_published": {}}
        for metric in ("spearman", "pearson"):
            base = Fraction(PUBLISHED_RAW[model][metric]["G0"])
            raw_out = {"G0": PUBLISHED_RAW[model][metric]["G0"]}
            pct_out = {}
            for group in ("M1G1", "M1G2", "M1G3", "M1G4", "M1G5"):
                printed_raw = Fraction(PUBLISHED_RAW[model][metric][group])
                printed_pct = Fraction(PUBLISHED_PCT[model][metric][group])
                pct_out[group] = PUBLISHED_PCT[model][metric][group]
                err = abs((printed_raw - base) / base * 100 - printed_pct)
                if err <= tolerance:
                    raw_out[group] = PUBLISHED_RAW[model][metric][group]
                else:
                    # The printed percentage was computed from unrounded
                    # correlations; reconstruct a raw value consistent with it.
                    solved = base * (1 + printed_pct / 100)
                    solved_str = f"{float(solved):.6f}"
                    check = abs((Fraction(solved_str) - base) / base * 100 - printed_pct)
                    assert check <= tolerance, (model, metric, group, float(check))
                    raw_out[group] = solved_str
                    adjusted.append(
                        {
                            "model": model,
                            "metric": metric,
                            "group": group,
                            "appendix_value": PUBLISHED_RAW[model][metric][group],
                            "fixture_value": solved_str,
                            "pct_from_appendix_value": f"{float((printed_raw - base) / base * 100):.4f}",
                            "published_pct": PUBLISHED_PCT[model][metric][group],
                        }
                    )
            entry["raw"][metric] = raw_out
            entry["pct_published"][metric] = pct_out
        models[model] = entry
    return {
        "note": (
            "Raw correlations per model and perturbation group, with the published "
            "percentage-change cells. Cells listed under adjusted_cells carry more "
            "digits than the 4-decimal appendix print because the published percentage "
            "was computed from unrounded values; each adjusted value still rounds to "
            "within one unit in the fourth decimal of the printed one."
        ),
        "groups": ["G0", "M1G1", "M1G2", "M1G3", "M1G4", "M1G5"],
        "pct_tolerance": 0.02,
        "models": models,
        "adjusted_cells": adjusted,
    }


# --- Candidates + ratings --------------------------------------------------------


def build_candidates(c2s, s2c, corpus_lines: list[str]) -> list[dict]:
    char_counts: dict[str, int] = {}
    for line in corpus_lines:
        for ch in line:
            char_counts[ch] = char_counts.get(ch, 0) + 1
    rows = []
    for word, _, _, _ in SLANG_PLAN:
        cands = []
        for combo in combos_for(word, c2s, s2c):
            if combo == word:
                continue
            cands.append(
                {
                    "original": word,
                    "text": combo,
                    "F_h": sum(char_counts.get(ch, 0) for ch in combo),
                    "combo_freq": 101 + digest_int("combo-fixture", combo) % 420,
                    "percentile": None,
                    "self_info": None,
                }
            )
        cands.sort(key=lambda c: (-c["combo_freq"], c["text"]))
        rows.extend(cands)
    assert len(rows) == 172, len(rows)
    texts = {r["text"] for r in rows}
    for word in RANKED_FORMS:
        for form in RANKED_FORMS[word]:
            assert form in texts, f"ranked form {form} missing from candidate fixture"
    return rows


def build_ratings(candidates: list[dict]):
    ann1, ann2 = [], []
    for row in candidates:
        base = 1 + digest_int("rating-fixture", row["text"]) % 5
        delta = (-1, 0, 0, 1)[digest_int("rating-delta", row["text"]) % 4]
        other = min(5, max(1, base + delta))
        ann1.append(
            {
                "candidate_text": row["text"],
                "original_text": row["original"],
                "annotator_id": "annotator1",
                "score": base,
                "context_shown": False,
            }
        )
        ann2.append(
            {
                "candidate_text": row["text"],
                "original_text": row["original"],
                "annotator_id": "annotator2",
                "score": other,
                "context_shown": False,
            }
        )
    return ann1, ann2


# --- main ------------------------------------------------------------------------


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(REPO / "fixtures"))
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    c2s, s2c = load_pools()
    total = sum(len(combos_for(w, c2s, s2c)) - 1 for w, _, _, _ in SLANG_PLAN)
    assert total == 172, f"pinyin pools enumerate {total} candidates, expected 172"

    corpus_lines = build_corpus(c2s, s2c)
    (out / "corpus_smp_sample.txt").write_text("\n".join(corpus_lines) + "\n", encoding="utf-8")

    rows_all, rows_167, fixes = build_dataset(corpus_lines)
    write_jsonl(out / "hadqaet_sample_all.jsonl", rows_all)
    write_jsonl(out / "hadqaet_167.jsonl", rows_167)
    write_jsonl(out / "fixes_m2g1.jsonl", fixes)

    words = ["的", "了", "今天", "天气", "公交车", "外卖", "快递", "加班", "排队", "游戏"]
    words = [w for w, _, _, _ in SLANG_PLAN] + words
    (out / "word_list.txt").write_text("\n".join(words) + "\n", encoding="utf-8")

    rules_dir = out / "rules"
    rules_dir.mkdir(exist_ok=True)
    for rank in range(1, 6):
        write_jsonl(
            rules_dir / f"m1g{rank}.jsonl",
            [
                {"original": word, "replacement": RANKED_FORMS[word][rank - 1], "side": "source"}
                for word, _, _, _ in SLANG_PLAN
            ],
        )

    groups = build_groups(rows_167, fixes)
    qe_rows, emo_rows = build_cassettes(groups)
    write_jsonl(out / "cassettes" / "qe_replay.jsonl", qe_rows)
    write_jsonl(out / "cassettes" / "emotion_replay.jsonl", emo_rows)

    published = build_published()
    (out / "published_correlations.json").write_text(
        json.dumps(published, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    candidates = build_candidates(c2s, s2c, corpus_lines)
    write_jsonl(out / "candidates_172.jsonl", candidates)

    ann1, ann2 = build_ratings(candidates)
    write_jsonl(out / "ratings" / "annotator1.jsonl", ann1)
    write_jsonl(out / "ratings" / "annotator2.jsonl", ann2)

    config = {
        "corpus": "corpus_smp_sample.txt",
        "pinyin_table": "../src/homoprobe/data/pinyin_table.tsv",
        "dataset": "hadqaet_sample_all.jsonl",
        "word_list": "word_list.txt",
        "m1_rules": [f"rules/m1g{rank}.jsonl" for rank in range(1, 6)],
        "fixes": "fixes_m2g1.jsonl",
        "qe_cassette": "cassettes/qe_replay.jsonl",
        "emotion_cassette": "cassettes/emotion_replay.jsonl",
        "qe_models": list(QE_MODELS),
        "emotion_model": EMOTION_MODEL,
        "min_freq": 10,
        "combo_min": 100,
        "k": 5,
        "score_method": "percentile",
        "parallelism": 4,
        "seed": 0,
        "out_dir": "../out",
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")

    print(f"corpus lines: {len(corpus_lines)}")
    print(f"dataset: {len(rows_all)} total, {len(rows_167)} slang-bearing")
    print(f"cassettes: {len(qe_rows)} qe, {len(emo_rows)} emotion")
    print(f"candidates: {len(candidates)}")
    print(f"published cells adjusted: {len(published['adjusted_cells'])}")
    for cell in published["adjusted_cells"]:
        print(
            f"  {cell['model']} {cell['metric']} {cell['group']}: "
            f"appendix {cell['appendix_value']} -> fixture {cell['fixture_value']} "
            f"(published pct {cell['published_pct']}, appendix-derived {cell['pct_from_appendix_value']})"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
