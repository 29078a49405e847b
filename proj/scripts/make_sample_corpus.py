#!/usr/bin/env python3
"""Generates the bundled synthetic parallel corpus with aligned AMR graphs.

Writes data/sample/{train,dev,test}.{en,de,amr}. Deterministic (seeded);
rerunning reproduces the checked-in files byte for byte.
"""

import random
from pathlib import Path

NOUNS = {
    "dog": "hund", "cat": "katze", "bird": "vogel", "horse": "pferd",
    "cow": "kuh", "king": "koenig", "queen": "koenigin", "wizard": "zauberer",
    "farmer": "bauer", "child": "kind", "wolf": "wolf", "bear": "baer",
    "fox": "fuchs", "rabbit": "hase", "fish": "fisch", "boat": "boot",
    "stone": "stein", "tree": "baum", "river": "fluss", "house": "haus",
}
VERBS = {
    "chases": ("chase-01", "jagt"), "sees": ("see-01", "sieht"),
    "greets": ("greet-01", "gruesst"), "follows": ("follow-01", "folgt"),
    "finds": ("find-01", "findet"), "helps": ("help-01", "hilft"),
    "calls": ("call-01", "ruft"), "likes": ("like-01", "mag"),
    "fears": ("fear-01", "fuerchtet"), "carries": ("carry-01", "traegt"),
}
ADJS = {
    "red": "rote", "big": "grosse", "small": "kleine", "old": "alte",
    "young": "junge", "happy": "frohe", "quick": "schnelle",
    "quiet": "stille", "brave": "tapfere", "sad": "traurige",
}
NAMES = ["Rex", "Luna", "Milo", "Bella", "Max"]


def np_amr(var, noun, adj, indent):
    pad = " " * indent
    if adj is None:
        return f"({var} / {noun})"
    return f"({var} / {noun}\n{pad}      :mod ({var}2 / {adj}))"


def gen_example(rng):
    kind = rng.choice(["plain", "plain", "coord", "rel", "named", "quant", "reent"])
    n1, n2, n3 = rng.sample(list(NOUNS), 3)
    a1 = rng.choice(list(ADJS)) if rng.random() < 0.5 else None
    a2 = rng.choice(list(ADJS)) if rng.random() < 0.4 else None
    v = rng.choice(list(VERBS))
    vc, vg = VERBS[v]

    def np_en(noun, adj):
        return f"the {adj} {noun}" if adj else f"the {noun}"

    def np_de(noun, adj, det):
        return f"{det} {ADJS[adj]} {NOUNS[noun]}" if adj else f"{det} {NOUNS[noun]}"

    if kind == "plain":
        en = f"{np_en(n1, a1)} {v} {np_en(n2, a2)} ."
        de = f"{np_de(n1, a1, 'der')} {vg} {np_de(n2, a2, 'den')} ."
        amr = (f"({vc[0]} / {vc}\n"
               f"      :ARG0 {np_amr('x', n1, a1, 6)}\n"
               f"      :ARG1 {np_amr('y', n2, a2, 6)})")
    elif kind == "coord":
        en = f"{np_en(n1, a1)} {v} the {n2} and the {n3} ."
        de = f"{np_de(n1, a1, 'der')} {vg} den {NOUNS[n2]} und den {NOUNS[n3]} ."
        amr = (f"({vc[0]} / {vc}\n"
               f"      :ARG0 {np_amr('x', n1, a1, 6)}\n"
               f"      :ARG1 (a / and\n"
               f"            :op1 (y / {n2})\n"
               f"            :op2 (z / {n3})))")
    elif kind == "rel":
        v2 = rng.choice([w for w in VERBS if w != v])
        v2c, v2g = VERBS[v2]
        en = f"{np_en(n1, a1)} {v} the {n2} that {v2} the {n3} ."
        de = f"{np_de(n1, a1, 'der')} {vg} den {NOUNS[n2]} der den {NOUNS[n3]} {v2g} ."
        amr = (f"({vc[0]} / {vc}\n"
               f"      :ARG0 {np_amr('x', n1, a1, 6)}\n"
               f"      :ARG1 (y / {n2}\n"
               f"            :ARG0-of (w / {v2c}\n"
               f"                  :ARG1 (z / {n3}))))")
    elif kind == "named":
        q = rng.choice(NAMES)
        en = f'the {n1} called " {q} " {v} {np_en(n2, a2)} .'
        de = f'der {NOUNS[n1]} namens " {q} " {vg} {np_de(n2, a2, "den")} .'
        amr = (f"({vc[0]} / {vc}\n"
               f"      :ARG0 (x / {n1}\n"
               f'            :name (n / name\n'
               f'                  :op1 "{q}"))\n'
               f"      :ARG1 {np_amr('y', n2, a2, 6)})")
    elif kind == "quant":
        k = rng.randint(2, 9)
        en = f"{np_en(n1, a1)} {v} {k} {n2}s ."
        de = f"{np_de(n1, a1, 'der')} {vg} {k} {NOUNS[n2]}s ."
        amr = (f"({vc[0]} / {vc}\n"
               f"      :ARG0 {np_amr('x', n1, a1, 6)}\n"
               f"      :ARG1 (y / {n2}\n"
               f"            :quant {k}))")
    else:  # reent
        v2 = rng.choice([w for w in VERBS if w != v])
        v2c, v2g = VERBS[v2]
        en = f"the {n1} {v} the {n2} and {v2} it ."
        de = f"der {NOUNS[n1]} {vg} den {NOUNS[n2]} und {v2g} ihn ."
        amr = (f"(a / and\n"
               f"      :op1 ({vc[0]} / {vc}\n"
               f"            :ARG0 (x / {n1})\n"
               f"            :ARG1 (y / {n2}))\n"
               f"      :op2 (b / {v2c}\n"
               f"            :ARG0 x\n"
               f"            :ARG1 y))")
    return en, de, amr, en.split()[0:0] or en


def main():
    rng = random.Random(20180214)
    out = Path(__file__).resolve().parent.parent / "data" / "sample"
    out.mkdir(parents=True, exist_ok=True)

    seen = set()
    examples = []
    while len(examples) < 600:
        en, de, amr, _ = gen_example(rng)
        if en in seen:
            continue
        seen.add(en)
        examples.append((en, de, amr))

    splits = {"train": examples[:500], "dev": examples[500:550], "test": examples[550:600]}
    for name, exs in splits.items():
        with open(out / f"{name}.en", "w") as f:
            f.write("".join(en + "\n" for en, _, _ in exs))
        with open(out / f"{name}.de", "w") as f:
            f.write("".join(de + "\n" for _, de, _ in exs))
        with open(out / f"{name}.amr", "w") as f:
            for i, (en, _, amr) in enumerate(exs):
                f.write(f"# ::id {name}.{i}\n# ::snt {en}\n{amr}\n\n")
    print("wrote", {k: len(v) for k, v in splits.items()}, "to", out)


if __name__ == "__main__":
    main()
