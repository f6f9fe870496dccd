#!/usr/bin/env python3
"""Independent corpus-BLEU reference used to freeze expected test values.

Mirrors the documented scoring exactly: the frozen tokenizer (whitespace
split, every punctuation and every CJK code point its own token), clipped
n-gram matches summed over the corpus, orders that are empty on both sides
dropped from the geometric mean, optional add-eps smoothing, and the
exp(1 - ref/hyp) brevity penalty for short hypotheses.

Run with no arguments to print the constants that the C++ tests assert.
"""

import math
import string
import unicodedata
from collections import Counter


def _is_punct(cp: int) -> bool:
    if cp < 0x80:
        return chr(cp) in string.punctuation
    if 0x2010 <= cp <= 0x2027 or 0x2030 <= cp <= 0x205E:
        return True
    if cp in (0x00A1, 0x00BF, 0x00AB, 0x00BB, 0x2212):
        return True
    return _is_cjk_punct(cp) or cp == 0x3002


def _is_cjk_punct(cp: int) -> bool:
    return (
        0x3001 <= cp <= 0x303F
        or 0xFF00 <= cp <= 0xFF0F
        or 0xFF1A <= cp <= 0xFF20
        or 0xFF3B <= cp <= 0xFF40
        or 0xFF5B <= cp <= 0xFF65
        or cp == 0x30FB
    )


def _is_cjk(cp: int) -> bool:
    return (
        0x4E00 <= cp <= 0x9FFF
        or 0x3400 <= cp <= 0x4DBF
        or 0xF900 <= cp <= 0xFAFF
        or 0x3040 <= cp <= 0x30FF
        or 0xAC00 <= cp <= 0xD7AF
        or 0x20000 <= cp <= 0x2FFFF
    )


def tokenize(text: str, lowercase: bool = False) -> list[str]:
    tokens, current = [], []
    for ch in text:
        cp = ord(ch)
        if unicodedata.category(ch) == "Zs" or ch in "\t\n\r\f\v ":
            if current:
                tokens.append("".join(current))
                current = []
            continue
        if _is_cjk(cp) or _is_cjk_punct(cp) or _is_punct(cp):
            if current:
                tokens.append("".join(current))
                current = []
            tokens.append(ch)
            continue
        current.append(ch)
    if current:
        tokens.append("".join(current))
    if lowercase:
        tokens = [t.lower() for t in tokens]
    return tokens


def bleu_corpus(hyps, refs, max_n=4, smoothing="none", eps=0.1, lowercase=False):
    assert len(hyps) == len(refs) and hyps
    matches = [0] * max_n
    hyp_totals = [0] * max_n
    ref_totals = [0] * max_n
    hyp_len = ref_len = 0
    for h, r in zip(hyps, refs):
        ht, rt = tokenize(h, lowercase), tokenize(r, lowercase)
        assert rt, "empty reference"
        hyp_len += len(ht)
        ref_len += len(rt)
        for n in range(1, max_n + 1):
            hc = Counter(tuple(ht[i : i + n]) for i in range(len(ht) - n + 1))
            rc = Counter(tuple(rt[i : i + n]) for i in range(len(rt) - n + 1))
            hyp_totals[n - 1] += sum(hc.values())
            ref_totals[n - 1] += sum(rc.values())
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items() if g in rc)

    log_sum, orders_used, zero_precision = 0.0, 0, False
    for n in range(max_n):
        if hyp_totals[n] == 0 and ref_totals[n] == 0:
            continue  # too short to say
        orders_used += 1
        if hyp_totals[n] == 0:
            zero_precision = True
            continue
        p = matches[n] / hyp_totals[n]
        if matches[n] == 0:
            if smoothing == "add-eps":
                p = eps / hyp_totals[n]
            else:
                zero_precision = True
        if p > 0.0:
            log_sum += math.log(p)

    if hyp_len == 0:
        return 0.0
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    if zero_precision or orders_used == 0:
        return 0.0
    return 100.0 * bp * math.exp(log_sum / orders_used)


# The desk corpus shared verbatim with the acceptance suite.
DESK_PAIRS = [
    ("The old monk crossed the stone bridge at dawn.",
     "The old monk crossed the stone bridge at first light."),
    ("A cold wind moved through the empty courtyard.",
     "A cold wind swept through the deserted courtyard."),
    ("She folded the letter and placed it under the lamp.",
     "She folded the letter and set it beneath the lamp."),
    ("The general studied the map in silence.",
     "The general examined the map in silence."),
    ("Rain fell on the tiled roofs of the southern city.",
     "Rain was falling on the tiled roofs of the southern city."),
    ("He asked the boatman to wait until nightfall.",
     "He told the boatman to wait until nightfall."),
    ("The market smelled of ginger and burnt sugar.",
     "The market smelled of ginger and scorched sugar."),
    ("Two cranes rose from the marsh at the sound of footsteps.",
     "Two cranes lifted from the marsh at the sound of footsteps."),
    ("Nothing in the archive mentioned the missing year.",
     "Nothing in the archives mentioned the missing year."),
    ("The innkeeper lit a second candle without being asked.",
     "The innkeeper lit another candle without being asked."),
    ("Snow settled on the shoulders of the stone lions.",
     "Snow gathered on the shoulders of the stone lions."),
    ("His brother wrote from the frontier once every spring.",
     "His brother wrote from the frontier each spring."),
    ("The judge read the verdict in a flat voice.",
     "The judge read out the verdict in a flat voice."),
    ("Lanterns drifted down the river like slow sparks.",
     "The lanterns drifted down the river like slow sparks."),
    ("She memorized the poem before burning the page.",
     "She memorized the poem and then burned the page."),
    ("The caravan reached the wells three days late.",
     "The caravan arrived at the wells three days late."),
    ("An old map hung crooked above the magistrate's desk.",
     "An old map hung crookedly above the magistrate's desk."),
    ("The fisherman repeated the rumor to anyone who listened.",
     "The fisherman repeated the rumour to anyone who would listen."),
    ("By winter the garden wall had fallen in two places.",
     "By winter the garden wall had collapsed in two places."),
    ("The archivist sealed the letters with red wax.",
     "The archivist sealed the letters with crimson wax."),
]


if __name__ == "__main__":
    hyps = [h for h, _ in DESK_PAIRS]
    refs = [r for _, r in DESK_PAIRS]
    print("desk corpus, no smoothing : %.10f" % bleu_corpus(hyps, refs))
    print("desk corpus, add-eps      : %.10f" % bleu_corpus(hyps, refs, smoothing="add-eps"))
    print(
        "single pair, add-eps      : %.10f"
        % bleu_corpus(
            ["the cat sat on the mat"], ["the cat is on the mat"], smoothing="add-eps"
        )
    )
    print("identity                  : %.10f" % bleu_corpus(refs, refs))
