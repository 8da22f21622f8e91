#!/usr/bin/env python3
"""Build data/tables/trad_simp.tsv from OpenCC's TSCharacters.txt.

Keeps the first simplified candidate per traditional codepoint, drops
identity entries and multi-codepoint keys, and leaves out Cantonese
colloquial characters that must survive normalization unchanged.

usage: make_trad_simp.py TSCharacters.txt > data/tables/trad_simp.tsv
"""
import sys

# Colloquial Cantonese characters that OpenCC folds onto Mandarin forms.
KEEP = {"係", "嗰"}


def main(path):
    print("# traditional -> simplified, one codepoint per side")
    print("# source: OpenCC TSCharacters.txt (Apache-2.0), first candidate")
    print("# version: 1")
    for line in open(path, encoding="utf-8"):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        trad, cands = line.split("\t")
        simp = cands.split(" ")[0]
        if len(trad) != 1 or len(simp) != 1 or trad == simp or trad in KEEP:
            continue
        print(f"{trad}\t{simp}")


if __name__ == "__main__":
    main(sys.argv[1])
