#!/usr/bin/env python3
"""Regenerates data/replay_fixture.json.

Keys are FNV-1a 64 of "<capability>\n<compact JSON, sorted keys>" in hex.
NER replies are listed by surface text; offsets are computed here.
"""
import json
import sys
from pathlib import Path

CAPTION_PROMPT = ("Describe this image in one sentence, naming any landmark "
                  "and where it is located.")

IMAGE_CAPTIONS = {
    "images/r07.jpg": "The Chhota Katra in Dhaka is a historical building.",
    "images/r10.jpg": "Children playing football near Atlantis Tower.",
    "images/r12.jpg": "Ahsan Manzil, a palace, is located in Dhaka near Lalbagh Ford.",
}

# caption -> [(surface, label)], each surface located left to right
NER = {
    "The Lalbagh Fort in Dhaka, Bangladesh is a UNESCO World Heritage Site.":
        [("The Lalbagh Fort", "FAC"), ("Dhaka", "GPE"), ("Bangladesh", "GPE"),
         ("UNESCO World Heritage Site", "ORG")],
    "The Lalbagh Fort in Dhaka, Bangladesh.":
        [("The Lalbagh Fort", "FAC"), ("Dhaka", "GPE"), ("Bangladesh", "GPE")],
    "Dhaka is the capital of Bangladesh.":
        [("Dhaka", "GPE"), ("Bangladesh", "GPE")],
    "The Lalbag Fort is a mosque in Dhaka.":
        [("The Lalbag Fort", "FAC"), ("Dhaka", "GPE")],
    "The Lalbagh Fort is a mosque in Dhaka.":
        [("The Lalbagh Fort", "FAC"), ("Dhaka", "GPE")],
    "The Taj Mahal is a mausoleum in Agra, India.":
        [("The Taj Mahal", "FAC"), ("Agra", "GPE"), ("India", "GPE")],
    "The Lalbagh Fort, located in Delhi, is a historical building.":
        [("The Lalbagh Fort", "FAC"), ("Delhi", "GPE")],
    "The Lalbagh Fort, located in Dhaka, is a historical building.":
        [("The Lalbagh Fort", "FAC"), ("Dhaka", "GPE")],
    "The old fort stands in Dhaka near the Sonargaon Museum.":
        [("Dhaka", "GPE"), ("the Sonargaon Museum", "FAC")],
    "The old fort stands in Dhaka.":
        [("Dhaka", "GPE")],
    "The Chhota Katra in Dhaka is a historical building.":
        [("The Chhota Katra", "FAC"), ("Dhaka", "GPE")],
    "Dhaka is a historical building.":
        [("Dhaka", "GPE")],
    "A dog runs on a sunny beach.": [],
    "A crowded street market in Paris, France.":
        [("Paris", "GPE"), ("France", "GPE")],
    "Children playing football near Atlantis Tower.":
        [("Atlantis Tower", "FAC")],
    "Children playing football.": [],
    "The Eiffel Tower is a lattice tower in Paris, France.":
        [("The Eiffel Tower", "FAC"), ("Paris", "GPE"), ("France", "GPE")],
    "Ahsan Manzil, a palace, is located in Dhaka near Lalbagh Ford.":
        [("Ahsan Manzil", "FAC"), ("Dhaka", "GPE"), ("Lalbagh Ford", "FAC")],
}


def fnv1a64(data: bytes) -> int:
    h = 0xcbf29ce484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001b3) & 0xFFFFFFFFFFFFFFFF
    return h


def key(capability: str, body: dict) -> str:
    text = capability + "\n" + json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return format(fnv1a64(text.encode("utf-8")), "016x")


def ner_reply(caption: str, surfaces):
    raw = caption.encode("utf-8")
    out, cursor = [], 0
    for surface, label in surfaces:
        start = raw.index(surface.encode("utf-8"), cursor)
        end = start + len(surface.encode("utf-8"))
        out.append({"text": surface, "label": label, "start": start, "end": end})
        cursor = end
    return {"entities": out}


def build() -> dict:
    fixture = {}
    for image, caption in IMAGE_CAPTIONS.items():
        fixture[key("caption", {"image": image, "prompt": CAPTION_PROMPT})] = {"text": caption}
    for caption, surfaces in NER.items():
        fixture[key("ner", {"text": caption})] = ner_reply(caption, surfaces)
    return dict(sorted(fixture.items()))


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "replay_fixture.json"
    out.write_text(json.dumps(build(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
