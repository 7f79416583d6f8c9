"""Random but valid stores for property and oracle tests."""

import random

from memir.atoms import AtomId, ClaimAtom, HandleAtom, PivotAtom, TimeAtom
from memir.compiler import InteractionHistory, Turn, build_views, paginate, segment_spans
from memir.retrieval.fusion import FusedHit
from memir.store import MemoryStore

VOCAB = (
    "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo lima mike "
    "november oscar papa quebec romeo sierra tango uniform victor whiskey yankee zulu"
).split()


def random_sentence(rng):
    words = [rng.choice(VOCAB) for _ in range(rng.randint(2, 7))]
    return " ".join(words).capitalize() + "."


def random_history(rng, pages, turns_per_page=(1, 4), sentences=(1, 3)):
    turns = []
    for p in range(pages):
        for _ in range(rng.randint(*turns_per_page)):
            text = " ".join(random_sentence(rng) for _ in range(rng.randint(*sentences)))
            turns.append(Turn(f"s{p}", rng.choice(["Ann", "Bo"]), text))
    return InteractionHistory(turns, "random")


def random_store(rng, max_atoms=200, pages=None, claims_per_page=(1, 6), cues_per_page=(0, 5)):
    """Pages, spans, cues, and claims with valid, randomly shared links."""
    pages = pages or rng.randint(1, 6)
    history = random_history(rng, pages)
    store = MemoryStore({"conversation_id": "random"})
    all_spans = []
    for page in paginate(history):
        store.add_atom(page)
        spans = segment_spans(page)
        store.extend(spans)
        all_spans.append(spans)
    for p, spans in enumerate(all_spans):
        if len(store) >= max_atoms:
            break
        cues = []
        for i in range(rng.randint(*cues_per_page)):
            if len(store) >= max_atoms:
                break
            span = rng.choice(spans)
            word = span.verbatim_text.split()[0]
            kind = rng.choice("HTV")
            if kind == "H":
                atom = HandleAtom(AtomId("H", p, sum(c.id.kind_tag == "H" for c in cues)), word, (span.id,))
            elif kind == "T":
                day = f"2023-01-{rng.randint(1, 28):02d}"
                norm = (day, day) if rng.random() < 0.7 else None
                atom = TimeAtom(AtomId("T", p, sum(c.id.kind_tag == "T" for c in cues)), word, norm, None if norm else word, (span.id,))
            else:
                atom = PivotAtom(AtomId("V", p, sum(c.id.kind_tag == "V" for c in cues)), word.lower(), (span.id,), word)
            store.add_atom(atom)
            cues.append(atom)
        for i in range(rng.randint(*claims_per_page)):
            if len(store) >= max_atoms:
                break
            own = rng.choice(spans)
            extra_pool = [s for group in all_spans[: p + 1] for s in group if s.id != own.id]
            extra = rng.sample(extra_pool, k=min(len(extra_pool), rng.randint(0, 2)))
            linked = rng.sample(cues, k=min(len(cues), rng.randint(0, 3)))
            support = tuple([own.id] + [s.id for s in extra])
            store.add_atom(ClaimAtom(AtomId("C", p, i), f"claim {p} {i} " + own.verbatim_text, support, tuple(c.id for c in linked)))
    for view in build_views(store):
        store.add_view(view)
    return store


def random_fused(rng, store, max_hits=100, rrf_k=60.0):
    """Fused hits over random atoms with scores from random route ranks."""
    ids = [i for i in store.atoms if i.kind_tag != "P"]
    chosen = rng.sample(ids, k=min(len(ids), rng.randint(1, max_hits)))
    hits = []
    for atom_id in chosen:
        routes = {f"r{j}": rng.randint(1, 50) for j in range(rng.randint(1, 5))}
        s = sum(1.0 / (rrf_k + r) for r in routes.values())
        hits.append(FusedHit(atom_id, s, routes))
    hits.sort(key=lambda h: (-h.s_ret, h.atom_id))
    return hits


NAMES = ["Alice", "Bruno", "Chen", "Dara", "Emeka", "Farah"]
PLACES = ["Lisbon", "Osaka", "Denver", "Nairobi", "Quito", "Oslo"]
THINGS = ["guitar", "garden", "bakery", "novel", "marathon", "kayak", "puppy", "studio"]
MONTHS = ["January", "March", "May", "July", "September", "November"]


def chat_sentence(rng):
    t = rng.randrange(5)
    if t == 0:
        return f"I visited {rng.choice(PLACES)} with {rng.choice(NAMES)} on {rng.randint(1, 28)} {rng.choice(MONTHS)} 2023."
    if t == 1:
        return f"My {rng.choice(THINGS)} project is going well."
    if t == 2:
        return f"{rng.choice(NAMES)} started a {rng.choice(THINGS)} class last week."
    if t == 3:
        return f"We plan to meet at {rng.randint(1, 11)} PM on Friday."
    return "That sounds great, tell me more."


def chat_history(rng, turns=2000, per_session=16):
    """Two-speaker dialogue with names, places and dates, for scale runs."""
    out = []
    for i in range(turns):
        session = i // per_session
        text = " ".join(chat_sentence(rng) for _ in range(rng.randint(1, 3)))
        out.append(Turn(f"session_{session}", ("Ann", "Bo")[i % 2], text, f"2023-{session % 12 + 1:02d}-01T10:00"))
    return InteractionHistory(out, "scale")
