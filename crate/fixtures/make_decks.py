"""Author the checked-in fixture decks with python-pptx.

Run from the repository root:  python3 fixtures/make_decks.py
"""
import io
import struct
import zlib

from pptx import Presentation
from pptx.util import Emu, Pt

TITLE_ONLY = 5
BLANK = 6


def tiny_png():
    raw = b"".join(b"\x00" + b"\x80\x80\x80" * 4 for _ in range(4))

    def chunk(tag, data):
        body = tag + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)

    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", struct.pack(">IIBBBBB", 4, 4, 8, 2, 0, 0, 0))
        + chunk(b"IDAT", zlib.compress(raw))
        + chunk(b"IEND", b"")
    )


def place(shape, left, top, width, height):
    shape.left, shape.top, shape.width, shape.height = Emu(left), Emu(top), Emu(width), Emu(height)


def fill(frame, lines, size=None):
    """lines: list of (text, level)."""
    frame.text = lines[0][0]
    frame.paragraphs[0].level = lines[0][1]
    for text, level in lines[1:]:
        p = frame.add_paragraph()
        p.text = text
        p.level = level
    if size is not None:
        for p in frame.paragraphs:
            for r in p.runs:
                r.font.size = Pt(size)


def titled(prs, title, title_geom=(457200, 274320, 8229600, 1143000)):
    slide = prs.slides.add_slide(prs.slide_layouts[TITLE_ONLY])
    slide.shapes.title.text = title
    place(slide.shapes.title, *title_geom)
    for r in slide.shapes.title.text_frame.paragraphs[0].runs:
        r.font.size = Pt(40)
    return slide


def textbox(slide, geom, lines, size=24):
    box = slide.shapes.add_textbox(Emu(geom[0]), Emu(geom[1]), Emu(geom[2]), Emu(geom[3]))
    fill(box.text_frame, lines, size)
    return box


def notes(slide, text):
    slide.notes_slide.notes_text_frame.text = text


def ingest_deck(path):
    prs = Presentation()
    # slide 1: title at known inch coordinates (1in, 1in, 2in x 1in)
    s1 = titled(prs, "Script-to-Slide Grounding", (914400, 914400, 1828800, 914400))
    notes(s1, "This talk introduces grounding. It maps narration to slide text.")

    # slide 2: title + one 2-level bulleted text box
    s2 = titled(prs, "Pipeline")
    textbox(
        s2,
        (914400, 1828800, 7315200, 3657600),
        [("Ingest the deck", 0), ("Read slide XML", 1), ("Build the hierarchy", 1), ("Ground each sentence", 0)],
    )
    notes(s2, "The pipeline has two stages. Accuracy was 92.4 percent.\nGrounding comes last")

    # slide 3: one text box and a picture, no notes
    s3 = prs.slides.add_slide(prs.slide_layouts[BLANK])
    textbox(s3, (0, 0, 9144000, 6858000), [("Full bleed", 0)], size=18)
    s3.shapes.add_picture(io.BytesIO(tiny_png()), Emu(4572000), Emu(3429000), Emu(914400), Emu(914400))
    prs.save(path)


TALK = [
    (
        "Caching Strategies for Web Services",
        [("Why caching matters", 0), ("Reduce latency", 1), ("Lower database load", 1), ("Common cache layers", 0)],
        None,
        "Today we look at caching strategies for web services. Caching matters for two main reasons. "
        "First, it cuts the latency that users experience. Second, it lowers the load on the database. "
        "Let me begin with a short story from my first job.",
    ),
    (
        "Cache Layers",
        [("Browser cache", 0), ("CDN edge cache", 0), ("Application cache", 0), ("In-process memory", 1), ("Distributed store", 1)],
        None,
        "There are several layers where data can be cached. The browser cache sits closest to the user. "
        "A CDN keeps copies at edge locations. "
        "Inside the application we can keep data in process memory or in a distributed store. "
        "Each layer trades freshness for speed.",
    ),
    (
        "Invalidation",
        [("Time-to-live expiry", 0), ("Explicit purge on write", 0), ("Versioned keys", 0)],
        None,
        "Invalidation is the hard part. The simplest approach is a time-to-live on every entry. "
        "Writers can also purge entries explicitly. Versioned keys avoid purges entirely. "
        "We used all three in production.",
    ),
    (
        "Measured Results",
        [("Hit rate rose to 92.4 percent", 0), ("p99 latency fell by 40 ms", 0)],
        [("Numbers from a two-week trial", 0)],
        "Here are the measured results. The hit rate rose to 92.4 percent. "
        "Tail latency at the 99th percentile fell by 40 ms. These numbers come from a two-week trial. "
        "Overall the results were encouraging.",
    ),
    (
        "Summary",
        [("Cache close to the user", 0), ("Plan invalidation early", 0), ("Measure before tuning", 0)],
        None,
        "To summarize. Put caches close to the user. Plan your invalidation strategy early. "
        "Always measure before tuning. Thank you for listening.",
    ),
]


def talk_deck(path):
    prs = Presentation()
    for title, body, aside, script in TALK:
        slide = titled(prs, title)
        textbox(slide, (457200, 1600200, 8229600, 3657600), body)
        if aside:
            textbox(slide, (457200, 5486400, 8229600, 914400), aside, size=14)
        notes(slide, script)
    prs.save(path)


if __name__ == "__main__":
    ingest_deck("fixtures/ingest/three_slides.pptx")
    talk_deck("fixtures/talk/talk.pptx")
