"""Writes lexical_corpus.json: slides whose object texts each occur verbatim in
exactly one sentence, plus replacement object texts sharing no word with any
sentence."""
import json
import random

CONTENT = """apple river granite violin harbor lantern meadow copper falcon orchid
tundra saffron beacon glacier cobalt walnut prairie quartz timber lagoon
ember thistle canyon marble pepper summit willow basalt cedar nectar
plume raven delta fjord bramble juniper onyx pylon sorrel tarn
mesa kelp alder bison cirrus dune egret flint gorse heron""".split()
FILLER = """we then now see how this that also here look at consider note the
a about next further finally really quite just""".split()
DISJOINT = """zephyr quokka xylem yonder vortex umbra tapir sprocket rhombus
quince nimbus mortar lychee kiwi jackal ibex hazel gecko ferret dingo""".split()

rng = random.Random(20240611)
slides = []
for n in range(8):
    words = rng.sample(CONTENT, 16)
    n_obj = rng.randint(3, 5)
    objects, k = [], 0
    for _ in range(n_obj):
        size = rng.randint(1, 3)
        objects.append(" ".join(words[k:k + size]))
        k += size
    n_sent = n_obj + rng.randint(1, 2)
    hosts = rng.sample(range(n_sent), n_obj)
    sentences = []
    for i in range(n_sent):
        before = " ".join(rng.choices(FILLER, k=rng.randint(1, 4))).capitalize()
        after = " ".join(rng.choices(FILLER, k=rng.randint(1, 3)))
        if i in hosts:
            obj = objects[hosts.index(i)]
            sentences.append(f"{before} {obj} {after}.")
        else:
            sentences.append(f"{before} {after}.")
    planted = sorted([h, j] for j, h in enumerate(hosts))
    disjoint = [" ".join(rng.sample(DISJOINT, rng.randint(1, 3))) for _ in objects]
    slides.append({"objects": objects, "sentences": sentences, "planted": planted, "disjoint_objects": disjoint})

with open("lexical_corpus.json", "w") as f:
    json.dump({"format_version": 1, "slides": slides}, f, indent=2, sort_keys=True)
    f.write("\n")
