"""Regenerate the bundled demo: corpus, config, answer files, and all
record/replay fixtures.

The embedding fixtures are synthetic but geometrically engineered: KB
vectors share a domain direction plus per-topic directions (so they
correlate like real sentence embeddings), and each query vector is solved
in closed form to hit exact target cosines against every KB sentence.
That makes the demo deterministic, offline, and calibrated: the
"materials" query scores 0.65/0.62/0.6 (proximity 1.88, compatible), the
"money" query 0.64/0.63 (1.27, minimal), and the "football" query matches
nothing.

Run from the repo root after `pip install -e .`:

    python3 scripts/build_demo_fixtures.py [--root DIR]
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

import numpy as np

from truster.corpus import chunk, ingest
from truster.embedding import EmbedConfig, save_embedding_fixture
from truster.gateway import ChatExchange, save_exchange
from truster.triplets import PromptPair, normalize_triplet

logger = logging.getLogger("build_demo_fixtures")

SEED = 20260814
DIMENSION = 384
EMBED_MODEL = "mini-sem-v1"
LLM_MODEL = "gpt-4"
T1 = 0.6
A = 0.12

CORPUS_TEXT = """\
Supply chains decide whether a business keeps its promises. When shelves are
full and orders arrive on time, it is because thousands of coordinated
decisions moved materials, information, and money in the right sequence. This
short overview describes what a supply chain is, the stages it includes, the
functions that operate it, and the management practices that hold it together.

A supply chain is the network of organizations, activities, and resources that
moves a product from its first input to the person who finally uses it. Every
supply chain begins with raw materials and ends with customers. Between those
two points it includes sourcing, and it includes procurement as the commercial
arm of sourcing decisions. A supply chain also includes manufacturing and
includes distribution, and at every tier it consists of suppliers that feed
the next stage. When all of the stages work together, the supply chain
delivers finished products on time and at the expected cost.

Each stage has a clear job. Sourcing identifies suppliers that can provide the
required inputs at acceptable cost and quality. Procurement purchases raw
materials from those suppliers and manages contracts and commercial terms.
Manufacturing transforms raw materials into sellable goods; said plainly,
manufacturing produces finished products. Distribution moves finished products
from factories toward the markets where people buy them, and distribution
relies on logistics to make that movement efficient.

Logistics coordinates transportation across trucks, ships, rail, and air so
that goods arrive when they are needed. Warehouses store inventory close to
demand, which shortens delivery times. Inventory management balances supply
and demand, holding enough stock to serve orders without tying up too much
working capital. At the end of the chain, retailers sell finished products in
stores and online, and customers receive finished products along with the
service that comes with them.

Above the physical flow sits a layer of coordination. Supply chain management
coordinates suppliers across every stage, aligning their plans with the needs
of the business, and well-run supply chain management reduces costs year after
year. Demand forecasting guides production planning, and production planning
schedules manufacturing so that capacity is neither idle nor overloaded.
Quality control inspects finished products before they ship to customers.
Finally, supply chain visibility requires information sharing among partners,
because no single company can see the whole chain alone.
"""

# Raw extractor output for the corpus chunk: entry 0 and the final entry
# normalize to the same triplet (dedup coverage); stray case, whitespace and
# trailing punctuation exercise normalization. 26 raw rows, 25 unique.
KB_RAW_TRIPLETS = [
    ["Supply chain", "includes", "sourcing"],
    ["supply chain", "includes", "procurement"],
    ["supply chain", "consists of", "suppliers"],
    ["supply chain", "includes", "manufacturing"],
    ["supply chain", "includes", "distribution"],
    ["supply chain", "delivers", "finished products"],
    ["supply chain", "begins with", "raw materials"],
    ["supply chain", "ends with", "customers"],
    ["Sourcing", "identifies", "suppliers"],
    ["procurement", "purchases", "raw  materials"],
    ["manufacturing", "transforms", "raw materials"],
    ["manufacturing", "produces", "finished products"],
    ["distribution", "moves", "finished products"],
    ["distribution", "relies on", "logistics"],
    ["logistics", "coordinates", "transportation"],
    ["warehouses", "store", "inventory"],
    ["inventory management", "balances", "supply and demand"],
    ["retailers", "sell", "finished products."],
    ["customers", "receive", "finished products"],
    ["supply chain management", "coordinates", "suppliers"],
    ["supply chain management", "reduces", "costs"],
    ["demand forecasting", "guides", "production planning"],
    ["production planning", "schedules", "manufacturing"],
    ["quality control", "inspects", "finished products"],
    ["supply chain visibility", "requires", "information sharing"],
    ["supply chain", "includes", "sourcing"],
]

# Topic groups for the KB geometry: 0 = chain structure, 1 = operations,
# 2 = planning and retail. Queries aim at group 0.
KB_GROUPS = [0] * 8 + [1] * 7 + [2] * 10

QUERIES = {
    # sentence -> (targets by KB position, everything else clamped below)
    "suppliers provide materials": {0: 0.6512, 1: 0.6243, 2: 0.6031},
    "suppliers provide money": {0: 0.6412, 2: 0.6287, 1: 0.5821},
    "supply chain plays football": {},
}
# non-target scores never reach these caps
CLAMP = {"suppliers provide materials": 0.58, "suppliers provide money": 0.58,
         "supply chain plays football": 0.4183}

ANSWERS = {
    "materials.txt": "Suppliers provide materials.\n",
    "money.txt": "Suppliers provide money.\n",
    "football.txt": "Supply chain plays football.\n",
    "combined.txt": "Suppliers provide materials. Supply chain plays football.\n",
    "noise.txt": "Thanks for asking!\n",
}

ANSWER_EXTRACTIONS = {
    "materials.txt": [["Suppliers ", "provide", "materials"]],
    "money.txt": [["suppliers", "provide", "money"]],
    "football.txt": [["supply chain", "plays", "football"]],
    "combined.txt": [
        ["suppliers", "provide", "materials"],
        ["supply chain", "plays", "football"],
    ],
    "noise.txt": [],
}

ASK_QUESTION = "What do suppliers provide?"
ASK_ANSWER = "Suppliers provide materials."

CONFIG_TEXT = f"""\
# demo configuration: offline replay against bundled fixtures
t1 = {T1!r}
a = {A!r}
mode = "replay"
max_chunk_chars = 6000
llm_model = "{LLM_MODEL}"
embed_provider = "remote"
embed_model = "{EMBED_MODEL}"
embed_dimension = {DIMENSION}
fixtures_dir = "fixtures"
prompts_dir = "../prompts"
"""


def kb_sentences() -> list[str]:
    seen: list[str] = []
    for raw in KB_RAW_TRIPLETS:
        t = normalize_triplet(raw[0], raw[1], raw[2], origin="knowledge_base", source_id="x")
        assert t is not None, raw
        sentence = f"{t.subject} {t.predicate} {t.object}"
        if sentence not in seen:
            seen.append(sentence)
    return seen


def build_kb_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    """Unit rows sharing a domain direction + one of three topic directions."""

    def unit(v: np.ndarray) -> np.ndarray:
        return v / np.linalg.norm(v)

    domain = unit(rng.standard_normal(DIMENSION))
    topics = []
    for _ in range(3):
        t = rng.standard_normal(DIMENSION)
        t -= (t @ domain) * domain
        topics.append(unit(t))
    rows = []
    for i in range(n):
        noise = rng.standard_normal(DIMENSION)
        noise -= (noise @ domain) * domain
        noise -= (noise @ topics[KB_GROUPS[i]]) * topics[KB_GROUPS[i]]
        rows.append(unit(0.72 * domain + 0.45 * topics[KB_GROUPS[i]] + 0.52 * unit(noise)))
    return np.vstack(rows)


def solve_query(
    rng: np.random.Generator, K: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Unit vector q with K @ q == targets exactly (to solver precision)."""
    gram = K @ K.T
    weights = np.linalg.solve(gram, targets)
    q_span = K.T @ weights
    span_sq = float(targets @ weights)
    if span_sq > 0.98:
        raise RuntimeError(f"targets need ||q_span||^2 = {span_sq:.4f}; geometry infeasible")
    residual = rng.standard_normal(DIMENSION)
    residual -= K.T @ np.linalg.solve(gram, K @ residual)
    residual /= np.linalg.norm(residual)
    q = q_span + np.sqrt(1.0 - span_sq) * residual
    achieved = K @ q
    err = float(np.max(np.abs(achieved - targets)))
    norm_err = abs(float(np.linalg.norm(q)) - 1.0)
    if err > 1e-9 or norm_err > 1e-12:
        raise RuntimeError(f"solver drift: cosine err {err:.2e}, norm err {norm_err:.2e}")
    return q


def engineer_targets(
    sentence: str, natural: np.ndarray
) -> np.ndarray:
    targets = np.minimum(natural, CLAMP[sentence])
    for pos, value in QUERIES[sentence].items():
        targets[pos] = value
    return targets


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--root",
        type=Path,
        default=Path(__file__).resolve().parent.parent,
        help="repo root holding demo/ and prompts/",
    )
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    root: Path = args.root
    demo = root / "demo"
    if demo.exists():
        shutil.rmtree(demo)
    (demo / "corpus").mkdir(parents=True)
    (demo / "answers").mkdir()
    llm_dir = demo / "fixtures" / "llm"
    embed_dir = demo / "fixtures" / "embeddings"
    llm_dir.mkdir(parents=True)
    embed_dir.mkdir(parents=True)

    corpus_file = demo / "corpus" / "supply_chain.txt"
    corpus_file.write_text(CORPUS_TEXT, encoding="utf-8")
    (demo / "config.toml").write_text(CONFIG_TEXT, encoding="utf-8")
    for name, text in ANSWERS.items():
        (demo / "answers" / name).write_text(text, encoding="utf-8")

    # LLM fixtures are keyed on the exact prompt + chunk text the pipeline
    # will send, so derive both through the package itself.
    prompts = PromptPair.load(root / "prompts")
    [doc] = ingest([corpus_file])
    logger.info("corpus: %d words", doc.word_count)
    chunks = chunk(doc, max_chunk_chars=6000)
    assert len(chunks) == 1, f"demo corpus must fit one chunk, got {len(chunks)}"

    def record_chat(instructions: str, user_text: str, response: str) -> None:
        exchange = ChatExchange.create(
            assistant_instructions=instructions,
            user_content=user_text,
            response_text=response,
            model_name=LLM_MODEL,
        )
        save_exchange(llm_dir, exchange, LLM_MODEL)

    def record_extraction(user_text: str, rows: list[list[str]]) -> None:
        body = json.dumps(rows, ensure_ascii=False, indent=2)
        record_chat(prompts.assistant_instructions, user_text, f"```json\n{body}\n```")

    record_extraction(prompts.user_content(chunks[0].text), KB_RAW_TRIPLETS)
    for name, rows in ANSWER_EXTRACTIONS.items():
        record_extraction(prompts.user_content(ANSWERS[name].strip()), rows)
    record_chat("", ASK_QUESTION, ASK_ANSWER)
    logger.info("wrote %d chat fixtures", len(list(llm_dir.glob("*.json"))))

    # Embedding fixtures: engineered geometry.
    sentences = kb_sentences()
    assert len(sentences) == 25, f"expected 25 unique KB sentences, got {len(sentences)}"
    assert sentences[0] == "supply chain includes sourcing"
    assert sentences[1] == "supply chain includes procurement"
    assert sentences[2] == "supply chain consists of suppliers"

    rng = np.random.default_rng(SEED)
    K = build_kb_vectors(rng, len(sentences))
    provider_id = EmbedConfig(model_name=EMBED_MODEL, dimension=DIMENSION).provider_id

    for sentence, vector in zip(sentences, K):
        save_embedding_fixture(embed_dir, provider_id, sentence, vector.tolist())

    report: dict[str, dict[str, float]] = {}
    for sentence in QUERIES:
        base = 0.62 * K[0] + 0.38 * K[9] + 0.25 * K[17]
        if sentence == "supply chain plays football":
            off = rng.standard_normal(DIMENSION)
            base = 0.45 * base + 0.9 * off / np.linalg.norm(off)
        base /= np.linalg.norm(base)
        natural = K @ base
        targets = engineer_targets(sentence, natural)
        q = solve_query(rng, K, targets)
        save_embedding_fixture(embed_dir, provider_id, sentence, q.tolist())

        scores = K @ q
        matched = {
            sentences[i]: float(scores[i]) for i in np.flatnonzero(scores >= T1)
        }
        report[sentence] = matched
        top = max(scores)
        logger.info(
            "%-30s matches=%d proximity=%.4f top_nonmatch=%.4f",
            sentence,
            len(matched),
            sum(matched.values()),
            max((s for s in scores if s < T1), default=float("nan")),
        )
        assert top <= 1.0 + 1e-9

    t2 = T1 * A * len(sentences)
    materials = report["suppliers provide materials"]
    money = report["suppliers provide money"]
    football = report["supply chain plays football"]
    assert [round(v, 2) for v in materials.values()] == [0.65, 0.62, 0.6]
    assert round(sum(materials.values()), 2) == 1.88 and sum(materials.values()) >= t2
    assert [round(v, 2) for v in money.values()] == [0.64, 0.63]
    assert round(sum(money.values()), 2) == 1.27 and 0 < sum(money.values()) < t2
    assert not football
    logger.info("calibration holds: t2=%.4f, verdicts compatible/minimal/none", t2)
    logger.info("wrote %d embedding fixtures", len(list(embed_dir.glob("*.json"))))
    return 0


if __name__ == "__main__":
    sys.exit(main())
