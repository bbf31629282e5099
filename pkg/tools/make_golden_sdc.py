"""Freeze the expected SDC output for the bundled fixture corpus.

The selections come from the brute-force oracle in tests/oracles.py; only
the fallback embedding function is taken from the package.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from oracles import brute_force_sdc  # noqa: E402

from medos import FIXTURE_CORPUS  # noqa: E402
from medos.embed import hashed_ngram_vector  # noqa: E402

DIM = 256
K = 8
PERCENTILE = 85.0


def main():
    out = ROOT / "tests" / "fixtures" / "golden_sdc_fixture.jsonl"
    lines = []
    for line in FIXTURE_CORPUS.read_text(encoding="utf-8").splitlines():
        rec = json.loads(line)
        reviews = rec["reviews"]
        ids = [r["review_id"] for r in reviews]
        vecs = [hashed_ngram_vector(r["text"], DIM).tolist() for r in reviews]
        desc = rec.get("description")
        dvec = hashed_ngram_vector(desc, DIM).tolist() if desc else None
        qvecs = [hashed_ngram_vector(q["question"] + " " + q["answer"], DIM).tolist() for q in rec.get("qa") or []]
        for r_id, inputs, score in brute_force_sdc(ids, vecs, dvec, qvecs, K, PERCENTILE, 0.5, 0.5):
            lines.append({"product_id": rec["product_id"], "pseudo_summary_id": r_id,
                          "input_review_ids": inputs, "ss_score": score})
    lines.sort(key=lambda r: r["product_id"])  # stable: keeps per-product order
    out.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in lines), encoding="utf-8")
    print(out, len(lines))


if __name__ == "__main__":
    main()
