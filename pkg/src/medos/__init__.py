"""Opinion summarisation that fuses reviews with product descriptions and QA.

The package covers the whole loop: loading product corpora, building
synthetic training quadruplets from review similarity, a multi-encoder
summariser with gated fusion, beam-search decoding, ROUGE evaluation and
reference annotation through a text-generation endpoint.
"""

from pathlib import Path

from .corpus import Corpus, Product, QAPair, Review, load_corpus
from .generate import GenerationConfig, beam_search, summarize_product
from .model import ModelConfig, build_model, load_checkpoint, save_checkpoint
from .sdc import SdcHyperparams, SyntheticQuadruplet, build_quadruplets
from .train import TrainConfig, train

__version__ = "0.1.0"

DATA_DIR = Path(__file__).resolve().parent / "data"
FIXTURE_CORPUS = DATA_DIR / "fixture_products.jsonl"

__all__ = [
    "Corpus",
    "DATA_DIR",
    "FIXTURE_CORPUS",
    "GenerationConfig",
    "ModelConfig",
    "Product",
    "QAPair",
    "Review",
    "SdcHyperparams",
    "SyntheticQuadruplet",
    "TrainConfig",
    "beam_search",
    "build_model",
    "build_quadruplets",
    "load_checkpoint",
    "load_corpus",
    "save_checkpoint",
    "summarize_product",
    "train",
]
