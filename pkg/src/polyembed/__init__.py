"""Polysemous network embeddings: multiple facet vectors per node.

Subpackages cover the full pipeline: graph loading (`graph`), facet prior
estimation via NMF (`facets`), random-walk corpora (`walks`), the three
trainers (`polydeepwalk`, `polypte`, `polygcn`), facet-aware inference
(`inference`) and link-prediction / classification evaluation
(`evaluation`). The `polyembed` console script ties them together.
"""

from . import errors

__all__ = ["errors"]
__version__ = "0.1.0"
